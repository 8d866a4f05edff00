//! Unstable/stable splitting, finite-rank feedback synthesis at a target
//! decay rate, block-triangular non-destabilization checks, and the
//! extended system realizing a dynamic controller.

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::criteria::{check_admissible, ActuatorFamily};
use crate::error::{Error, Result};
use crate::models::{ActuatorKind, InputModel};
use crate::numeric::{eigenvalue_multiset_distance, eigenvalues, frob, spectral_abscissa};
use crate::riccati::solve_care;
use crate::spectral::{oblique_split, Projector, SpectralData};

/// The system split along the `Re = -sigma` line: an unstable block in an
/// invariant-subspace basis, the projected input, and the complementary
/// stable block.
#[derive(Debug, Clone)]
pub struct SplitSystem {
    pub projector: Projector,
    /// Unstable block `A_N` (restriction of `A` to the selected invariant
    /// subspace in the `basis` coordinates).
    pub a_block: Array2<f64>,
    /// Projected input columns `B v_j` in block coordinates.
    pub b_block: Array2<f64>,
    /// Largest real part over the excluded clusters (`-inf` when nothing
    /// is excluded); this is the abscissa the stable part keeps.
    pub stable_abscissa: f64,
    /// Orthonormal basis of the unstable invariant subspace (n x d).
    pub basis: Array2<f64>,
    /// Dual basis: block coordinates of a state are `adjoint_basis^T y`,
    /// and `basis^T adjoint_basis = I`.
    pub adjoint_basis: Array2<f64>,
    /// Complementary quasi-triangular block (spectrum of the stable part).
    pub stable_block: Array2<f64>,
    pub sigma: f64,
    pub selected_clusters: Vec<usize>,
    /// Frobenius norm of the full generator, the tolerance scale.
    pub generator_norm: f64,
}

impl SplitSystem {
    /// Unstable block dimension `d_N`.
    pub fn dim(&self) -> usize {
        self.a_block.nrows()
    }
}

/// Split `y' = A y + B V u` along the `Re = -sigma` line.
pub fn split_system(
    a: &Array2<f64>,
    b: &InputModel,
    v: &ActuatorFamily,
    sigma: f64,
    spectrum: &SpectralData,
) -> Result<SplitSystem> {
    if b.state_dim() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "input matrix has {} state rows, generator is {}x{}",
            b.state_dim(),
            a.nrows(),
            a.ncols()
        )));
    }
    if v.dim() != b.control_dim() {
        return Err(Error::DimensionMismatch(
            "actuator directions do not match the control dimension of B".into(),
        ));
    }
    let split = oblique_split(a, spectrum, sigma)?;
    let adjoint = split.adjoint_basis();
    let bv = b.matrix.dot(&v.as_matrix());
    let b_block = adjoint.t().dot(&bv);
    Ok(SplitSystem {
        projector: Projector {
            matrix: split.projector_matrix(),
            selected_clusters: split.selected_clusters.clone(),
            rank: split.dim,
        },
        a_block: split.t11.clone(),
        b_block,
        stable_abscissa: spectrum.excluded_abscissa(sigma),
        basis: split.q1.clone(),
        adjoint_basis: adjoint,
        stable_block: split.t22.clone(),
        sigma,
        selected_clusters: split.selected_clusters,
        generator_norm: spectrum.generator_norm,
    })
}

/// How the unstable-block gain is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisMethod {
    Lqr,
    PolePlacement,
}

/// A finite-rank feedback law `F y = sum_j (y, kernel_j) v_j` together
/// with the dense closed-loop matrix it induces.
#[derive(Debug, Clone)]
pub struct FeedbackLaw {
    /// Kernels in state space; they span a subspace of `range(P_N^T)`.
    pub kernels: Vec<Array1<f64>>,
    pub directions: ActuatorFamily,
    /// Gain on the unstable block coordinates (`K x d_N`).
    pub gain: Array2<f64>,
    /// Input columns `B v_j` in state space (`n x K`).
    pub input_directions: Array2<f64>,
    pub closed_loop: Array2<f64>,
    pub target_sigma: f64,
    pub margin_eps: f64,
    pub method: SynthesisMethod,
}

impl FeedbackLaw {
    /// The `K x n` state-space observation map: `u(t) = map . y(t)`.
    pub fn state_gain_map(&self) -> Array2<f64> {
        let n = self.kernels.first().map_or(0, |k| k.len());
        let mut map = Array2::zeros((self.kernels.len(), n));
        for (j, k) in self.kernels.iter().enumerate() {
            for i in 0..n {
                map[[j, i]] = k[i];
            }
        }
        map
    }
}

fn place_poles(
    a_block: &Array2<f64>,
    b_block: &Array2<f64>,
    targets: &[f64],
) -> Result<Array2<f64>> {
    let d = a_block.nrows();
    let k = b_block.ncols();
    for attempt in 0u64..8 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9E37_79B9 + attempt);
        let normal = StandardNormal;
        let g = Array2::from_shape_fn((k, d), |_| {
            let x: f64 = normal.sample(&mut rng);
            x
        });
        // Columns of X solve (A - lambda_j) x_j = -B g_j; then
        // (A + B G X^{-1}) X = X diag(targets).
        let mut x = Array2::zeros((d, d));
        let mut ok = true;
        for (j, &lambda) in targets.iter().enumerate() {
            let mut shifted = a_block.clone();
            for i in 0..d {
                shifted[[i, i]] -= lambda;
            }
            let rhs = b_block.dot(&g.column(j).to_owned()).mapv(|v| -v);
            match shifted.solve(&rhs) {
                Ok(col) => {
                    for i in 0..d {
                        x[[i, j]] = col[i];
                    }
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        // F = G X^{-1} via X^T F^T = G^T.
        let xt = x.t().to_owned();
        let mut ft = Array2::zeros((d, k));
        let mut solvable = true;
        for j in 0..k {
            match xt.solve(&g.row(j).to_owned()) {
                Ok(col) => {
                    for i in 0..d {
                        ft[[i, j]] = col[i];
                    }
                }
                Err(_) => {
                    solvable = false;
                    break;
                }
            }
        }
        if !solvable {
            continue;
        }
        let f = ft.t().to_owned();
        let closed = a_block + &b_block.dot(&f);
        let got = eigenvalues(&closed)?;
        let want: Vec<Complex64> = targets.iter().map(|&t| Complex64::new(t, 0.0)).collect();
        let scale = frob(a_block).max(1.0);
        if let Some(dist) = eigenvalue_multiset_distance(&got, &want) {
            if dist <= 1e-6 * scale {
                return Ok(f);
            }
        }
    }
    Err(Error::Numerical(
        "pole placement failed to reach the requested eigenvalues".into(),
    ))
}

/// Synthesize the finite-rank feedback achieving decay rate `sigma` with
/// margin `eps` on the unstable block, leaving the stable block untouched.
///
/// For `Lqr` the gain solves the unit-weight Riccati equation for the
/// shifted block `A_N + (sigma + eps) I`; for `PolePlacement` the block
/// eigenvalues move to `-sigma - eps - {1, .., d_N}`.
pub fn synthesize_feedback(
    a: &Array2<f64>,
    b: &InputModel,
    v: &ActuatorFamily,
    spectrum: &SpectralData,
    sigma: f64,
    eps: f64,
    method: SynthesisMethod,
) -> Result<(FeedbackLaw, SplitSystem)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let report = check_admissible(b, v, spectrum, Some(sigma))?;
    if !report.overall_admissible {
        let failing = report
            .entries
            .iter()
            .find(|e| !e.pass)
            .map(|e| format!("cluster {} at lambda = {}", e.cluster, e.lambda))
            .unwrap_or_else(|| "unknown cluster".into());
        return Err(Error::NotStabilizable(format!(
            "the actuator family is not admissible at sigma = {sigma}: rank deficiency on {failing}"
        )));
    }
    let split = split_system(a, b, v, sigma, spectrum)?;
    let gap = -sigma - split.stable_abscissa;
    if split.dim() < a.nrows() && eps >= gap {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps} must stay below the gap {gap:.6} to the first stable cluster"
        )));
    }
    let d = split.dim();
    let k = v.len();
    let bv = b.matrix.dot(&v.as_matrix());

    let gain: Array2<f64> = if d == 0 {
        Array2::zeros((k, 0))
    } else {
        match method {
            SynthesisMethod::Lqr => {
                let mut shifted = split.a_block.clone();
                for i in 0..d {
                    shifted[[i, i]] += sigma + eps;
                }
                let x = solve_care(&shifted, &split.b_block)?;
                split.b_block.t().dot(&x).mapv(|g| -g)
            }
            SynthesisMethod::PolePlacement => {
                let targets: Vec<f64> =
                    (1..=d).map(|j| -sigma - eps - j as f64).collect();
                place_poles(&split.a_block, &split.b_block, &targets)?
            }
        }
    };

    if d > 0 {
        let closed_block = &split.a_block + &split.b_block.dot(&gain);
        let alpha = spectral_abscissa(&closed_block)?;
        if alpha >= -sigma {
            return Err(Error::Numerical(format!(
                "synthesized block abscissa {alpha:.6} does not clear the target {}",
                -sigma
            )));
        }
    }

    let kernels: Vec<Array1<f64>> = (0..k)
        .map(|j| split.adjoint_basis.dot(&gain.row(j).to_owned()))
        .collect();
    let closed_loop = a + &bv.dot(&gain).dot(&split.adjoint_basis.t());
    let law = FeedbackLaw {
        kernels,
        directions: v.clone(),
        gain,
        input_directions: bv,
        closed_loop,
        target_sigma: sigma,
        margin_eps: eps,
        method,
    };
    Ok((law, split))
}

/// Result of the block-triangular spectrum check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonDestabilizationReport {
    /// Spectral abscissa of the dense closed loop.
    pub abscissa: f64,
    /// Worst distance in the multiset match between the closed-loop
    /// spectrum and `spec(A_N + B_N gain) [union] spec(stable block)`.
    pub eigenvalue_match_distance: f64,
    pub pass: bool,
}

/// The feedback only acts through the unstable coordinates, so the
/// closed loop is block lower-triangular in the decoupled basis: its
/// spectrum is exactly the union of the moved block and the untouched
/// stable block.
pub fn verify_non_destabilization(
    law: &FeedbackLaw,
    split: &SplitSystem,
) -> Result<NonDestabilizationReport> {
    let closed_eigs = eigenvalues(&law.closed_loop)?;
    let mut expected = Vec::new();
    if split.dim() > 0 {
        let moved = &split.a_block + &split.b_block.dot(&law.gain);
        expected.extend(eigenvalues(&moved)?);
    }
    expected.extend(eigenvalues(&split.stable_block)?);
    let dist = eigenvalue_multiset_distance(&closed_eigs, &expected).ok_or_else(|| {
        Error::Internal("closed-loop eigenvalue count does not match the blocks".into())
    })?;
    let abscissa = closed_eigs
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let bound = (-split.sigma).max(split.stable_abscissa) + 1e-8 * split.generator_norm;
    Ok(NonDestabilizationReport {
        abscissa,
        eigenvalue_match_distance: dist,
        pass: abscissa <= bound,
    })
}

/// The augmented pair realizing derivative control: states `(y, u)`,
/// dynamics `[[A, V], [0, 0]]`, input `[0; I]` driving `u'`.
#[derive(Debug, Clone)]
pub struct ExtendedSystem {
    pub a_ext: Array2<f64>,
    pub v_ext: Array2<f64>,
    pub state_dim: usize,
    pub control_dim: usize,
}

impl ExtendedSystem {
    /// The extended input as an [`InputModel`] for the rank tests.
    pub fn input_model(&self) -> InputModel {
        InputModel {
            matrix: self.v_ext.clone(),
            support: (self.state_dim..self.state_dim + self.control_dim).collect(),
            kind: ActuatorKind::Custom,
        }
    }

    /// Canonical actuator family for the extended control space.
    pub fn canonical_family(&self) -> ActuatorFamily {
        let k = self.control_dim;
        ActuatorFamily::new(
            (0..k)
                .map(|j| {
                    let mut e = Array1::zeros(k);
                    e[j] = 1.0;
                    e
                })
                .collect(),
        )
        .expect("extended system has at least one control")
    }
}

/// Assemble the extended system for the directions `B v_j`.
pub fn build_extended(
    a: &Array2<f64>,
    b: &InputModel,
    v: &ActuatorFamily,
) -> Result<ExtendedSystem> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidDimension("generator must be square".into()));
    }
    if v.is_empty() {
        return Err(Error::InvalidParameter(
            "the extended system needs at least one direction".into(),
        ));
    }
    if b.state_dim() != n || v.dim() != b.control_dim() {
        return Err(Error::DimensionMismatch(
            "generator, input matrix and family have inconsistent shapes".into(),
        ));
    }
    let k = v.len();
    let bv = b.matrix.dot(&v.as_matrix());
    let mut a_ext = Array2::zeros((n + k, n + k));
    for i in 0..n {
        for j in 0..n {
            a_ext[[i, j]] = a[[i, j]];
        }
        for j in 0..k {
            a_ext[[i, n + j]] = bv[[i, j]];
        }
    }
    let mut v_ext = Array2::zeros((n + k, k));
    for j in 0..k {
        v_ext[[n + j, j]] = 1.0;
    }
    Ok(ExtendedSystem {
        a_ext,
        v_ext,
        state_dim: n,
        control_dim: k,
    })
}

/// A dynamic controller `u' + Lambda u = sum_j e_j (kernel_j, y)`.
#[derive(Debug, Clone)]
pub struct DynamicController {
    /// Feedback law on the extended system (gain, closed loop, ...).
    pub law: FeedbackLaw,
    /// Extended-system split, for verification and simulation.
    pub split: SplitSystem,
    pub extended: ExtendedSystem,
    /// Controller dynamics matrix (`K x K`).
    pub lambda: Array2<f64>,
    /// Observation kernels applied to the physical state (`K` vectors in
    /// `R^n`).
    pub kernels: Vec<Array1<f64>>,
}

impl DynamicController {
    /// The `K x (n + K)` map from the extended state to the derivative
    /// input: `u' = map . (y, u)`.
    pub fn extended_gain_map(&self) -> Array2<f64> {
        self.law.state_gain_map()
    }

    /// Reassemble the extended gain map from `kernels` and `lambda`;
    /// bit-identical to [`Self::extended_gain_map`].
    pub fn reassembled_gain_map(&self) -> Array2<f64> {
        let n = self.extended.state_dim;
        let k = self.extended.control_dim;
        let mut map = Array2::zeros((k, n + k));
        for (j, kern) in self.kernels.iter().enumerate() {
            for i in 0..n {
                map[[j, i]] = kern[i];
            }
            for i in 0..k {
                map[[j, n + i]] = -self.lambda[[j, i]];
            }
        }
        map
    }
}

/// Synthesize a dynamic controller by stabilizing the extended pair at
/// level `sigma` and splitting the resulting gain into the controller
/// dynamics `Lambda` and the observation kernels.
pub fn synthesize_dynamic(
    a: &Array2<f64>,
    b: &InputModel,
    v: &ActuatorFamily,
    sigma: f64,
    eps: f64,
    method: SynthesisMethod,
) -> Result<DynamicController> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(
            "dynamic synthesis needs sigma > 0 (the controller modes sit at 0)".into(),
        ));
    }
    let extended = build_extended(a, b, v)?;
    let spectrum_ext =
        crate::spectral::compute_spectrum(&extended.a_ext, crate::numeric::DEFAULT_CLUSTER_TOL)?;
    let family = extended.canonical_family();
    let input = extended.input_model();
    let (law, split) =
        synthesize_feedback(&extended.a_ext, &input, &family, &spectrum_ext, sigma, eps, method)?;
    let n = extended.state_dim;
    let k = extended.control_dim;
    let map = law.state_gain_map();
    let mut lambda = Array2::zeros((k, k));
    let mut kernels = Vec::with_capacity(k);
    for j in 0..k {
        for i in 0..k {
            lambda[[j, i]] = -map[[j, n + i]];
        }
        kernels.push(Array1::from_iter((0..n).map(|i| map[[j, i]])));
    }
    Ok(DynamicController {
        law,
        split,
        extended,
        lambda,
        kernels,
    })
}
