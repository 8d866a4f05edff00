//! Spectral rank tests for approximate controllability and
//! stabilizability: no left eigenvector may be invisible to the control.
//!
//! For each eigenvalue cluster the test matrix `W_j` collects the inner
//! products of the actuator directions with `B^T eps_k`; admissibility of
//! a family means `rank W_j = l_j` on every cluster under consideration.
//! Restricting to clusters with `Re lambda >= -sigma` gives the
//! stabilizability variant.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::models::InputModel;
use crate::numeric::{
    frob, rank_from_singular_values, rank_from_singular_values_floored, rank_threshold,
    singular_values_c,
};
use crate::spectral::{real_basis, EigenCluster, SpectralData};


/// A family of `K` real actuator directions in the control space.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorFamily {
    pub vectors: Vec<Array1<f64>>,
    pub labels: Option<Vec<String>>,
}

impl ActuatorFamily {
    pub fn new(vectors: Vec<Array1<f64>>) -> Result<ActuatorFamily> {
        if vectors.is_empty() {
            return Err(Error::InvalidParameter(
                "an actuator family needs at least one direction".into(),
            ));
        }
        let m = vectors[0].len();
        if vectors.iter().any(|v| v.len() != m) {
            return Err(Error::DimensionMismatch(
                "actuator directions have mixed dimensions".into(),
            ));
        }
        Ok(ActuatorFamily {
            vectors,
            labels: None,
        })
    }

    /// Number of directions `K`.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Control-space dimension.
    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.len())
    }

    /// Directions as the columns of an `m x K` matrix.
    pub fn as_matrix(&self) -> Array2<f64> {
        let m = self.dim();
        let mut out = Array2::zeros((m, self.len()));
        for (j, v) in self.vectors.iter().enumerate() {
            for i in 0..m {
                out[[i, j]] = v[i];
            }
        }
        out
    }

    /// Frobenius norm over the whole family.
    pub fn norm(&self) -> f64 {
        self.vectors
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// `B^T` applied to the cluster's left basis: an `m x l_j` complex matrix
/// whose columns are the observed directions `B^* eps_k`.
fn observed_directions(b: &InputModel, cluster: &EigenCluster) -> Result<Array2<Complex64>> {
    let n = b.state_dim();
    if cluster.left_basis.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "input matrix has {n} state rows but the left basis has {}",
            cluster.left_basis.nrows()
        )));
    }
    let m = b.control_dim();
    let l = cluster.geometric_mult;
    let mut out = Array2::zeros((m, l));
    for k in 0..l {
        for i in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..n {
                acc += b.matrix[[r, i]] * cluster.left_basis[[r, k]];
            }
            out[[i, k]] = acc;
        }
    }
    Ok(out)
}

/// The `K x l_j` test matrix with entries `(v_l | B^T eps_k)_U`
/// (conjugation on the second argument).
pub fn build_w(
    v: &ActuatorFamily,
    cluster: &EigenCluster,
    b: &InputModel,
) -> Result<Array2<Complex64>> {
    if v.dim() != b.control_dim() {
        return Err(Error::DimensionMismatch(format!(
            "actuator directions live in dimension {} but B has {} control columns",
            v.dim(),
            b.control_dim()
        )));
    }
    let bte = observed_directions(b, cluster)?;
    let k = v.len();
    let l = cluster.geometric_mult;
    let mut w = Array2::zeros((k, l));
    for (row, dir) in v.vectors.iter().enumerate() {
        for col in 0..l {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..v.dim() {
                acc += dir[i] * bte[[i, col]].conj();
            }
            w[[row, col]] = acc;
        }
    }
    Ok(w)
}

/// A column of `B^T [eps_1 .. eps_l]` counts as a structural zero when it
/// falls below the same cutoff the rank decision uses: the eigenvector is
/// invisible to the control at working precision, not merely borderline.
fn has_structural_zero_column(bte: &Array2<Complex64>, scale_b: f64) -> bool {
    let cutoff = rank_threshold(&[], bte.nrows(), bte.ncols(), scale_b);
    (0..bte.ncols()).any(|k| {
        let norm: f64 = bte.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        norm <= cutoff
    })
}

/// Outcome of the eigenvector-visibility test.
#[derive(Debug, Clone)]
pub struct FattoriniVerdict {
    pub pass: bool,
    /// Clusters where `rank(B^T [eps_1 .. eps_l]) < l`.
    pub failing_clusters: Vec<usize>,
    /// Failing clusters where some `B^T eps_k` vanishes exactly, i.e.
    /// the eigenvector is structurally invisible rather than borderline.
    pub structural_clusters: Vec<usize>,
}

/// Check the spectral unique-continuation criterion: on every cluster
/// (restricted to `Re lambda >= -sigma` when given), `B^T` must have full
/// rank on the left eigenspace.
pub fn check_fattorini(
    b: &InputModel,
    spectrum: &SpectralData,
    sigma: Option<f64>,
) -> Result<FattoriniVerdict> {
    if b.state_dim() != spectrum.generator_dim {
        return Err(Error::DimensionMismatch(format!(
            "input matrix has {} rows, generator dimension is {}",
            b.state_dim(),
            spectrum.generator_dim
        )));
    }
    let scale_b = frob(&b.matrix);
    let mut failing = Vec::new();
    let mut structural = Vec::new();
    for &i in &spectrum.selected(sigma) {
        let cluster = &spectrum.clusters[i];
        let bte = observed_directions(b, cluster)?;
        let sv = singular_values_c(&bte)?;
        // Left-basis columns are unit vectors, so the observed directions
        // live on the scale of ||B||; rank against that scale.
        let rank = rank_from_singular_values_floored(&sv, bte.nrows(), bte.ncols(), scale_b);
        if rank < cluster.geometric_mult {
            failing.push(i);
            if has_structural_zero_column(&bte, scale_b) {
                structural.push(i);
            }
        }
    }
    Ok(FattoriniVerdict {
        pass: failing.is_empty(),
        failing_clusters: failing,
        structural_clusters: structural,
    })
}

/// Smallest admissible family size: the largest geometric multiplicity
/// over the selected clusters (0 when nothing is selected).
pub fn minimal_k(spectrum: &SpectralData, sigma: Option<f64>) -> usize {
    spectrum
        .selected(sigma)
        .iter()
        .map(|&i| spectrum.clusters[i].geometric_mult)
        .max()
        .unwrap_or(0)
}

/// Per-cluster rank evidence for one actuator family.
#[derive(Debug, Clone)]
pub struct ClusterRank {
    pub cluster: usize,
    pub lambda: Complex64,
    pub geometric_mult: usize,
    pub w: Array2<Complex64>,
    pub numerical_rank: usize,
    /// The `l_j`-th singular value of `W_j`, the one that must clear the
    /// rank threshold for the cluster to pass (0 when `K < l_j`).
    pub min_singular_value: f64,
    /// Ratio of `min_singular_value` to the rank threshold; values near 1
    /// flag borderline verdicts.
    pub gap: f64,
    /// Some `B^T eps_k` vanishes exactly: structurally uncontrollable.
    pub structural_zero: bool,
    pub pass: bool,
}

/// Full admissibility report for a family at level `sigma`.
#[derive(Debug, Clone)]
pub struct RankReport {
    pub entries: Vec<ClusterRank>,
    pub overall_admissible: bool,
    pub minimal_k: usize,
    pub sigma: Option<f64>,
    pub family_size: usize,
}

/// Evaluate `rank W_j = l_j` on every selected cluster.
pub fn check_admissible(
    b: &InputModel,
    v: &ActuatorFamily,
    spectrum: &SpectralData,
    sigma: Option<f64>,
) -> Result<RankReport> {
    if b.state_dim() != spectrum.generator_dim {
        return Err(Error::DimensionMismatch(format!(
            "input matrix has {} rows, generator dimension is {}",
            b.state_dim(),
            spectrum.generator_dim
        )));
    }
    let scale_b = frob(&b.matrix);
    let scale_v = v
        .vectors
        .iter()
        .map(|x| x.iter().map(|e| e * e).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let floor = scale_b * scale_v;
    let mut entries = Vec::new();
    for &i in &spectrum.selected(sigma) {
        let cluster = &spectrum.clusters[i];
        let l = cluster.geometric_mult;
        let w = build_w(v, cluster, b)?;
        let sv = singular_values_c(&w)?;
        let rank = rank_from_singular_values_floored(&sv, w.nrows(), w.ncols(), floor);
        let thresh = rank_threshold(&sv, w.nrows(), w.ncols(), floor);
        let min_sv = if sv.len() >= l { sv[l - 1] } else { 0.0 };
        let bte = observed_directions(b, cluster)?;
        entries.push(ClusterRank {
            cluster: i,
            lambda: cluster.lambda,
            geometric_mult: l,
            numerical_rank: rank,
            min_singular_value: min_sv,
            gap: if thresh > 0.0 { min_sv / thresh } else { f64::INFINITY },
            structural_zero: has_structural_zero_column(&bte, scale_b),
            pass: rank == l,
            w,
        });
    }
    let overall = entries.iter().all(|e| e.pass);
    Ok(RankReport {
        overall_admissible: overall,
        minimal_k: minimal_k(spectrum, sigma),
        sigma,
        family_size: v.len(),
        entries,
    })
}

/// Repair a family by seeded Gaussian perturbations of decreasing
/// amplitude until it becomes admissible.
///
/// Requires the criterion itself to hold and `K >= minimal_k`, otherwise
/// no admissible family of this size exists. A zero family perturbs on a
/// unit reference scale.
pub fn perturb_to_admissible(
    b: &InputModel,
    v: &ActuatorFamily,
    spectrum: &SpectralData,
    sigma: Option<f64>,
    rng_seed: u64,
    max_tries: usize,
) -> Result<ActuatorFamily> {
    let verdict = check_fattorini(b, spectrum, sigma)?;
    if !verdict.pass {
        return Err(Error::NoAdmissibleFamily(format!(
            "the criterion fails on clusters {:?}; no family of any size is admissible",
            verdict.failing_clusters
        )));
    }
    let k_min = minimal_k(spectrum, sigma);
    if v.len() < k_min {
        return Err(Error::NoAdmissibleFamily(format!(
            "family size {} is below the minimal admissible size {k_min}",
            v.len()
        )));
    }
    if check_admissible(b, v, spectrum, sigma)?.overall_admissible {
        return Ok(v.clone());
    }
    let scale = {
        let n = v.norm();
        if n > 0.0 {
            n
        } else {
            1.0
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let normal = StandardNormal;
    let mut last_margin = 0.0;
    for t in 0..max_tries {
        let amp = 1e-3 * scale / 2f64.powi(t as i32);
        let vectors: Vec<Array1<f64>> = v
            .vectors
            .iter()
            .map(|vec| {
                let noise: Array1<f64> =
                    Array1::from_iter((0..vec.len()).map(|_| {
                        let g: f64 = normal.sample(&mut rng);
                        amp * g
                    }));
                vec + &noise
            })
            .collect();
        let candidate = ActuatorFamily {
            vectors,
            labels: v.labels.clone(),
        };
        let report = check_admissible(b, &candidate, spectrum, sigma)?;
        if report.overall_admissible {
            return Ok(candidate);
        }
        last_margin = report
            .entries
            .iter()
            .filter(|e| !e.pass)
            .map(|e| e.min_singular_value)
            .fold(f64::INFINITY, f64::min);
    }
    Err(Error::GiveUp {
        tries: max_tries,
        margin: last_margin,
    })
}

/// Orthogonally project each direction onto
/// `span{ B^T chi_k(lambda_i) : Re lambda_i >= -sigma }`,
/// the observed real span of the selected left eigenvectors.
/// Admissibility is preserved.
pub fn project_family(
    v: &ActuatorFamily,
    b: &InputModel,
    spectrum: &SpectralData,
    sigma: Option<f64>,
) -> Result<ActuatorFamily> {
    let m = b.control_dim();
    if v.dim() != m {
        return Err(Error::DimensionMismatch(
            "family and input matrix disagree on the control dimension".into(),
        ));
    }
    let selected = spectrum.selected(sigma);
    let chi = real_basis(spectrum)?;
    let span_vectors: Vec<Array1<f64>> = chi
        .iter()
        .filter(|c| selected.contains(&c.cluster))
        .map(|c| b.matrix.t().dot(&c.vector))
        .collect();
    if span_vectors.is_empty() {
        let zeros = vec![Array1::zeros(m); v.len()];
        return Ok(ActuatorFamily {
            vectors: zeros,
            labels: v.labels.clone(),
        });
    }
    let mut span = Array2::zeros((m, span_vectors.len()));
    for (j, s) in span_vectors.iter().enumerate() {
        for i in 0..m {
            span[[i, j]] = s[i];
        }
    }
    // Orthonormal basis of the span via SVD.
    use ndarray_linalg::SVD;
    let (u, s, _) = span
        .svd(true, false)
        .map_err(|e| Error::Numerical(format!("SVD failed: {e}")))?;
    let u = u.ok_or_else(|| Error::Internal("SVD did not return U".into()))?;
    let r = rank_from_singular_values(
        s.as_slice().unwrap(),
        span.nrows(),
        span.ncols(),
    );
    let q = u.slice(ndarray::s![.., ..r]).to_owned();
    let vectors: Vec<Array1<f64>> = v
        .vectors
        .iter()
        .map(|vec| q.dot(&q.t().dot(vec)))
        .collect();
    Ok(ActuatorFamily {
        vectors,
        labels: v.labels.clone(),
    })
}

/// Classical controllability-matrix test on an extracted block:
/// `rank [B, AB, ..., A^{d-1} B] = d`.
pub fn kalman_rank_oracle(a_block: &Array2<f64>, b_block: &Array2<f64>) -> bool {
    let d = a_block.nrows();
    if d == 0 {
        return true;
    }
    if a_block.ncols() != d || b_block.nrows() != d {
        return false;
    }
    let m = b_block.ncols();
    if m == 0 {
        return false;
    }
    let mut ctrb = Array2::zeros((d, d * m));
    let mut block = b_block.clone();
    for p in 0..d {
        for i in 0..d {
            for j in 0..m {
                ctrb[[i, p * m + j]] = block[[i, j]];
            }
        }
        if p + 1 < d {
            block = a_block.dot(&block);
        }
    }
    match crate::numeric::rank(&ctrb) {
        Ok(r) => r == d,
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        build_coupled_heat_1d, build_indicator_actuator, build_laplacian_1d,
        build_reaction_diffusion_1d, ActuatorChannels, ActuatorKind,
    };
    use crate::numeric::{vec_norm, DEFAULT_CLUSTER_TOL};
    use crate::spectral::compute_spectrum;
    use ndarray::{array, Array2};

    const PI: f64 = std::f64::consts::PI;

    fn identity_input(n: usize) -> InputModel {
        InputModel {
            matrix: Array2::<f64>::eye(n),
            support: (0..n).collect(),
            kind: ActuatorKind::Custom,
        }
    }

    #[test]
    fn coupled_heat_second_block_passes() {
        let model = build_coupled_heat_1d(10, PI).unwrap();
        let b = build_indicator_actuator(&model, (4, 6), ActuatorChannels::Default).unwrap();
        let sp = compute_spectrum(&model.matrix, DEFAULT_CLUSTER_TOL).unwrap();
        let verdict = check_fattorini(&b, &sp, None).unwrap();
        assert!(verdict.pass, "failing clusters {:?}", verdict.failing_clusters);
    }

    #[test]
    fn coupled_heat_first_block_fails_structurally() {
        let model = build_coupled_heat_1d(10, PI).unwrap();
        let b = build_indicator_actuator(&model, (4, 6), ActuatorChannels::FirstBlock).unwrap();
        let sp = compute_spectrum(&model.matrix, DEFAULT_CLUSTER_TOL).unwrap();
        let verdict = check_fattorini(&b, &sp, None).unwrap();
        assert!(!verdict.pass);
        assert_eq!(verdict.failing_clusters.len(), sp.clusters.len());
        assert_eq!(verdict.structural_clusters, verdict.failing_clusters);
    }

    #[test]
    fn identity_input_passes_for_any_generator() {
        let model = build_coupled_heat_1d(6, 1.0).unwrap();
        let b = identity_input(12);
        let sp = compute_spectrum(&model.matrix, DEFAULT_CLUSTER_TOL).unwrap();
        assert!(check_fattorini(&b, &sp, None).unwrap().pass);
    }

    #[test]
    fn w_matrix_shapes_and_small_family_failure() {
        // Two decoupled copies of the Laplacian share eigenvalues with
        // geometric multiplicity 2, so K = 1 can never pass.
        let l = build_laplacian_1d(4, PI).unwrap();
        let n = 4;
        let mut a = Array2::zeros((2 * n, 2 * n));
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] = l.matrix[[i, j]];
                a[[n + i, n + j]] = l.matrix[[i, j]];
            }
        }
        let sp = compute_spectrum(&a, DEFAULT_CLUSTER_TOL).unwrap();
        assert!(sp.clusters.iter().all(|c| c.geometric_mult == 2));
        let b = identity_input(2 * n);
        let v = ActuatorFamily::new(vec![Array1::ones(2 * n)]).unwrap();
        let w = build_w(&v, &sp.clusters[0], &b).unwrap();
        assert_eq!(w.dim(), (1, 2));
        let report = check_admissible(&b, &v, &sp, None).unwrap();
        assert!(!report.overall_admissible);
        assert_eq!(report.minimal_k, 2);
        for e in &report.entries {
            assert!(e.numerical_rank <= 1);
            assert!(!e.pass);
        }
    }

    #[test]
    fn gram_of_observed_direction_has_rank_one() {
        let model = build_laplacian_1d(6, PI).unwrap();
        let b = identity_input(6);
        let sp = compute_spectrum(&model.matrix, DEFAULT_CLUSTER_TOL).unwrap();
        let cluster = &sp.clusters[0];
        // v_1 = B^T eps_1 itself (real cluster, so the direction is real)
        let dir: Array1<f64> = cluster.left_basis.column(0).mapv(|z| z.re);
        let norm2: f64 = dir.iter().map(|x| x * x).sum();
        let v = ActuatorFamily::new(vec![dir]).unwrap();
        let w = build_w(&v, cluster, &b).unwrap();
        assert_eq!(w.dim(), (1, 1));
        assert!((w[[0, 0]].re - norm2).abs() < 1e-12);
        assert!(w[[0, 0]].im.abs() < 1e-14);
    }

    #[test]
    fn indicator_columns_make_admissible_family_for_coupled_heat() {
        let model = build_coupled_heat_1d(10, PI).unwrap();
        let b = build_indicator_actuator(&model, (4, 6), ActuatorChannels::Default).unwrap();
        let sp = compute_spectrum(&model.matrix, DEFAULT_CLUSTER_TOL).unwrap();
        // the three canonical directions of U = R^3
        let v = ActuatorFamily::new(
            (0..3)
                .map(|j| {
                    let mut e = Array1::zeros(3);
                    e[j] = 1.0;
                    e
                })
                .collect(),
        )
        .unwrap();
        let report = check_admissible(&b, &v, &sp, None).unwrap();
        assert!(report.overall_admissible);
        for e in &report.entries {
            assert_eq!(e.numerical_rank, 1);
            assert_eq!(e.geometric_mult, 1);
        }
    }

    #[test]
    fn minimal_k_respects_sigma() {
        let model = build_coupled_heat_1d(8, PI).unwrap();
        let sp = compute_spectrum(&model.matrix, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(minimal_k(&sp, None), 1);
        // a sigma that excludes everything
        let sigma = -(sp.clusters[0].lambda.re) - 1.0;
        assert_eq!(minimal_k(&sp, Some(sigma)), 0);
    }

    #[test]
    fn verdicts_invariant_under_scaling_and_recombination() {
        let model = build_reaction_diffusion_1d(20, PI, 12.0).unwrap();
        let b = identity_input(20);
        let sp = compute_spectrum(&model.matrix, DEFAULT_CLUSTER_TOL).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let normal = StandardNormal;
        let v = ActuatorFamily::new(
            (0..2)
                .map(|_| {
                    Array1::from_iter((0..20).map(|_| {
                        let g: f64 = normal.sample(&mut rng);
                        g
                    }))
                })
                .collect(),
        )
        .unwrap();
        let base = check_admissible(&b, &v, &sp, Some(0.0)).unwrap();
        // scaling by 7
        let scaled = ActuatorFamily::new(v.vectors.iter().map(|x| x * 7.0).collect()).unwrap();
        let rs = check_admissible(&b, &scaled, &sp, Some(0.0)).unwrap();
        assert_eq!(base.overall_admissible, rs.overall_admissible);
        for (e1, e2) in base.entries.iter().zip(&rs.entries) {
            assert_eq!(e1.pass, e2.pass);
        }
        // invertible recombination [[1, 1], [0, 1]]
        let mixed = ActuatorFamily::new(vec![
            &v.vectors[0] + &v.vectors[1],
            v.vectors[1].clone(),
        ])
        .unwrap();
        let rm = check_admissible(&b, &mixed, &sp, Some(0.0)).unwrap();
        assert_eq!(base.overall_admissible, rm.overall_admissible);
    }

    #[test]
    fn perturb_returns_admissible_family_unchanged() {
        let model = build_reaction_diffusion_1d(20, PI, 12.0).unwrap();
        let b = identity_input(20);
        let sp = compute_spectrum(&model.matrix, DEFAULT_CLUSTER_TOL).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal = StandardNormal;
        let v = ActuatorFamily::new(vec![Array1::from_iter((0..20).map(|_| {
            let g: f64 = normal.sample(&mut rng);
            g
        }))])
        .unwrap();
        assert!(check_admissible(&b, &v, &sp, Some(0.0))
            .unwrap()
            .overall_admissible);
        let out = perturb_to_admissible(&b, &v, &sp, Some(0.0), 1, 50).unwrap();
        assert_eq!(out.vectors, v.vectors);
    }

    #[test]
    fn symmetric_window_is_blind_to_antisymmetric_modes() {
        // A single aggregated indicator on a window symmetric about the
        // domain midpoint has exactly zero inner product with the even
        // eigenmodes, so it cannot pass once an even mode is unstable.
        // An asymmetric window restores admissibility.
        let model = build_reaction_diffusion_1d(50, PI, 12.0).unwrap();
        let sp = compute_spectrum(&model.matrix, DEFAULT_CLUSTER_TOL).unwrap();
        let aggregate = |lo: usize, hi: usize| {
            let mut col = Array1::zeros(50);
            for i in lo..=hi {
                col[i - 1] = 1.0;
            }
            let m = Array2::from_shape_fn((50, 1), |(i, _)| col[i]);
            InputModel {
                matrix: m,
                support: (lo - 1..hi).collect(),
                kind: ActuatorKind::Indicator,
            }
        };
        // (0.3, 0.7) * length: nodes 16..=35, symmetric (16 + 35 = 51)
        let sym = aggregate(16, 35);
        let verdict_sym = check_fattorini(&sym, &sp, Some(0.0)).unwrap();
        assert!(!verdict_sym.pass);
        // the blind cluster is the second one (antisymmetric mode)
        assert!(verdict_sym.failing_clusters.contains(&1));
        assert_eq!(verdict_sym.structural_clusters, verdict_sym.failing_clusters);
        // (0.3, 0.6) * length: nodes 16..=30, asymmetric
        let asym = aggregate(16, 30);
        let verdict_asym = check_fattorini(&asym, &sp, Some(0.0)).unwrap();
        assert!(verdict_asym.pass);
        let v = ActuatorFamily::new(vec![Array1::ones(1)]).unwrap();
        let report = check_admissible(&asym, &v, &sp, Some(0.0)).unwrap();
        assert!(report.overall_admissible);
        assert_eq!(report.entries.len(), 3);
        for e in &report.entries {
            assert_eq!((e.w.nrows(), e.w.ncols()), (1, 1));
            assert_eq!(e.numerical_rank, 1);
        }
    }

    #[test]
    fn perturb_fixes_zero_family() {
        let model = build_reaction_diffusion_1d(20, PI, 12.0).unwrap();
        let b = identity_input(20);
        let sp = compute_spectrum(&model.matrix, DEFAULT_CLUSTER_TOL).unwrap();
        let v = ActuatorFamily::new(vec![Array1::zeros(20)]).unwrap();
        let out = perturb_to_admissible(&b, &v, &sp, Some(0.0), 42, 50).unwrap();
        assert!(check_admissible(&b, &out, &sp, Some(0.0))
            .unwrap()
            .overall_admissible);
    }

    #[test]
    fn perturb_rejects_undersized_family() {
        let l = build_laplacian_1d(4, PI).unwrap();
        let n = 4;
        let mut a = Array2::zeros((2 * n, 2 * n));
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] = l.matrix[[i, j]];
                a[[n + i, n + j]] = l.matrix[[i, j]];
            }
        }
        let sp = compute_spectrum(&a, DEFAULT_CLUSTER_TOL).unwrap();
        let b = identity_input(2 * n);
        let v = ActuatorFamily::new(vec![Array1::ones(2 * n)]).unwrap();
        let err = perturb_to_admissible(&b, &v, &sp, None, 3, 10).unwrap_err();
        assert!(matches!(err, Error::NoAdmissibleFamily(_)));
    }

    #[test]
    fn project_family_is_idempotent_and_preserves_admissibility() {
        let model = build_reaction_diffusion_1d(20, PI, 12.0).unwrap();
        let b = identity_input(20);
        let sp = compute_spectrum(&model.matrix, DEFAULT_CLUSTER_TOL).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let normal = StandardNormal;
        let v = ActuatorFamily::new(vec![Array1::from_iter((0..20).map(|_| {
            let g: f64 = normal.sample(&mut rng);
            g
        }))])
        .unwrap();
        assert!(check_admissible(&b, &v, &sp, Some(0.0))
            .unwrap()
            .overall_admissible);
        let p1 = project_family(&v, &b, &sp, Some(0.0)).unwrap();
        let p2 = project_family(&p1, &b, &sp, Some(0.0)).unwrap();
        for (x, y) in p1.vectors.iter().zip(&p2.vectors) {
            let diff = vec_norm(&(x - y));
            assert!(diff <= 1e-12 * vec_norm(x).max(1.0));
        }
        assert!(check_admissible(&b, &p1, &sp, Some(0.0))
            .unwrap()
            .overall_admissible);
    }

    #[test]
    fn project_family_strips_orthogonal_component() {
        let model = build_reaction_diffusion_1d(20, PI, 12.0).unwrap();
        let b = identity_input(20);
        let sp = compute_spectrum(&model.matrix, DEFAULT_CLUSTER_TOL).unwrap();
        // admissible direction inside the span: chi of the top cluster
        let chi = real_basis(&sp).unwrap();
        let selected = sp.selected(Some(0.0));
        let inside: Array1<f64> = chi
            .iter()
            .filter(|c| selected.contains(&c.cluster))
            .fold(Array1::zeros(20), |acc, c| acc + &c.vector);
        let v_in = ActuatorFamily::new(vec![inside.clone()]).unwrap();
        let projected = project_family(&v_in, &b, &sp, Some(0.0)).unwrap();
        assert!(vec_norm(&(&projected.vectors[0] - &inside)) < 1e-10);
        // now add a large component orthogonal to every B^T chi: a stable
        // eigenvector direction
        let orth: Array1<f64> = chi
            .iter()
            .find(|c| !selected.contains(&c.cluster))
            .unwrap()
            .vector
            .clone();
        let tainted = ActuatorFamily::new(vec![&inside + &(orth * 100.0)]).unwrap();
        let cleaned = project_family(&tainted, &b, &sp, Some(0.0)).unwrap();
        assert!(vec_norm(&(&cleaned.vectors[0] - &inside)) < 1e-8);
        assert!(check_admissible(&b, &cleaned, &sp, Some(0.0))
            .unwrap()
            .overall_admissible);
    }

    #[test]
    fn project_family_empty_selection_gives_zero() {
        let model = build_laplacian_1d(6, PI).unwrap();
        let b = identity_input(6);
        let sp = compute_spectrum(&model.matrix, DEFAULT_CLUSTER_TOL).unwrap();
        let sigma = -(sp.clusters[0].lambda.re) - 1.0; // excludes everything
        let v = ActuatorFamily::new(vec![Array1::ones(6)]).unwrap();
        let out = project_family(&v, &b, &sp, Some(sigma)).unwrap();
        assert!(vec_norm(&out.vectors[0]) == 0.0);
    }

    #[test]
    fn kalman_oracle_trivial_cases() {
        // zero input, nonzero dimension
        let a = array![[1.0, 0.0], [0.0, 2.0]];
        let b0 = Array2::zeros((2, 1));
        assert!(!kalman_rank_oracle(&a, &b0));
        // scalar system with nonzero input
        let a1 = array![[0.0]];
        let b1 = array![[1.0]];
        assert!(kalman_rank_oracle(&a1, &b1));
        // empty block is vacuously controllable
        let ae: Array2<f64> = Array2::zeros((0, 0));
        let be: Array2<f64> = Array2::zeros((0, 1));
        assert!(kalman_rank_oracle(&ae, &be));
    }

    #[test]
    fn hautus_equals_kalman_on_seeded_instances() {
        // small version of the acceptance sweep
        let mut agree = 0;
        let total = 25;
        for seed in 0..total {
            let (fatt, kalman) = random_instance_verdicts(seed, 8);
            if fatt == kalman {
                agree += 1;
            }
        }
        assert_eq!(agree, total);
    }

    /// Build a random instance, return (fattorini, kalman) verdicts on its
    /// unstable part.
    fn random_instance_verdicts(seed: u64, n_max: usize) -> (bool, bool) {
        use crate::spectral::oblique_split as oblique;
        let mut rng = ChaCha8Rng::seed_from_u64(0xFA77 ^ seed);
        let normal = StandardNormal;
        let n = 2 + (seed as usize % (n_max - 1));
        let m = 1 + (seed as usize % 3);
        let a = Array2::from_shape_fn((n, n), |_| {
            let g: f64 = normal.sample(&mut rng);
            g
        });
        let bmat = Array2::from_shape_fn((n, m), |_| {
            let g: f64 = normal.sample(&mut rng);
            g
        });
        let b = InputModel {
            matrix: bmat.clone(),
            support: (0..n).collect(),
            kind: ActuatorKind::Custom,
        };
        let sp = compute_spectrum(&a, DEFAULT_CLUSTER_TOL).unwrap();
        // sigma line between two adjacent distinct real parts
        let mut res: Vec<f64> = sp.clusters.iter().map(|c| c.lambda.re).collect();
        res.sort_by(|x, y| y.partial_cmp(x).unwrap());
        res.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
        let sigma = if res.len() == 1 {
            -(res[0] - 1.0)
        } else {
            let cut = (seed as usize) % (res.len() - 1);
            -((res[cut] + res[cut + 1]) / 2.0)
        };
        let fatt = check_fattorini(&b, &sp, Some(sigma)).unwrap().pass;
        let split = oblique(&a, &sp, sigma).unwrap();
        let b_n = split.adjoint_basis().t().dot(&bmat);
        let kalman = kalman_rank_oracle(&split.t11, &b_n);
        (fatt, kalman)
    }
}
