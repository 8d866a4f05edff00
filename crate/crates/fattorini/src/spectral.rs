//! Clustered spectra with algebraic/geometric multiplicities and Jordan
//! depths, left (adjoint) eigenvector bases, the real basis built from
//! real and imaginary parts of eigenvectors, and spectral projectors onto
//! unstable invariant subspaces.

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigVals, Inverse};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{
    self, fix_phases, frob, nullspace, nullspace_c, rank_from_singular_values, singular_values,
    to_complex, DEFAULT_CLUSTER_TOL,
};
use crate::schur::{real_schur, reorder_schur, solve_sylvester_quasitriangular};

/// One eigenvalue cluster of a real generator.
///
/// `lambda` is the mean of the grouped raw eigenvalues; `algebraic_mult`
/// is the cluster cardinality, `geometric_mult` the nullity of
/// `A - lambda I`, and `jordan_depth` the smallest power at which the
/// generalized-kernel ladder stabilizes.
#[derive(Debug, Clone)]
pub struct EigenCluster {
    pub lambda: Complex64,
    pub algebraic_mult: usize,
    pub geometric_mult: usize,
    pub jordan_depth: usize,
    /// Orthonormal basis of `ker(lambda - A)`, one column per geometric
    /// multiplicity.
    pub right_basis: Array2<Complex64>,
    /// Orthonormal basis of `ker(conj(lambda) - A^T)`, i.e. left
    /// eigenvectors of `A`.
    pub left_basis: Array2<Complex64>,
    /// Index of the conjugate cluster for non-real eigenvalues.
    pub conjugate_partner: Option<usize>,
    /// Set when the grouping chained eigenvalues farther apart than the
    /// clustering tolerance, so the partition is order-dependent.
    pub grouping_ambiguous: bool,
}

impl EigenCluster {
    /// True when the cluster sits on the real axis.
    pub fn is_real(&self) -> bool {
        self.lambda.im == 0.0
    }
}

/// Clustered spectrum of a real generator, ordered by descending real
/// part.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub clusters: Vec<EigenCluster>,
    pub generator_dim: usize,
    /// Relative clustering tolerance this spectrum was computed with.
    pub cluster_tolerance: f64,
    /// Frobenius norm of the generator; the absolute grouping threshold
    /// is `cluster_tolerance * generator_norm`.
    pub generator_norm: f64,
}

impl SpectralData {
    /// Absolute clustering threshold.
    pub fn absolute_tolerance(&self) -> f64 {
        self.cluster_tolerance * self.generator_norm
    }

    /// Indices of clusters with `Re lambda >= -sigma`; all clusters when
    /// `sigma` is `None`.
    pub fn selected(&self, sigma: Option<f64>) -> Vec<usize> {
        match sigma {
            None => (0..self.clusters.len()).collect(),
            Some(s) => self
                .clusters
                .iter()
                .enumerate()
                .filter(|(_, c)| c.lambda.re >= -s)
                .map(|(i, _)| i)
                .collect(),
        }
    }

    /// Largest real part among clusters excluded by `sigma`
    /// (`-inf` when nothing is excluded).
    pub fn excluded_abscissa(&self, sigma: f64) -> f64 {
        self.clusters
            .iter()
            .filter(|c| c.lambda.re < -sigma)
            .map(|c| c.lambda.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Spectral projector onto the span of generalized eigenvectors of the
/// selected clusters, along the complementary invariant subspace.
#[derive(Debug, Clone)]
pub struct Projector {
    pub matrix: Array2<f64>,
    pub selected_clusters: Vec<usize>,
    pub rank: usize,
}

fn union_find_root(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Compute the clustered spectrum of a real square matrix.
///
/// Raw eigenvalues are grouped whenever their pairwise distance is at
/// most `cluster_tol * ||A||_F`; per cluster the geometric multiplicity,
/// Jordan depth and left/right eigenvector bases are computed by SVD
/// nullspace extraction.
pub fn compute_spectrum(a: &Array2<f64>, cluster_tol: f64) -> Result<SpectralData> {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return Err(Error::InvalidDimension(format!(
            "generator must be square and nonempty, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !(cluster_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cluster tolerance must be positive, got {cluster_tol}"
        )));
    }
    let norm = frob(a);
    let tau = cluster_tol * norm;

    let mut eigs: Vec<Complex64> = a
        .eigvals()
        .map_err(|e| Error::Numerical(format!("eigenvalue computation failed: {e}")))?
        .to_vec();
    // Deterministic processing order regardless of LAPACK's output order.
    eigs.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });

    // Transitive-closure grouping at threshold tau.
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if (eigs[i] - eigs[j]).norm() <= tau {
                let (ri, rj) = (union_find_root(&mut parent, i), union_find_root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of_root = vec![usize::MAX; n];
    for i in 0..n {
        let r = union_find_root(&mut parent, i);
        if group_of_root[r] == usize::MAX {
            group_of_root[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[group_of_root[r]].push(i);
    }

    struct RawCluster {
        lambda: Complex64,
        count: usize,
        ambiguous: bool,
    }
    let mut raw: Vec<RawCluster> = groups
        .iter()
        .map(|members| {
            let mut sum = Complex64::new(0.0, 0.0);
            let mut diameter: f64 = 0.0;
            for (k, &i) in members.iter().enumerate() {
                sum += eigs[i];
                for &j in &members[k + 1..] {
                    diameter = diameter.max((eigs[i] - eigs[j]).norm());
                }
            }
            RawCluster {
                lambda: sum / members.len() as f64,
                count: members.len(),
                ambiguous: diameter > tau,
            }
        })
        .collect();

    // Canonicalize: self-conjugate clusters snap onto the real axis.
    for c in &mut raw {
        if c.lambda.im.abs() <= tau {
            c.lambda.im = 0.0;
        }
    }
    // Descending real part; J+ members ahead of their conjugates.
    raw.sort_by(|x, y| {
        y.lambda
            .re
            .partial_cmp(&x.lambda.re)
            .unwrap()
            .then(y.lambda.im.partial_cmp(&x.lambda.im).unwrap())
    });

    // Conjugate pairing.
    let mut partner: Vec<Option<usize>> = vec![None; raw.len()];
    for i in 0..raw.len() {
        if raw[i].lambda.im <= 0.0 || partner[i].is_some() {
            continue;
        }
        let want = raw[i].lambda.conj();
        let mut found = None;
        for (j, rc) in raw.iter().enumerate() {
            if j != i
                && partner[j].is_none()
                && rc.lambda.im < 0.0
                && (rc.lambda - want).norm() <= tau.max(1e-300)
            {
                found = Some(j);
                break;
            }
        }
        match found {
            Some(j) => {
                partner[i] = Some(j);
                partner[j] = Some(i);
            }
            None => {
                return Err(Error::UnsupportedInput(format!(
                    "eigenvalue {} has no conjugate partner; the generator does not look real",
                    raw[i].lambda
                )))
            }
        }
    }

    let a_t = a.t().to_owned();
    let mut clusters: Vec<Option<EigenCluster>> = (0..raw.len()).map(|_| None).collect();
    for i in 0..raw.len() {
        if clusters[i].is_some() {
            continue;
        }
        let lambda = raw[i].lambda;
        let count = raw[i].count;
        let (right, left, geo, depth) = if lambda.im == 0.0 {
            cluster_structure_real(a, &a_t, lambda.re, count)?
        } else {
            cluster_structure_complex(a, &a_t, lambda, count)?
        };
        if geo == 0 || geo > count {
            return Err(Error::Internal(format!(
                "cluster at {lambda} has nullity {geo} against algebraic multiplicity {count}; \
                 adjust the clustering tolerance"
            )));
        }
        let cluster = EigenCluster {
            lambda,
            algebraic_mult: count,
            geometric_mult: geo,
            jordan_depth: depth,
            right_basis: right,
            left_basis: left,
            conjugate_partner: partner[i],
            grouping_ambiguous: raw[i].ambiguous,
        };
        // The conjugate cluster mirrors the computed bases entrywise.
        if let Some(j) = partner[i] {
            clusters[j] = Some(EigenCluster {
                lambda: cluster.lambda.conj(),
                algebraic_mult: raw[j].count,
                geometric_mult: cluster.geometric_mult,
                jordan_depth: cluster.jordan_depth,
                right_basis: cluster.right_basis.mapv(|z| z.conj()),
                left_basis: cluster.left_basis.mapv(|z| z.conj()),
                conjugate_partner: Some(i),
                grouping_ambiguous: raw[j].ambiguous,
            });
        }
        clusters[i] = Some(cluster);
    }

    let clusters: Vec<EigenCluster> = clusters.into_iter().map(Option::unwrap).collect();
    let total: usize = clusters.iter().map(|c| c.algebraic_mult).sum();
    if total != n {
        return Err(Error::Internal(format!(
            "algebraic multiplicities sum to {total}, expected {n}"
        )));
    }
    Ok(SpectralData {
        clusters,
        generator_dim: n,
        cluster_tolerance: cluster_tol,
        generator_norm: norm,
    })
}

/// Nullity ladder on real shifted powers; returns bases, geometric
/// multiplicity and Jordan depth.
fn cluster_structure_real(
    a: &Array2<f64>,
    a_t: &Array2<f64>,
    lambda: f64,
    count: usize,
) -> Result<(Array2<Complex64>, Array2<Complex64>, usize, usize)> {
    let n = a.nrows();
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[[i, i]] -= lambda;
    }
    let mut shifted_t = a_t.clone();
    for i in 0..n {
        shifted_t[[i, i]] -= lambda;
    }
    let right_r = nullspace(&shifted)?;
    let left_r = nullspace(&shifted_t)?;
    let geo = right_r.ncols();

    let depth = jordan_depth_real(&shifted, geo, count, n)?;

    let mut right = right_r.mapv(|x| Complex64::new(x, 0.0));
    let mut left = left_r.mapv(|x| Complex64::new(x, 0.0));
    fix_phases(&mut right);
    fix_phases(&mut left);
    Ok((right, left, geo, depth))
}

fn jordan_depth_real(shifted: &Array2<f64>, geo: usize, count: usize, n: usize) -> Result<usize> {
    if geo >= count {
        return Ok(1);
    }
    let mut power = shifted.clone();
    let mut prev = geo;
    for m in 2..=count {
        power = power.dot(shifted);
        let sv = singular_values(&power)?;
        let nullity = n - rank_from_singular_values(&sv, n, n);
        if nullity == prev {
            return Ok(m - 1);
        }
        if nullity >= count {
            return Ok(m);
        }
        prev = nullity;
    }
    Ok(count)
}

fn cluster_structure_complex(
    a: &Array2<f64>,
    a_t: &Array2<f64>,
    lambda: Complex64,
    count: usize,
) -> Result<(Array2<Complex64>, Array2<Complex64>, usize, usize)> {
    let n = a.nrows();
    let mut shifted = to_complex(a);
    for i in 0..n {
        shifted[[i, i]] -= lambda;
    }
    let mut shifted_adj = to_complex(a_t);
    for i in 0..n {
        shifted_adj[[i, i]] -= lambda.conj();
    }
    let mut right = nullspace_c(&shifted)?;
    let mut left = nullspace_c(&shifted_adj)?;
    let geo = right.ncols();

    let depth = if geo >= count {
        1
    } else {
        let mut power = shifted.clone();
        let mut prev = geo;
        let mut result = count;
        for m in 2..=count {
            power = power.dot(&shifted);
            let sv = numeric::singular_values_c(&power)?;
            let nullity = n - rank_from_singular_values(&sv, n, n);
            if nullity == prev {
                result = m - 1;
                break;
            }
            if nullity >= count {
                result = m;
                break;
            }
            prev = nullity;
        }
        result
    };

    fix_phases(&mut right);
    fix_phases(&mut left);
    Ok((right, left, geo, depth))
}

/// Recompute the orthonormal left eigenbasis of a cluster directly from
/// the adjoint matrix, and check it against the recorded multiplicity.
pub fn left_eigenbasis(a: &Array2<f64>, cluster: &EigenCluster) -> Result<Array2<Complex64>> {
    let n = a.nrows();
    let mut shifted_adj = to_complex(&a.t().to_owned());
    for i in 0..n {
        shifted_adj[[i, i]] -= cluster.lambda.conj();
    }
    let mut basis = nullspace_c(&shifted_adj)?;
    if basis.ncols() != cluster.geometric_mult {
        return Err(Error::Internal(format!(
            "left nullity {} does not match recorded geometric multiplicity {} at lambda = {}",
            basis.ncols(),
            cluster.geometric_mult,
            cluster.lambda
        )));
    }
    fix_phases(&mut basis);
    Ok(basis)
}

/// Internal product of the ordered-Schur path: an orthonormal basis `q1`
/// of the selected invariant subspace, the complementary block, and the
/// decoupling Sylvester solution.
#[derive(Debug, Clone)]
pub(crate) struct ObliqueSplit {
    pub q1: Array2<f64>,
    pub q2: Array2<f64>,
    /// Leading (selected) quasi-triangular block.
    pub t11: Array2<f64>,
    /// Complementary quasi-triangular block.
    pub t22: Array2<f64>,
    /// Solution of `T11 X - X T22 = -T12`.
    pub x: Array2<f64>,
    pub dim: usize,
    pub selected_clusters: Vec<usize>,
}

impl ObliqueSplit {
    /// Rows of the oblique coordinate map: `coords(y) = adjoint_basis^T y`.
    pub fn adjoint_basis(&self) -> Array2<f64> {
        // W = Q1 - Q2 X^T satisfies W^T Q1 = I.
        &self.q1 - &self.q2.dot(&self.x.t())
    }

    pub fn projector_matrix(&self) -> Array2<f64> {
        self.q1.dot(&(&self.q1.t() - &self.x.dot(&self.q2.t())))
    }
}

pub(crate) fn oblique_split(
    a: &Array2<f64>,
    spectrum: &SpectralData,
    sigma: f64,
) -> Result<ObliqueSplit> {
    let n = a.nrows();
    if spectrum.generator_dim != n {
        return Err(Error::DimensionMismatch(
            "spectrum was computed for a generator of different order".into(),
        ));
    }
    let tau = spectrum.absolute_tolerance();
    for (i, c) in spectrum.clusters.iter().enumerate() {
        if (c.lambda.re + sigma).abs() <= tau {
            return Err(Error::SeparationFailure(format!(
                "cluster {i} at lambda = {} lies within {tau:.3e} of the line Re = {}",
                c.lambda, -sigma
            )));
        }
    }
    let selected_clusters = spectrum.selected(Some(sigma));
    let expected_dim: usize = selected_clusters
        .iter()
        .map(|&i| spectrum.clusters[i].algebraic_mult)
        .sum();

    let schur = real_schur(a)?;
    let select: Vec<bool> = schur.eigenvalues.iter().map(|z| z.re >= -sigma).collect();
    let (ordered, dim) = reorder_schur(&schur, &select)?;
    if dim != expected_dim {
        return Err(Error::Internal(format!(
            "Schur selection picked {dim} eigenvalues but the clusters announce {expected_dim}"
        )));
    }
    let q1 = ordered.q.slice(ndarray::s![.., ..dim]).to_owned();
    let q2 = ordered.q.slice(ndarray::s![.., dim..]).to_owned();
    let t11 = ordered.t.slice(ndarray::s![..dim, ..dim]).to_owned();
    let t22 = ordered.t.slice(ndarray::s![dim.., dim..]).to_owned();
    let t12 = ordered.t.slice(ndarray::s![..dim, dim..]).to_owned();
    let x = if dim == 0 || dim == n {
        Array2::zeros((dim, n - dim))
    } else {
        solve_sylvester_quasitriangular(&t11, &t22, &t12.mapv(|v| -v), -1, false, false)?
    };
    Ok(ObliqueSplit {
        q1,
        q2,
        t11,
        t22,
        x,
        dim,
        selected_clusters,
    })
}

/// Spectral projector onto the invariant subspace of all clusters with
/// `Re lambda >= -sigma`, computed by ordered real Schur decomposition
/// plus a decoupling Sylvester solve.
pub fn spectral_projector(
    a: &Array2<f64>,
    spectrum: &SpectralData,
    sigma: f64,
) -> Result<Projector> {
    let split = oblique_split(a, spectrum, sigma)?;
    Ok(Projector {
        matrix: split.projector_matrix(),
        selected_clusters: split.selected_clusters.clone(),
        rank: split.dim,
    })
}

/// Resolvent contour integral over the circle `|z - center| = radius`,
/// approximated with `nodes` trapezoidal quadrature points. Serves as an
/// independent oracle for [`spectral_projector`].
///
/// The enclosed spectrum must be closed under conjugation (always the
/// case for circles centered on the real axis), otherwise the projector
/// would be genuinely complex and an error is returned.
pub fn contour_projector(
    a: &Array2<f64>,
    center: Complex64,
    radius: f64,
    nodes: usize,
) -> Result<Projector> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidDimension("generator must be square".into()));
    }
    if !(radius > 0.0) || nodes < 4 {
        return Err(Error::InvalidParameter(
            "contour needs a positive radius and at least 4 nodes".into(),
        ));
    }
    let spectrum = compute_spectrum(a, DEFAULT_CLUSTER_TOL)?;
    let tau = spectrum.absolute_tolerance();
    let mut selected_clusters = Vec::new();
    for (i, c) in spectrum.clusters.iter().enumerate() {
        let dist = ((c.lambda - center).norm() - radius).abs();
        if dist <= tau {
            return Err(Error::ContourHitsSpectrum(format!(
                "cluster {i} at lambda = {} lies within {tau:.3e} of the contour",
                c.lambda
            )));
        }
        if (c.lambda - center).norm() < radius {
            selected_clusters.push(i);
        }
    }

    let ac = to_complex(a);
    let mut acc: Array2<Complex64> = Array2::zeros((n, n));
    for k in 0..nodes {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / nodes as f64;
        let offset = Complex64::from_polar(radius, theta);
        let z = center + offset;
        let mut m = ac.mapv(|v| -v);
        for i in 0..n {
            m[[i, i]] += z;
        }
        let inv = m.inv().map_err(|_| {
            Error::ContourHitsSpectrum(format!("resolvent is singular at node z = {z}"))
        })?;
        acc = acc + inv.mapv(|v| v * offset);
    }
    acc.mapv_inplace(|v| v / nodes as f64);

    let real = acc.mapv(|z| z.re);
    let imag_norm = acc.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    if imag_norm > 1e-6 * frob(&real).max(1.0) {
        return Err(Error::UnsupportedInput(format!(
            "contour projector has imaginary residue {imag_norm:.3e}; \
             the enclosed spectrum is not conjugation-closed"
        )));
    }
    let rank = numeric::rank_with_floor(&real, 1.0)?;
    Ok(Projector {
        matrix: real,
        selected_clusters,
        rank,
    })
}

/// One real vector of the `chi` family, tagged with its source cluster.
#[derive(Debug, Clone)]
pub struct RealBasisVector {
    pub cluster: usize,
    pub vector: Array1<f64>,
}

/// Real basis spanning the same space as the left eigenvectors:
/// `chi = eps` for real clusters, `Re eps` for clusters with positive
/// imaginary part and `Im eps` for their conjugates.
pub fn real_basis(spectrum: &SpectralData) -> Result<Vec<RealBasisVector>> {
    let mut out = Vec::new();
    for (i, c) in spectrum.clusters.iter().enumerate() {
        if !c.is_real() && c.conjugate_partner.is_none() {
            return Err(Error::UnsupportedInput(format!(
                "cluster {i} at lambda = {} is non-real and unpaired",
                c.lambda
            )));
        }
        for k in 0..c.geometric_mult {
            let col = c.left_basis.column(k);
            let vector: Array1<f64> = if c.is_real() {
                col.mapv(|z| z.re)
            } else if c.lambda.im > 0.0 {
                col.mapv(|z| z.re)
            } else {
                col.mapv(|z| z.im)
            };
            out.push(RealBasisVector { cluster: i, vector });
        }
    }
    Ok(out)
}

/// Check `P^2 = P` and `P A = A P` residuals; used by tests and reports.
pub fn projector_residuals(p: &Projector, a: &Array2<f64>) -> (f64, f64) {
    let pp = p.matrix.dot(&p.matrix);
    let idem = frob(&(&pp - &p.matrix));
    let pa = p.matrix.dot(a);
    let ap = a.dot(&p.matrix);
    let comm = frob(&(&pa - &ap));
    (idem, comm)
}
