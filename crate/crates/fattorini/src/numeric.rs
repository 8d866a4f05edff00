//! Shared numerical policies: the rank threshold used by every module,
//! nullspace extraction, and small helpers on real/complex matrices.

use ndarray::{Array1, Array2};
use ndarray_linalg::SVD;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative cutoff for numerical rank decisions: singular values below
/// `max(rows, cols) * s_max * RANK_RTOL` count as zero. Shared by the
/// spectral and rank-test modules so verdicts stay consistent.
pub const RANK_RTOL: f64 = 1e-10;

/// Default eigenvalue clustering tolerance, relative to the Frobenius
/// norm of the generator.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Rank decision from a singular-value list.
pub fn rank_from_singular_values(sv: &[f64], rows: usize, cols: usize) -> usize {
    let s_max = sv.first().copied().unwrap_or(0.0);
    let thresh = rows.max(cols) as f64 * s_max * RANK_RTOL;
    sv.iter().filter(|&&s| s > thresh).count()
}

/// Rank decision with an external scale floor. Used where the matrix may
/// be numerically zero but lives on a known scale (projectors have unit
/// or larger singular values when nonzero; observation matrices inherit
/// the scale of `B` and the unit eigenvector columns).
pub fn rank_with_floor(m: &Array2<f64>, floor: f64) -> Result<usize> {
    let sv = singular_values(m)?;
    Ok(rank_from_singular_values_floored(
        &sv,
        m.nrows(),
        m.ncols(),
        floor,
    ))
}

/// Floored rank decision from a singular-value list.
pub fn rank_from_singular_values_floored(
    sv: &[f64],
    rows: usize,
    cols: usize,
    floor: f64,
) -> usize {
    let s_max = sv.first().copied().unwrap_or(0.0).max(floor);
    let thresh = rows.max(cols) as f64 * s_max * RANK_RTOL;
    sv.iter().filter(|&&s| s > thresh).count()
}

/// Rank threshold value under the floored policy; exposed so reports can
/// state how far a verdict sits from the cutoff.
pub fn rank_threshold(sv: &[f64], rows: usize, cols: usize, floor: f64) -> f64 {
    let s_max = sv.first().copied().unwrap_or(0.0).max(floor);
    rows.max(cols) as f64 * s_max * RANK_RTOL
}

/// Frobenius norm of a real matrix.
pub fn frob(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Frobenius norm of a complex matrix.
pub fn frob_c(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn to_complex(a: &Array2<f64>) -> Array2<Complex64> {
    a.mapv(|x| Complex64::new(x, 0.0))
}

/// Singular values of a complex matrix, descending.
pub fn singular_values_c(m: &Array2<Complex64>) -> Result<Vec<f64>> {
    let (_, s, _) = m
        .svd(false, false)
        .map_err(|e| Error::Numerical(format!("SVD failed: {e}")))?;
    Ok(s.to_vec())
}

/// Singular values of a real matrix, descending.
pub fn singular_values(m: &Array2<f64>) -> Result<Vec<f64>> {
    let (_, s, _) = m
        .svd(false, false)
        .map_err(|e| Error::Numerical(format!("SVD failed: {e}")))?;
    Ok(s.to_vec())
}

/// Numerical rank of a complex matrix under the shared threshold.
pub fn rank_c(m: &Array2<Complex64>) -> Result<usize> {
    let sv = singular_values_c(m)?;
    Ok(rank_from_singular_values(&sv, m.nrows(), m.ncols()))
}

/// Numerical rank of a real matrix under the shared threshold.
pub fn rank(m: &Array2<f64>) -> Result<usize> {
    let sv = singular_values(m)?;
    Ok(rank_from_singular_values(&sv, m.nrows(), m.ncols()))
}

/// Orthonormal basis of the nullspace of a square complex matrix.
pub fn nullspace_c(m: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = m.nrows();
    let (_, s, vt) = m
        .svd(false, true)
        .map_err(|e| Error::Numerical(format!("SVD failed: {e}")))?;
    let vt = vt.ok_or_else(|| Error::Internal("SVD did not return V^H".into()))?;
    let r = rank_from_singular_values(s.as_slice().unwrap(), n, m.ncols());
    let dim = m.ncols() - r;
    let mut basis = Array2::zeros((m.ncols(), dim));
    for (c, i) in (r..m.ncols()).enumerate() {
        for j in 0..m.ncols() {
            basis[[j, c]] = vt[[i, j]].conj();
        }
    }
    Ok(basis)
}

/// Orthonormal basis of the nullspace of a real matrix.
pub fn nullspace(m: &Array2<f64>) -> Result<Array2<f64>> {
    let (_, s, vt) = m
        .svd(false, true)
        .map_err(|e| Error::Numerical(format!("SVD failed: {e}")))?;
    let vt = vt.ok_or_else(|| Error::Internal("SVD did not return V^T".into()))?;
    let r = rank_from_singular_values(s.as_slice().unwrap(), m.nrows(), m.ncols());
    let dim = m.ncols() - r;
    let mut basis = Array2::zeros((m.ncols(), dim));
    for (c, i) in (r..m.ncols()).enumerate() {
        for j in 0..m.ncols() {
            basis[[j, c]] = vt[[i, j]];
        }
    }
    Ok(basis)
}

/// Rotate each column so its largest-magnitude entry is real positive.
/// Makes bases reproducible across runs and platforms.
pub fn fix_phases(basis: &mut Array2<Complex64>) {
    for mut col in basis.columns_mut() {
        let mut best = 0usize;
        let mut best_norm = -1.0;
        for (i, z) in col.iter().enumerate() {
            let nn = z.norm_sqr();
            if nn > best_norm {
                best_norm = nn;
                best = i;
            }
        }
        let pivot = col[best];
        let mag = pivot.norm();
        if mag > 0.0 {
            let phase = pivot / mag;
            let rot = phase.conj();
            for z in col.iter_mut() {
                *z *= rot;
            }
        }
    }
}

/// Greedy multiset matching between two eigenvalue lists; returns the
/// largest pairing distance, or `None` if the lengths differ.
pub fn eigenvalue_multiset_distance(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for za in a {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for (j, zb) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (za - zb).norm();
            if d < best {
                best = d;
                best_j = j;
            }
        }
        if best_j == usize::MAX {
            return None;
        }
        used[best_j] = true;
        worst = worst.max(best);
    }
    Some(worst)
}

/// Max real part over a matrix's eigenvalues.
pub fn spectral_abscissa(a: &Array2<f64>) -> Result<f64> {
    use ndarray_linalg::EigVals;
    let vals = a
        .eigvals()
        .map_err(|e| Error::Numerical(format!("eigenvalue computation failed: {e}")))?;
    Ok(vals
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Eigenvalues of a real matrix.
pub fn eigenvalues(a: &Array2<f64>) -> Result<Vec<Complex64>> {
    use ndarray_linalg::EigVals;
    let vals = a
        .eigvals()
        .map_err(|e| Error::Numerical(format!("eigenvalue computation failed: {e}")))?;
    Ok(vals.to_vec())
}

/// Euclidean norm of a real vector.
pub fn vec_norm(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
