//! Continuous algebraic Riccati solve for the unit-weight LQR problem,
//! by ordered Schur decomposition of the Hamiltonian matrix with one
//! Kleinman-Newton refinement step.

use ndarray::Array2;
use ndarray_linalg::Solve;

use crate::error::{Error, Result};
use crate::numeric::frob;
use crate::schur::{real_schur, reorder_schur, solve_lyapunov};

/// Residual of `A^T X + X A - X B B^T X + I`.
pub fn care_residual(a: &Array2<f64>, b: &Array2<f64>, x: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let bbt = b.dot(&b.t());
    let mut r = a.t().dot(x) + x.dot(a) - x.dot(&bbt).dot(x);
    for i in 0..n {
        r[[i, i]] += 1.0;
    }
    frob(&r)
}

/// Solve `A^T X + X A - X B B^T X + I = 0` for the stabilizing `X`.
///
/// Requires `(A, B)` stabilizable; with unit state weight the pair
/// `(A, I)` is always detectable, so the Hamiltonian has exactly `n`
/// stable eigenvalues and the stable invariant subspace delivers `X`.
pub fn solve_care(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidDimension("A must be square".into()));
    }
    if b.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "B has {} rows, A is {n}x{n}",
            b.nrows()
        )));
    }
    if n == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    let bbt = b.dot(&b.t());

    // Hamiltonian [[A, -B B^T], [-I, -A^T]].
    let mut h = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            h[[i, j]] = a[[i, j]];
            h[[i, n + j]] = -bbt[[i, j]];
            h[[n + i, n + j]] = -a[[j, i]];
        }
        h[[n + i, i]] = -1.0;
    }
    let schur = real_schur(&h)?;
    let select: Vec<bool> = schur.eigenvalues.iter().map(|z| z.re < 0.0).collect();
    let (ordered, m) = reorder_schur(&schur, &select)?;
    if m != n {
        return Err(Error::Numerical(format!(
            "Hamiltonian matrix has {m} stable eigenvalues, expected {n}; \
             the pair is not stabilizable at this level"
        )));
    }
    let u1 = ordered.q.slice(ndarray::s![..n, ..n]).to_owned();
    let u2 = ordered.q.slice(ndarray::s![n.., ..n]).to_owned();
    // X = U2 U1^{-1}, via U1^T X^T = U2^T column by column.
    let u1t = u1.t().to_owned();
    let u2t = u2.t().to_owned();
    let mut xt = Array2::zeros((n, n));
    for j in 0..n {
        let col = u1t
            .solve(&u2t.column(j).to_owned())
            .map_err(|e| Error::Numerical(format!("singular U1 block in CARE solve: {e}")))?;
        for i in 0..n {
            xt[[i, j]] = col[i];
        }
    }
    let x = xt.t().to_owned();
    let mut x = (&x + &x.t()) * 0.5;

    // One Kleinman-Newton step: solve the closed-loop Lyapunov equation
    // for the increment and symmetrize.
    let a_cl = a - &bbt.dot(&x);
    let mut rhs = a.t().dot(&x) + x.dot(a) - x.dot(&bbt).dot(&x);
    for i in 0..n {
        rhs[[i, i]] += 1.0;
    }
    if let Ok(delta) = solve_lyapunov(&a_cl, &rhs.mapv(|v| -v)) {
        let candidate = &x + &((&delta + &delta.t()) * 0.5);
        if care_residual(a, b, &candidate) < care_residual(a, b, &x) {
            x = candidate;
        }
    }

    let residual = care_residual(a, b, &x);
    let tol = 1e-8 * frob(&x).max(1.0) * frob(a).max(1.0);
    if residual > tol {
        return Err(Error::Numerical(format!(
            "Riccati residual {residual:.3e} exceeds tolerance {tol:.3e}"
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::spectral_abscissa;
    use ndarray::array;

    #[test]
    fn scalar_care_matches_closed_form() {
        // a x + x a - x^2 b^2 + 1 = 0 with a = 1, b = 2:
        // x = (a + sqrt(a^2 + b^2)) / b^2
        let a = array![[1.0]];
        let b = array![[2.0]];
        let x = solve_care(&a, &b).unwrap();
        let expected = (1.0 + (1.0f64 + 4.0).sqrt()) / 4.0;
        assert!((x[[0, 0]] - expected).abs() < 1e-12);
    }

    #[test]
    fn care_stabilizes_unstable_pair() {
        let a = array![[2.0, 1.0], [0.0, 0.5]];
        let b = array![[0.0], [1.0]];
        let x = solve_care(&a, &b).unwrap();
        let gain = b.t().dot(&x).mapv(|v| -v);
        let closed = &a + &b.dot(&gain);
        assert!(spectral_abscissa(&closed).unwrap() < 0.0);
        let res = care_residual(&a, &b, &x);
        assert!(res <= 1e-8 * frob(&x).max(1.0) * frob(&a).max(1.0));
        // symmetric positive definite solution
        assert!((x[[0, 1]] - x[[1, 0]]).abs() < 1e-12);
        assert!(x[[0, 0]] > 0.0);
    }

    #[test]
    fn care_rejects_unstabilizable_pair() {
        // unstable mode invisible to the input
        let a = array![[1.0, 0.0], [0.0, -1.0]];
        let b = array![[0.0], [1.0]];
        assert!(matches!(solve_care(&a, &b), Err(Error::Numerical(_))));
    }
}
