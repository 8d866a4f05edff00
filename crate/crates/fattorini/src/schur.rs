//! Real Schur decomposition, eigenvalue reordering and quasi-triangular
//! Sylvester/Lyapunov solves, wrapped from LAPACK (`dgees`, `dtrsen`,
//! `dtrsyl`).
//!
//! All wrappers convert between row-major `ndarray` storage and LAPACK's
//! column-major convention at the boundary.

use core::ffi::c_char;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `A = Q T Q^T` with `Q` orthogonal and `T` quasi-upper-triangular
/// (1x1 and 2x2 diagonal blocks).
#[derive(Debug, Clone)]
pub struct RealSchur {
    pub q: Array2<f64>,
    pub t: Array2<f64>,
    /// Eigenvalues in the order of the diagonal blocks of `t`.
    pub eigenvalues: Vec<Complex64>,
}

fn to_col_major(a: &Array2<f64>) -> Vec<f64> {
    let (rows, cols) = a.dim();
    let mut v = vec![0.0; rows * cols];
    for j in 0..cols {
        for i in 0..rows {
            v[j * rows + i] = a[[i, j]];
        }
    }
    v
}

fn from_col_major(v: &[f64], rows: usize, cols: usize) -> Array2<f64> {
    let mut a = Array2::zeros((rows, cols));
    for j in 0..cols {
        for i in 0..rows {
            a[[i, j]] = v[j * rows + i];
        }
    }
    a
}

fn lapack_info(routine: &str, info: i32) -> Error {
    Error::Numerical(format!("{routine} failed with info = {info}"))
}

/// Real Schur decomposition of a square matrix.
pub fn real_schur(a: &Array2<f64>) -> Result<RealSchur> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(Error::InvalidDimension(format!(
            "Schur decomposition needs a square matrix, got {rows}x{cols}"
        )));
    }
    let n = rows as i32;
    let mut t = to_col_major(a);
    let mut q = vec![0.0f64; rows * rows];
    let mut wr = vec![0.0f64; rows];
    let mut wi = vec![0.0f64; rows];
    let mut sdim = 0i32;
    let mut info = 0i32;
    let mut bwork = vec![0i32; rows.max(1)];

    // Workspace query, then the real call.
    let mut work_len = -1i32;
    let mut work_probe = [0.0f64; 1];
    unsafe {
        lapack_sys::dgees_(
            &(b'V' as c_char),
            &(b'N' as c_char),
            None,
            &n,
            t.as_mut_ptr(),
            &n,
            &mut sdim,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            q.as_mut_ptr(),
            &n,
            work_probe.as_mut_ptr(),
            &work_len,
            bwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_info("dgees workspace query", info));
    }
    work_len = work_probe[0] as i32;
    let mut work = vec![0.0f64; work_len.max(1) as usize];
    unsafe {
        lapack_sys::dgees_(
            &(b'V' as c_char),
            &(b'N' as c_char),
            None,
            &n,
            t.as_mut_ptr(),
            &n,
            &mut sdim,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            q.as_mut_ptr(),
            &n,
            work.as_mut_ptr(),
            &work_len,
            bwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_info("dgees", info));
    }
    Ok(RealSchur {
        q: from_col_major(&q, rows, rows),
        t: from_col_major(&t, rows, rows),
        eigenvalues: wr
            .iter()
            .zip(&wi)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect(),
    })
}

/// Reorder a real Schur form so that the eigenvalues flagged in `select`
/// occupy the leading block. Members of a complex pair are selected
/// together. Returns the reordered form and the leading block size.
pub fn reorder_schur(schur: &RealSchur, select: &[bool]) -> Result<(RealSchur, usize)> {
    let n = schur.t.nrows();
    if select.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "select has length {}, matrix order is {n}",
            select.len()
        )));
    }
    if n == 0 {
        return Ok((schur.clone(), 0));
    }
    let ni = n as i32;
    let mut sel: Vec<i32> = select.iter().map(|&s| if s { 1 } else { 0 }).collect();
    // 2x2 blocks move as a unit; make the selection consistent up front.
    for i in 0..n {
        if schur.eigenvalues[i].im != 0.0 {
            let partner = if i + 1 < n && schur.t[[i + 1, i]] != 0.0 {
                i + 1
            } else {
                continue;
            };
            let joint = (sel[i] | sel[partner]) & 1;
            sel[i] = joint;
            sel[partner] = joint;
        }
    }
    let mut t = to_col_major(&schur.t);
    let mut q = to_col_major(&schur.q);
    let mut wr = vec![0.0f64; n];
    let mut wi = vec![0.0f64; n];
    let mut m = 0i32;
    let mut s = 0.0f64;
    let mut sep = 0.0f64;
    let mut info = 0i32;
    let mut iwork_probe = [0i32; 1];
    let mut work_probe = [0.0f64; 1];
    let lwork_q = -1i32;
    unsafe {
        lapack_sys::dtrsen_(
            &(b'N' as c_char),
            &(b'V' as c_char),
            sel.as_ptr(),
            &ni,
            t.as_mut_ptr(),
            &ni,
            q.as_mut_ptr(),
            &ni,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            &mut m,
            &mut s,
            &mut sep,
            work_probe.as_mut_ptr(),
            &lwork_q,
            iwork_probe.as_mut_ptr(),
            &lwork_q,
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_info("dtrsen workspace query", info));
    }
    let lwork = (work_probe[0] as i32).max(1);
    let liwork = iwork_probe[0].max(1);
    let mut work = vec![0.0f64; lwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    unsafe {
        lapack_sys::dtrsen_(
            &(b'N' as c_char),
            &(b'V' as c_char),
            sel.as_ptr(),
            &ni,
            t.as_mut_ptr(),
            &ni,
            q.as_mut_ptr(),
            &ni,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            &mut m,
            &mut s,
            &mut sep,
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_info("dtrsen", info));
    }
    Ok((
        RealSchur {
            q: from_col_major(&q, n, n),
            t: from_col_major(&t, n, n),
            eigenvalues: wr
                .iter()
                .zip(&wi)
                .map(|(&re, &im)| Complex64::new(re, im))
                .collect(),
        },
        m as usize,
    ))
}

/// Solve `A X + isgn * X B = C` for quasi-upper-triangular `A` (m x m) and
/// `B` (n x n), `C` m x n. `trans_a`/`trans_b` apply transposes to `A`/`B`.
pub fn solve_sylvester_quasitriangular(
    a: &Array2<f64>,
    b: &Array2<f64>,
    c: &Array2<f64>,
    isgn: i32,
    trans_a: bool,
    trans_b: bool,
) -> Result<Array2<f64>> {
    let m = a.nrows();
    let n = b.nrows();
    if a.ncols() != m || b.ncols() != n || c.dim() != (m, n) {
        return Err(Error::DimensionMismatch(
            "Sylvester blocks have inconsistent shapes".into(),
        ));
    }
    if m == 0 || n == 0 {
        return Ok(Array2::zeros((m, n)));
    }
    let mi = m as i32;
    let ni = n as i32;
    let af = to_col_major(a);
    let bf = to_col_major(b);
    let mut cf = to_col_major(c);
    let mut scale = 1.0f64;
    let mut info = 0i32;
    let ta = if trans_a { b'T' } else { b'N' } as c_char;
    let tb = if trans_b { b'T' } else { b'N' } as c_char;
    unsafe {
        lapack_sys::dtrsyl_(
            &ta,
            &tb,
            &isgn,
            &mi,
            &ni,
            af.as_ptr(),
            &mi,
            bf.as_ptr(),
            &ni,
            cf.as_mut_ptr(),
            &mi,
            &mut scale,
            &mut info,
        );
    }
    if info < 0 {
        return Err(lapack_info("dtrsyl", info));
    }
    // info == 1 signals perturbed eigenvalues were used; the scale factor
    // still makes the solve exact for the perturbed problem.
    let mut x = from_col_major(&cf, m, n);
    if scale != 1.0 {
        x.mapv_inplace(|v| v / scale);
    }
    Ok(x)
}

/// Solve the continuous Lyapunov equation `A^T X + X A = W`.
pub fn solve_lyapunov(a: &Array2<f64>, w: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n || w.dim() != (n, n) {
        return Err(Error::DimensionMismatch(
            "Lyapunov equation needs square A and W of equal order".into(),
        ));
    }
    let schur = real_schur(a)?;
    let w_t = schur.q.t().dot(w).dot(&schur.q);
    let y = solve_sylvester_quasitriangular(&schur.t, &schur.t, &w_t, 1, true, false)?;
    Ok(schur.q.dot(&y).dot(&schur.q.t()))
}
