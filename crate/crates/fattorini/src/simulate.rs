//! Time integration of the open- and closed-loop semidiscrete systems,
//! plus exponential-decay fitting on the resulting norm traces.
//!
//! Implicit Euler with a reused factorization is the workhorse; the
//! scaling-and-squaring matrix exponential is the oracle path and is
//! limited to small systems.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Factorize, Solve};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::vec_norm;
use crate::stabilize::{DynamicController, FeedbackLaw};

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImplicitEuler,
    Expm,
}

/// Dimension cap for the exponential path.
pub const EXPM_MAX_DIM: usize = 200;

/// Norm history of one trajectory, with optional per-step control values.
#[derive(Debug, Clone)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    pub state_norms: Vec<f64>,
    /// One row per recorded time; empty when no observer was attached.
    pub controls: Vec<Vec<f64>>,
    pub scheme: Scheme,
    pub dt: f64,
}

/// Matrix exponential by Pade-13 scaling and squaring.
pub fn expm(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidDimension("expm needs a square matrix".into()));
    }
    if n == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    // 1-norm
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[[i, j]].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    const THETA13: f64 = 5.371_920_351_148_152;
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a_scaled = a.mapv(|v| v / 2f64.powi(s));

    const B: [f64; 14] = [
        64_764_752_532_480_000.0,
        32_382_376_266_240_000.0,
        7_771_770_303_897_600.0,
        1_187_353_796_428_800.0,
        129_060_195_264_000.0,
        10_559_470_521_600.0,
        670_442_572_800.0,
        33_522_128_640.0,
        1_323_241_920.0,
        40_840_800.0,
        960_960.0,
        16_380.0,
        182.0,
        1.0,
    ];
    let eye = Array2::<f64>::eye(n);
    let a2 = a_scaled.dot(&a_scaled);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let u_inner = &(&a6 * B[13]) + &(&a4 * B[11]) + &(&a2 * B[9]);
    let u = a_scaled.dot(
        &(&a6.dot(&u_inner) + &(&a6 * B[7]) + &(&a4 * B[5]) + &(&a2 * B[3]) + &(&eye * B[1])),
    );
    let v_inner = &(&a6 * B[12]) + &(&a4 * B[10]) + &(&a2 * B[8]);
    let v = &a6.dot(&v_inner) + &(&a6 * B[6]) + &(&a4 * B[4]) + &(&a2 * B[2]) + &(&eye * B[0]);

    // solve (V - U) X = (V + U)
    let lhs = &v - &u;
    let rhs = &v + &u;
    let lu = lhs
        .factorize()
        .map_err(|e| Error::Numerical(format!("expm solve failed: {e}")))?;
    let mut x = Array2::zeros((n, n));
    for j in 0..n {
        let col = lu
            .solve(&rhs.column(j).to_owned())
            .map_err(|e| Error::Numerical(format!("expm solve failed: {e}")))?;
        for i in 0..n {
            x[[i, j]] = col[i];
        }
    }
    for _ in 0..s {
        x = x.dot(&x);
    }
    Ok(x)
}

/// Integrate `y' = M y` and record norms plus, when an observer matrix
/// `C` is given, the control values `C y(t_k)` at every recorded time.
pub fn integrate_observed(
    m: &Array2<f64>,
    y0: &Array1<f64>,
    t_final: f64,
    dt: f64,
    scheme: Scheme,
    observer: Option<&Array2<f64>>,
) -> Result<SimulationTrace> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidDimension("system matrix must be square".into()));
    }
    if y0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {}, system order is {n}",
            y0.len()
        )));
    }
    if !(dt > 0.0) || !(t_final >= dt) {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and T >= dt, got dt = {dt}, T = {t_final}"
        )));
    }
    if let Some(c) = observer {
        if c.ncols() != n {
            return Err(Error::DimensionMismatch(
                "observer matrix does not match the state dimension".into(),
            ));
        }
    }
    let steps = (t_final / dt).ceil() as usize;

    enum Stepper {
        Euler(ndarray_linalg::LUFactorized<ndarray::OwnedRepr<f64>>),
        Exp(Array2<f64>),
    }
    let stepper = match scheme {
        Scheme::ImplicitEuler => {
            let mut lhs = m.mapv(|v| -dt * v);
            for i in 0..n {
                lhs[[i, i]] += 1.0;
            }
            let lu = lhs.factorize().map_err(|_| {
                Error::SingularStep(format!("I - dt M is singular at dt = {dt}"))
            })?;
            Stepper::Euler(lu)
        }
        Scheme::Expm => {
            if n > EXPM_MAX_DIM {
                return Err(Error::ResourceLimit(format!(
                    "expm path is limited to order {EXPM_MAX_DIM}, got {n}"
                )));
            }
            Stepper::Exp(expm(&m.mapv(|v| dt * v))?)
        }
    };

    let mut y = y0.clone();
    let mut times = Vec::with_capacity(steps + 1);
    let mut norms = Vec::with_capacity(steps + 1);
    let mut controls = Vec::new();
    let record =
        |y: &Array1<f64>, t: f64, times: &mut Vec<f64>, norms: &mut Vec<f64>, controls: &mut Vec<Vec<f64>>| {
            times.push(t);
            norms.push(vec_norm(y));
            if let Some(c) = observer {
                controls.push(c.dot(y).to_vec());
            }
        };
    record(&y, 0.0, &mut times, &mut norms, &mut controls);
    for k in 1..=steps {
        y = match &stepper {
            Stepper::Euler(lu) => lu.solve(&y).map_err(|_| {
                Error::SingularStep(format!("I - dt M is singular at dt = {dt}"))
            })?,
            Stepper::Exp(phi) => phi.dot(&y),
        };
        record(&y, k as f64 * dt, &mut times, &mut norms, &mut controls);
    }
    Ok(SimulationTrace {
        times,
        state_norms: norms,
        controls,
        scheme,
        dt,
    })
}

/// Integrate `y' = M y` and record the norm history.
pub fn integrate(
    m: &Array2<f64>,
    y0: &Array1<f64>,
    t_final: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<SimulationTrace> {
    integrate_observed(m, y0, t_final, dt, scheme, None)
}

/// Run the closed loop of a static feedback law, recording the control
/// values `u(t) = sum_j (y, kernel_j) e_j`.
pub fn simulate_closed_loop(
    law: &FeedbackLaw,
    y0: &Array1<f64>,
    t_final: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<SimulationTrace> {
    let c = law.state_gain_map();
    integrate_observed(&law.closed_loop, y0, t_final, dt, scheme, Some(&c))
}

/// Run the dynamic controller from `u(0) = 0`, recording the joint norm
/// of `(y, u)` and the derivative control values.
pub fn simulate_dynamic(
    ctrl: &DynamicController,
    y0: &Array1<f64>,
    t_final: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<SimulationTrace> {
    let n = ctrl.extended.state_dim;
    let k = ctrl.extended.control_dim;
    if y0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {}, physical dimension is {n}",
            y0.len()
        )));
    }
    let mut ext0 = Array1::zeros(n + k);
    for i in 0..n {
        ext0[i] = y0[i];
    }
    let c = ctrl.extended_gain_map();
    integrate_observed(&ctrl.law.closed_loop, &ext0, t_final, dt, scheme, Some(&c))
}

/// Exponential fit of a norm trace.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayFit {
    /// Decay rate (`-slope` of the log-norm line).
    pub rate: f64,
    /// Fitted prefactor `C` in `||y(t)|| ~ C exp(-rate t)`.
    pub prefactor: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(t, log ||y(t)||)` on the window.
/// Norms are floored at 1e-300 so exact zeros do not poison the fit.
pub fn estimate_decay(trace: &SimulationTrace, window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for (t, norm) in trace.times.iter().zip(&trace.state_norms) {
        if *t >= lo && *t <= hi {
            ts.push(*t);
            logs.push(norm.max(1e-300).ln());
        }
    }
    if ts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "window [{lo}, {hi}] contains {} samples, need at least 3",
            ts.len()
        )));
    }
    let n = ts.len() as f64;
    let mean_t = ts.iter().sum::<f64>() / n;
    let mean_l = logs.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (t, l) in ts.iter().zip(&logs) {
        sxx += (t - mean_t) * (t - mean_t);
        sxy += (t - mean_t) * (l - mean_l);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "window has no time spread".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_l - slope * mean_t;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (t, l) in ts.iter().zip(&logs) {
        let fit = intercept + slope * t;
        ss_res += (l - fit) * (l - fit);
        ss_tot += (l - mean_l) * (l - mean_l);
    }
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(DecayFit {
        rate: -slope,
        prefactor: intercept.exp(),
        r_squared,
    })
}
