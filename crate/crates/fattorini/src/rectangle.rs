//! Multiplicity analysis for the Dirichlet Laplacian on a square or cube
//! with commensurate sides: eigenvalue levels `n = |alpha|^2`, their
//! multiplicities as sums-of-squares representation counts, the
//! actuator-count formulas `K_sigma` / `K_u_sigma`, and the
//! simple-spectrum collision scan for incommensurate sides.
//!
//! Counting convention: a multiplicity is the number of ORDERED d-tuples
//! of POSITIVE integers with the given square sum, because that is
//! literally the number of eigenfunctions at the level. The classical
//! representation count that gives `p + 1` at `n = 5^(2p)` allows zero
//! parts and ignores order; it is reported alongside as a companion
//! value, and both grow without bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Enumeration guard: lattice balls beyond this many candidate points
/// are refused.
pub const MAX_LATTICE_POINTS: u64 = 10_000_000;

fn check_dim(d: u32) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "dimension must be 2 or 3, got {d}"
        )))
    }
}

fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    r
}

fn is_square(n: u64) -> Option<u64> {
    let r = isqrt(n);
    if r * r == n {
        Some(r)
    } else {
        None
    }
}

/// Number of ordered `d`-tuples of positive integers whose squares sum
/// to `n`; the multiplicity of the rectangle eigenvalue at level `n`.
pub fn r_d(n: u64, d: u32) -> Result<u64> {
    check_dim(d)?;
    if n == 0 {
        return Err(Error::InvalidParameter("level must be positive".into()));
    }
    let mut count = 0;
    match d {
        2 => {
            for a in 1..=isqrt(n.saturating_sub(1)) {
                let rest = n - a * a;
                if rest >= 1 && is_square(rest).is_some() {
                    count += 1;
                }
            }
        }
        _ => {
            for a in 1..=isqrt(n.saturating_sub(2)) {
                let after_a = n - a * a;
                for b in 1..=isqrt(after_a.saturating_sub(1)) {
                    let rest = after_a - b * b;
                    if rest >= 1 && is_square(rest).is_some() {
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(count)
}

/// Independent oracle for [`r_d`]: full lexicographic enumeration of all
/// tuples, summing squares instead of solving for the last coordinate.
pub fn r_d_lexicographic(n: u64, d: u32) -> Result<u64> {
    check_dim(d)?;
    if n == 0 {
        return Err(Error::InvalidParameter("level must be positive".into()));
    }
    let cap = isqrt(n);
    let mut count = 0;
    match d {
        2 => {
            for a in 1..=cap {
                for b in 1..=cap {
                    if a * a + b * b == n {
                        count += 1;
                    }
                }
            }
        }
        _ => {
            for a in 1..=cap {
                for b in 1..=cap {
                    for c in 1..=cap {
                        if a * a + b * b + c * c == n {
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(count)
}

/// Representations of `n` as `a^2 + b^2` with `0 <= a <= b`: the
/// classical unordered count with zeros allowed.
pub fn r2_unordered_nonneg(n: u64) -> u64 {
    let mut count = 0;
    let mut a = 0;
    while a * a * 2 <= n {
        if is_square(n - a * a).is_some() {
            count += 1;
        }
        a += 1;
    }
    count
}

/// One row of the unboundedness table at level `5^(2p)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UnboundednessRow {
    pub p: u32,
    pub level: u64,
    /// Ordered positive tuples (this module's multiplicity convention).
    pub ordered_positive: u64,
    /// Companion unordered count with zeros allowed (equals `p + 1`).
    pub unordered_nonneg: u64,
}

/// The multiplicity sequence along `n = 5^(2p)`, which grows without
/// bound under either counting convention. Strict growth of the ordered
/// count is asserted.
pub fn unboundedness_witness(p_max: u32) -> Result<Vec<UnboundednessRow>> {
    if p_max < 1 {
        return Err(Error::InvalidParameter("p_max must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(p_max as usize);
    let mut prev = 0;
    for p in 1..=p_max {
        let level = 25u64.checked_pow(p).ok_or_else(|| {
            Error::ResourceLimit(format!("5^(2*{p}) overflows 64-bit integers"))
        })?;
        let ordered = r_d(level, 2)?;
        if ordered <= prev {
            return Err(Error::Internal(format!(
                "ordered count failed to grow at p = {p}: {ordered} after {prev}"
            )));
        }
        prev = ordered;
        rows.push(UnboundednessRow {
            p,
            level,
            ordered_positive: ordered,
            unordered_nonneg: r2_unordered_nonneg(level),
        });
    }
    Ok(rows)
}

/// `K_sigma`: the volume bound on the largest geometric multiplicity
/// among eigenvalues above `-sigma`, floored.
pub fn k_sigma(sigma: f64, c: f64, d: u32) -> Result<u64> {
    Ok(k_sigma_bound(sigma, c, d)?.floor() as u64)
}

/// The unfloored `K_sigma` bound value.
pub fn k_sigma_bound(sigma: f64, c: f64, d: u32) -> Result<f64> {
    check_dim(d)?;
    check_sigma_c(sigma, c)?;
    // Gamma((d+1)/2) is Gamma(3/2) = sqrt(pi)/2 for d = 2, Gamma(2) = 1
    // for d = 3.
    let value = match d {
        2 => sigma.sqrt() / c,
        _ => std::f64::consts::PI * sigma / (4.0 * c * c),
    };
    Ok(value)
}

/// `K_u_sigma`: the number of modes above `-sigma` (the one-actuator-per-
/// mode count), floored from its volume formula.
pub fn k_u_sigma(sigma: f64, c: f64, d: u32) -> Result<u64> {
    check_dim(d)?;
    check_sigma_c(sigma, c)?;
    // Gamma(d/2 + 1) is Gamma(2) = 1 for d = 2, Gamma(5/2) = 3 sqrt(pi)/4
    // for d = 3.
    let value = match d {
        2 => std::f64::consts::PI * sigma / (4.0 * c * c),
        _ => std::f64::consts::PI * sigma.powf(1.5) / (6.0 * c * c * c),
    };
    Ok(value.floor() as u64)
}

fn check_sigma_c(sigma: f64, c: f64) -> Result<()> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "c must be positive, got {c}"
        )));
    }
    Ok(())
}

/// One eigenvalue level of the commensurate rectangle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RectEigenvalue {
    /// The integer level `n = |alpha|^2`.
    pub level: u64,
    /// The eigenvalue `-c^2 n`.
    pub lambda: f64,
    /// Ordered-positive representation count.
    pub multiplicity: u64,
}

/// Full multiplicity report over the eigenvalues with `lambda >= -sigma`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RectSpectrumReport {
    pub d: u32,
    pub c: f64,
    pub sigma: f64,
    /// Levels in the ball, eigenvalues descending.
    pub eigenvalues: Vec<RectEigenvalue>,
    pub max_multiplicity: u64,
    /// Level attaining the maximum (0 when the ball is empty).
    pub max_multiplicity_level: u64,
    pub k_sigma: u64,
    pub k_u_sigma: u64,
    /// Companion asymptote for `K_u/K` as claimed alongside the floor
    /// formulas: `(d+1) sqrt(pi) sqrt(sigma) / (4c)`.
    pub ratio_asymptote: f64,
    /// Exact large-`sigma` limit of the ratio of the two volume formulas.
    pub ratio_exact: f64,
    pub counting_note: String,
}

const COUNTING_NOTE: &str = "multiplicities count ordered d-tuples of positive integers \
(the number of eigenfunctions at the level); the classical count that yields p+1 at \
n = 5^(2p) ignores order and allows zero parts, and is reported separately by the \
unboundedness table. Both grow without bound.";

/// Enumerate the admissible lattice ball `c^2 |alpha|^2 <= sigma` and
/// report every eigenvalue level with its multiplicity.
pub fn rect_multiplicities(sigma: f64, c: f64, d: u32) -> Result<RectSpectrumReport> {
    check_dim(d)?;
    check_sigma_c(sigma, c)?;
    // inclusive threshold: lambda >= -sigma up to 1e-12 relative slack
    let n_max_f = sigma / (c * c) * (1.0 + 1e-12);
    if !n_max_f.is_finite() {
        return Err(Error::InvalidParameter("sigma / c^2 overflows".into()));
    }
    let n_max = n_max_f as u64;
    let side = isqrt(n_max);
    let cube = side.saturating_pow(d);
    if cube > MAX_LATTICE_POINTS {
        return Err(Error::ResourceLimit(format!(
            "lattice ball has about {cube} candidate points, beyond the {MAX_LATTICE_POINTS} cap"
        )));
    }
    let mut counts: Vec<u64> = vec![0; n_max as usize + 1];
    match d {
        2 => {
            for a in 1..=side {
                for b in 1..=side {
                    let n = a * a + b * b;
                    if n <= n_max {
                        counts[n as usize] += 1;
                    }
                }
            }
        }
        _ => {
            for a in 1..=side {
                for b in 1..=side {
                    let partial = a * a + b * b;
                    if partial >= n_max {
                        continue;
                    }
                    for cc in 1..=side {
                        let n = partial + cc * cc;
                        if n <= n_max {
                            counts[n as usize] += 1;
                        }
                    }
                }
            }
        }
    }
    let mut eigenvalues = Vec::new();
    let mut max_multiplicity = 0;
    let mut max_level = 0;
    for (n, &m) in counts.iter().enumerate() {
        if m > 0 {
            eigenvalues.push(RectEigenvalue {
                level: n as u64,
                lambda: -(c * c) * n as f64,
                multiplicity: m,
            });
            if m > max_multiplicity {
                max_multiplicity = m;
                max_level = n as u64;
            }
        }
    }
    let ratio_exact = match d {
        2 => std::f64::consts::PI * sigma.sqrt() / (4.0 * c),
        _ => 2.0 * sigma.sqrt() / (3.0 * c),
    };
    Ok(RectSpectrumReport {
        d,
        c,
        sigma,
        eigenvalues,
        max_multiplicity,
        max_multiplicity_level: max_level,
        k_sigma: k_sigma(sigma, c, d)?,
        k_u_sigma: k_u_sigma(sigma, c, d)?,
        ratio_asymptote: (d as f64 + 1.0) * SQRT_PI * sigma.sqrt() / (4.0 * c),
        ratio_exact,
        counting_note: COUNTING_NOTE.into(),
    })
}

/// Check the volume bound empirically: the enumerated maximum
/// multiplicity never exceeds the unfloored `K_sigma` value.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundCheck {
    pub max_multiplicity: u64,
    pub bound: f64,
    pub pass: bool,
}

pub fn bound_check(sigma: f64, c: f64, d: u32) -> Result<BoundCheck> {
    let report = rect_multiplicities(sigma, c, d)?;
    let bound = k_sigma_bound(sigma, c, d)?;
    Ok(BoundCheck {
        max_multiplicity: report.max_multiplicity,
        bound,
        pass: (report.max_multiplicity as f64) <= bound,
    })
}

/// A collision witness: two distinct index tuples with equal eigenvalue.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanOutcome {
    pub collision_found: bool,
    pub witness: Option<(Vec<u64>, Vec<u64>)>,
}

/// Exhaustively scan `alpha in [1, alpha_max]^d` for eigenvalue
/// collisions `sum alpha_i^2 q_i = sum beta_i^2 q_i` at relative
/// tolerance 1e-12, where `q_i = 1/c_i^2`. With Q-linearly independent
/// weights the map is injective and no collision exists.
pub fn simple_spectrum_scan(inv_c_squared: &[f64], alpha_max: u64) -> Result<ScanOutcome> {
    let d = inv_c_squared.len() as u32;
    check_dim(d)?;
    if alpha_max < 1 {
        return Err(Error::InvalidParameter("alpha_max must be at least 1".into()));
    }
    if inv_c_squared.iter().any(|&q| !(q > 0.0)) {
        return Err(Error::InvalidParameter(
            "side weights 1/c_i^2 must be positive".into(),
        ));
    }
    let total = alpha_max.saturating_pow(d);
    if total > MAX_LATTICE_POINTS {
        return Err(Error::ResourceLimit(format!(
            "scan would visit {total} tuples, beyond the {MAX_LATTICE_POINTS} cap"
        )));
    }
    let mut values: Vec<(f64, Vec<u64>)> = Vec::with_capacity(total as usize);
    let mut alpha = vec![1u64; d as usize];
    loop {
        let v: f64 = alpha
            .iter()
            .zip(inv_c_squared)
            .map(|(&a, &q)| (a * a) as f64 * q)
            .sum();
        values.push((v, alpha.clone()));
        // odometer increment
        let mut i = 0;
        loop {
            alpha[i] += 1;
            if alpha[i] <= alpha_max {
                break;
            }
            alpha[i] = 1;
            i += 1;
            if i == d as usize {
                // enumerate values, sort, and look for near-equal neighbors
                values.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
                for w in values.windows(2) {
                    let (va, aa) = &w[0];
                    let (vb, bb) = &w[1];
                    if (vb - va).abs() <= 1e-12 * vb.abs().max(*va) && aa != bb {
                        return Ok(ScanOutcome {
                            collision_found: true,
                            witness: Some((aa.clone(), bb.clone())),
                        });
                    }
                }
                return Ok(ScanOutcome {
                    collision_found: false,
                    witness: None,
                });
            }
        }
    }
}
