//! Matrix-scale generator/input pairs: 1D Dirichlet Laplacian, shifted
//! reaction-diffusion, the coupled two-block heat system, and custom
//! matrices loaded from files.
//!
//! Grid convention: `n` interior points on `(0, length)` with homogeneous
//! Dirichlet boundary eliminated, so `h = length / (n + 1)`. Generators are
//! stored dense; every downstream factorization is dense anyway.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which builder produced a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Laplacian1d,
    ReactionDiffusion,
    CoupledHeat,
    Custom,
}

/// Uniform 1D grid metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Interior point count.
    pub points: usize,
    /// Domain length.
    pub length: f64,
    /// Mesh width `length / (points + 1)`.
    pub spacing: f64,
}

/// A square real matrix standing for the semidiscretized generator `A`,
/// plus provenance metadata.
#[derive(Debug, Clone)]
pub struct GeneratorModel {
    pub matrix: Array2<f64>,
    pub family: ModelFamily,
    pub grid: Option<Grid>,
    /// The `mu` in `y_t = y_xx + mu y`; 0 when absent.
    pub shift: f64,
}

impl GeneratorModel {
    /// State dimension.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The same generator shifted by `mu * I` (spectrum translates by `mu`).
    pub fn shifted(&self, mu: f64) -> GeneratorModel {
        let mut matrix = self.matrix.clone();
        for i in 0..matrix.nrows() {
            matrix[[i, i]] += mu;
        }
        GeneratorModel {
            matrix,
            family: self.family,
            grid: self.grid,
            shift: self.shift + mu,
        }
    }

    /// Frobenius norm of the generator, the scale reference for tolerances.
    pub fn norm(&self) -> f64 {
        self.matrix.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// How an input matrix was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuatorKind {
    Indicator,
    Columns,
    Custom,
}

/// Which state block(s) an indicator actuator feeds. For the coupled heat
/// system the control enters the second equation only unless overridden.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuatorChannels {
    /// Second block for `CoupledHeat`, the whole state otherwise.
    Default,
    FirstBlock,
    SecondBlock,
    BothBlocks,
}

/// A rectangular matrix standing for `B : U -> H`, with the actuator
/// footprint recorded as 0-based state row indices.
#[derive(Debug, Clone)]
pub struct InputModel {
    pub matrix: Array2<f64>,
    pub support: Vec<usize>,
    pub kind: ActuatorKind,
}

impl InputModel {
    /// State dimension (rows).
    pub fn state_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Control dimension (columns).
    pub fn control_dim(&self) -> usize {
        self.matrix.ncols()
    }
}

fn check_grid_args(n: usize, length: f64) -> Result<Grid> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "need at least 2 interior points, got {n}"
        )));
    }
    if !(length > 0.0) {
        return Err(Error::InvalidDimension(format!(
            "domain length must be positive, got {length}"
        )));
    }
    Ok(Grid {
        points: n,
        length,
        spacing: length / (n as f64 + 1.0),
    })
}

fn laplacian_matrix(n: usize, h: f64) -> Array2<f64> {
    let mut m = Array2::zeros((n, n));
    let d = -2.0 / (h * h);
    let o = 1.0 / (h * h);
    for i in 0..n {
        m[[i, i]] = d;
        if i + 1 < n {
            m[[i, i + 1]] = o;
            m[[i + 1, i]] = o;
        }
    }
    m
}

/// Standard second-order finite-difference Dirichlet Laplacian on `n`
/// interior points of `(0, length)`.
///
/// Eigenvalues are `-(4/h^2) sin^2(k pi / (2(n+1)))` for `k = 1..n`.
pub fn build_laplacian_1d(n: usize, length: f64) -> Result<GeneratorModel> {
    let grid = check_grid_args(n, length)?;
    Ok(GeneratorModel {
        matrix: laplacian_matrix(n, grid.spacing),
        family: ModelFamily::Laplacian1d,
        grid: Some(grid),
        shift: 0.0,
    })
}

/// Closed-form eigenvalues of [`build_laplacian_1d`], ascending in `k`.
pub fn laplacian_1d_eigenvalues(n: usize, length: f64) -> Result<Vec<f64>> {
    let grid = check_grid_args(n, length)?;
    let h = grid.spacing;
    Ok((1..=n)
        .map(|k| {
            let s = (k as f64 * std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin();
            -(4.0 / (h * h)) * s * s
        })
        .collect())
}

/// `laplacian + mu I`: shifting the diffusion makes the leading modes
/// unstable once `mu` exceeds the smallest eigenvalue magnitude.
pub fn build_reaction_diffusion_1d(n: usize, length: f64, shift: f64) -> Result<GeneratorModel> {
    let grid = check_grid_args(n, length)?;
    let mut matrix = laplacian_matrix(n, grid.spacing);
    for i in 0..n {
        matrix[[i, i]] += shift;
    }
    Ok(GeneratorModel {
        matrix,
        family: ModelFamily::ReactionDiffusion,
        grid: Some(grid),
        shift,
    })
}

/// Two heat equations coupled one way: block matrix `[[L, -I], [0, L]]`
/// of size `2n`. Every eigenvalue of `L` appears with algebraic
/// multiplicity 2 but geometric multiplicity 1.
pub fn build_coupled_heat_1d(n: usize, length: f64) -> Result<GeneratorModel> {
    let grid = check_grid_args(n, length)?;
    let l = laplacian_matrix(n, grid.spacing);
    let mut matrix = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            matrix[[i, j]] = l[[i, j]];
            matrix[[n + i, n + j]] = l[[i, j]];
        }
        matrix[[i, n + i]] = -1.0;
    }
    Ok(GeneratorModel {
        matrix,
        family: ModelFamily::CoupledHeat,
        grid: Some(grid),
        shift: 0.0,
    })
}

/// Indicator actuators on the grid interval `omega = [lo, hi]` (1-based,
/// inclusive, in interior-point numbering). One control channel per grid
/// point of `omega`; each column is a canonical indicator restricted to
/// the selected state block.
pub fn build_indicator_actuator(
    model: &GeneratorModel,
    omega: (usize, usize),
    channels: ActuatorChannels,
) -> Result<InputModel> {
    let grid = model.grid.ok_or_else(|| {
        Error::InvalidSupport("indicator actuators need a gridded model".into())
    })?;
    let (lo, hi) = omega;
    if lo < 1 || hi < lo || hi > grid.points {
        return Err(Error::InvalidSupport(format!(
            "omega [{lo}, {hi}] is empty or outside the grid 1..={}",
            grid.points
        )));
    }
    let coupled = model.family == ModelFamily::CoupledHeat;
    if !coupled
        && !matches!(channels, ActuatorChannels::Default)
    {
        return Err(Error::InvalidSupport(
            "block selection only applies to the coupled heat model".into(),
        ));
    }
    let n = model.dim();
    let block = grid.points;
    let width = hi - lo + 1;

    // 0-based state rows hit by each indicator column.
    let offsets: Vec<usize> = if coupled {
        match channels {
            ActuatorChannels::FirstBlock => vec![0],
            ActuatorChannels::Default | ActuatorChannels::SecondBlock => vec![block],
            ActuatorChannels::BothBlocks => vec![0, block],
        }
    } else {
        vec![0]
    };

    let cols = width * offsets.len();
    let mut matrix = Array2::zeros((n, cols));
    let mut support = Vec::new();
    let mut c = 0;
    for &off in &offsets {
        for p in lo..=hi {
            let row = off + (p - 1);
            matrix[[row, c]] = 1.0;
            support.push(row);
            c += 1;
        }
    }
    support.sort_unstable();
    support.dedup();
    Ok(InputModel {
        matrix,
        support,
        kind: ActuatorKind::Indicator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray_linalg::{c64, Eig};

    fn real_eigs_sorted(m: &Array2<f64>) -> Vec<f64> {
        let (vals, _) = m.eig().unwrap();
        let mut re: Vec<f64> = vals.iter().map(|z: &c64| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        re
    }

    #[test]
    fn laplacian_small_matrix_entries() {
        let m = build_laplacian_1d(2, std::f64::consts::PI).unwrap();
        let h = std::f64::consts::PI / 3.0;
        assert_eq!(m.grid.unwrap().spacing, h);
        assert_eq!(m.matrix[[0, 0]], -2.0 / (h * h));
        assert_eq!(m.matrix[[0, 1]], 1.0 / (h * h));
        assert_eq!(m.matrix[[1, 0]], 1.0 / (h * h));
        assert_eq!(m.matrix[[1, 1]], -2.0 / (h * h));
    }

    #[test]
    fn laplacian_closed_form_eigenvalues() {
        // Direct eigensolve against the tridiagonal closed form.
        for (n, length) in [(2usize, std::f64::consts::PI), (17, 1.3), (50, std::f64::consts::PI)] {
            let m = build_laplacian_1d(n, length).unwrap();
            let mut expected = laplacian_1d_eigenvalues(n, length).unwrap();
            expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let got = real_eigs_sorted(&m.matrix);
            for (g, e) in got.iter().zip(&expected) {
                assert!(
                    (g - e).abs() <= 1e-10 * e.abs(),
                    "n={n}: {g} vs closed form {e}"
                );
            }
        }
    }

    #[test]
    fn laplacian_continuum_limit() {
        // Smallest-magnitude mode of the n=50 discretization sits within
        // 0.1% of the continuum value -1 on (0, pi).
        let m = build_laplacian_1d(50, std::f64::consts::PI).unwrap();
        let eigs = real_eigs_sorted(&m.matrix);
        let smallest = eigs.last().unwrap();
        assert!((smallest + 1.0).abs() < 1e-3, "got {smallest}");
    }

    #[test]
    fn laplacian_rejects_bad_arguments() {
        assert!(matches!(
            build_laplacian_1d(1, 1.0),
            Err(Error::InvalidDimension(_))
        ));
        assert!(matches!(
            build_laplacian_1d(5, 0.0),
            Err(Error::InvalidDimension(_))
        ));
        assert!(matches!(
            build_laplacian_1d(5, -2.0),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn reaction_diffusion_unstable_mode_count() {
        let m = build_reaction_diffusion_1d(50, std::f64::consts::PI, 12.0).unwrap();
        let eigs = real_eigs_sorted(&m.matrix);
        let unstable = eigs.iter().filter(|x| **x > 0.0).count();
        assert_eq!(unstable, 3); // continuum values 11, 8, 3
        let m0 = build_reaction_diffusion_1d(50, std::f64::consts::PI, 0.0).unwrap();
        assert!(real_eigs_sorted(&m0.matrix).iter().all(|x| *x < 0.0));
    }

    #[test]
    fn reaction_diffusion_is_exact_shift() {
        let lap = build_laplacian_1d(50, std::f64::consts::PI).unwrap();
        let rd = build_reaction_diffusion_1d(50, std::f64::consts::PI, 12.0).unwrap();
        let mut shifted = lap.matrix.clone();
        for i in 0..50 {
            shifted[[i, i]] += 12.0;
        }
        assert_eq!(shifted, rd.matrix);
        assert_eq!(rd.shift, 12.0);
    }

    #[test]
    fn coupled_heat_block_structure() {
        let n = 4;
        let m = build_coupled_heat_1d(n, std::f64::consts::PI).unwrap();
        let l = build_laplacian_1d(n, std::f64::consts::PI).unwrap();
        assert_eq!(m.dim(), 2 * n);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(m.matrix[[i, j]], l.matrix[[i, j]]);
                assert_eq!(m.matrix[[n + i, n + j]], l.matrix[[i, j]]);
                assert_eq!(m.matrix[[n + i, j]], 0.0);
                let expect = if i == j { -1.0 } else { 0.0 };
                assert_eq!(m.matrix[[i, n + j]], expect);
            }
        }
    }

    #[test]
    fn coupled_heat_spectrum_is_doubled_laplacian() {
        let n = 10;
        let m = build_coupled_heat_1d(n, std::f64::consts::PI).unwrap();
        let l = build_laplacian_1d(n, std::f64::consts::PI).unwrap();
        let l_norm = l.norm();
        let mut doubled: Vec<f64> = real_eigs_sorted(&l.matrix)
            .into_iter()
            .flat_map(|x| [x, x])
            .collect();
        doubled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = real_eigs_sorted(&m.matrix);
        for (g, e) in got.iter().zip(&doubled) {
            assert!((g - e).abs() <= 1e-8 * l_norm, "{g} vs {e}");
        }
    }

    #[test]
    fn coupled_heat_first_block_eigenvector() {
        // (xi, 0) is an eigenvector of the block matrix whenever L xi = lambda xi.
        let n = 2;
        let a = build_coupled_heat_1d(n, std::f64::consts::PI).unwrap();
        let l = build_laplacian_1d(n, std::f64::consts::PI).unwrap();
        let (vals, vecs) = l.matrix.eig().unwrap();
        for (k, lambda) in vals.iter().enumerate() {
            let mut ext = ndarray::Array1::<c64>::zeros(2 * n);
            for i in 0..n {
                ext[i] = vecs[[i, k]];
            }
            let a_c = a.matrix.mapv(|x| c64::new(x, 0.0));
            let prod = a_c.dot(&ext);
            for i in 0..2 * n {
                let diff = prod[i] - *lambda * ext[i];
                assert!(diff.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn builders_are_deterministic() {
        let a = build_coupled_heat_1d(13, 2.7).unwrap();
        let b = build_coupled_heat_1d(13, 2.7).unwrap();
        assert_eq!(a.matrix, b.matrix);
        let c = build_reaction_diffusion_1d(13, 2.7, 3.3).unwrap();
        let d = build_reaction_diffusion_1d(13, 2.7, 3.3).unwrap();
        assert_eq!(c.matrix, d.matrix);
    }

    #[test]
    fn indicator_actuator_rows() {
        let m = build_coupled_heat_1d(10, 1.0).unwrap();
        let b = build_indicator_actuator(&m, (4, 6), ActuatorChannels::Default).unwrap();
        assert_eq!(b.matrix.shape(), &[20, 3]);
        let nonzero_rows: Vec<usize> = (0..20)
            .filter(|&i| (0..3).any(|j| b.matrix[[i, j]] != 0.0))
            .collect();
        assert_eq!(nonzero_rows, vec![13, 14, 15]); // 1-based 14..16
        assert_eq!(b.support, vec![13, 14, 15]);
    }

    #[test]
    fn indicator_full_support_is_identity() {
        let m = build_laplacian_1d(10, 1.0).unwrap();
        let b = build_indicator_actuator(&m, (1, 10), ActuatorChannels::Default).unwrap();
        assert_eq!(b.matrix, Array2::<f64>::eye(10));
    }

    #[test]
    fn indicator_rejects_bad_support() {
        let m = build_laplacian_1d(10, 1.0).unwrap();
        assert!(matches!(
            build_indicator_actuator(&m, (5, 4), ActuatorChannels::Default),
            Err(Error::InvalidSupport(_))
        ));
        assert!(matches!(
            build_indicator_actuator(&m, (1, 11), ActuatorChannels::Default),
            Err(Error::InvalidSupport(_))
        ));
        assert!(matches!(
            build_indicator_actuator(&m, (0, 3), ActuatorChannels::Default),
            Err(Error::InvalidSupport(_))
        ));
    }

    #[test]
    fn first_block_actuation_for_coupled_heat() {
        let m = build_coupled_heat_1d(5, 1.0).unwrap();
        let b = build_indicator_actuator(&m, (2, 3), ActuatorChannels::FirstBlock).unwrap();
        assert_eq!(b.support, vec![1, 2]);
        assert_eq!(b.matrix.shape(), &[10, 2]);
    }
}
