//! JSON-serializable views of spectra, rank reports, feedback laws and
//! simulation traces, shared by the library consumers and the CLI.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::criteria::RankReport;
use crate::simulate::{DecayFit, Scheme, SimulationTrace};
use crate::spectral::SpectralData;
use crate::stabilize::{FeedbackLaw, SplitSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        ComplexJson { re: z.re, im: z.im }
    }
}

/// A complex matrix as a pair of nested real arrays (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&Array2<Complex64>> for ComplexMatrixJson {
    fn from(m: &Array2<Complex64>) -> Self {
        let (rows, cols) = m.dim();
        let mut re = vec![vec![0.0; cols]; rows];
        let mut im = vec![vec![0.0; cols]; rows];
        for i in 0..rows {
            for j in 0..cols {
                re[i][j] = m[[i, j]].re;
                im[i][j] = m[[i, j]].im;
            }
        }
        ComplexMatrixJson { re, im }
    }
}

pub fn matrix_to_nested(m: &Array2<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[[i, j]]).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterJson {
    pub lambda: ComplexJson,
    pub algebraic_mult: usize,
    pub geometric_mult: usize,
    pub jordan_depth: usize,
    pub conjugate_partner: Option<usize>,
    pub grouping_ambiguous: bool,
    pub right_basis: ComplexMatrixJson,
    pub left_basis: ComplexMatrixJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub generator_dim: usize,
    pub cluster_tolerance: f64,
    pub generator_norm: f64,
    pub clusters: Vec<ClusterJson>,
}

impl From<&SpectralData> for SpectrumJson {
    fn from(sp: &SpectralData) -> Self {
        SpectrumJson {
            generator_dim: sp.generator_dim,
            cluster_tolerance: sp.cluster_tolerance,
            generator_norm: sp.generator_norm,
            clusters: sp
                .clusters
                .iter()
                .map(|c| ClusterJson {
                    lambda: c.lambda.into(),
                    algebraic_mult: c.algebraic_mult,
                    geometric_mult: c.geometric_mult,
                    jordan_depth: c.jordan_depth,
                    conjugate_partner: c.conjugate_partner,
                    grouping_ambiguous: c.grouping_ambiguous,
                    right_basis: (&c.right_basis).into(),
                    left_basis: (&c.left_basis).into(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankEntryJson {
    pub cluster: usize,
    pub lambda: ComplexJson,
    pub geometric_mult: usize,
    pub numerical_rank: usize,
    pub min_singular_value: f64,
    pub gap: f64,
    pub structural_zero: bool,
    pub pass: bool,
    pub w: ComplexMatrixJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankReportJson {
    pub overall_admissible: bool,
    pub minimal_k: usize,
    pub sigma: Option<f64>,
    pub family_size: usize,
    /// Finite families only; the operator form over infinite families is
    /// out of scope and every report is a truncation to K directions.
    pub truncated_to_finite_family: bool,
    pub entries: Vec<RankEntryJson>,
}

impl From<&RankReport> for RankReportJson {
    fn from(r: &RankReport) -> Self {
        RankReportJson {
            overall_admissible: r.overall_admissible,
            minimal_k: r.minimal_k,
            sigma: r.sigma,
            family_size: r.family_size,
            truncated_to_finite_family: true,
            entries: r
                .entries
                .iter()
                .map(|e| RankEntryJson {
                    cluster: e.cluster,
                    lambda: e.lambda.into(),
                    geometric_mult: e.geometric_mult,
                    numerical_rank: e.numerical_rank,
                    min_singular_value: e.min_singular_value,
                    gap: e.gap,
                    structural_zero: e.structural_zero,
                    pass: e.pass,
                    w: (&e.w).into(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedbackSummaryJson {
    pub sigma: f64,
    pub eps: f64,
    pub abscissa_before: f64,
    pub abscissa_after: f64,
    pub k: usize,
    pub d_n: usize,
    pub method: crate::stabilize::SynthesisMethod,
}

pub fn feedback_summary(
    law: &FeedbackLaw,
    split: &SplitSystem,
    abscissa_before: f64,
    abscissa_after: f64,
) -> FeedbackSummaryJson {
    FeedbackSummaryJson {
        sigma: law.target_sigma,
        eps: law.margin_eps,
        abscissa_before,
        abscissa_after,
        k: law.directions.len(),
        d_n: split.dim(),
        method: law.method,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSummaryJson {
    pub rate: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub scheme: Scheme,
    pub dt: f64,
    pub window: (f64, f64),
}

pub fn trace_summary(trace: &SimulationTrace, fit: &DecayFit, window: (f64, f64)) -> TraceSummaryJson {
    TraceSummaryJson {
        rate: fit.rate,
        prefactor: fit.prefactor,
        r_squared: fit.r_squared,
        scheme: trace.scheme,
        dt: trace.dt,
        window,
    }
}

/// CSV rows `t,norm,u_1..u_K` for a trace.
pub fn trace_to_csv(trace: &SimulationTrace) -> String {
    let mut out = String::new();
    let k = trace.controls.first().map_or(0, |u| u.len());
    out.push_str("t,norm");
    for j in 1..=k {
        out.push_str(&format!(",u_{j}"));
    }
    out.push('\n');
    for (i, (t, norm)) in trace.times.iter().zip(&trace.state_norms).enumerate() {
        out.push_str(&format!("{t},{norm}"));
        if k > 0 {
            for v in &trace.controls[i] {
                out.push_str(&format!(",{v}"));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_coupled_heat_1d;
    use crate::numeric::DEFAULT_CLUSTER_TOL;
    use crate::spectral::compute_spectrum;

    #[test]
    fn spectrum_report_serializes() {
        let m = build_coupled_heat_1d(3, 1.0).unwrap();
        let sp = compute_spectrum(&m.matrix, DEFAULT_CLUSTER_TOL).unwrap();
        let json = serde_json::to_string_pretty(&SpectrumJson::from(&sp)).unwrap();
        let back: SpectrumJson = serde_json::from_str(&json).unwrap();
        assert_eq!(back.clusters.len(), 3);
        assert_eq!(back.clusters[0].algebraic_mult, 2);
        assert_eq!(back.clusters[0].jordan_depth, 2);
    }

    #[test]
    fn trace_csv_shape() {
        let trace = SimulationTrace {
            times: vec![0.0, 0.5],
            state_norms: vec![1.0, 0.5],
            controls: vec![vec![0.1, -0.2], vec![0.05, -0.1]],
            scheme: Scheme::ImplicitEuler,
            dt: 0.5,
        };
        let csv = trace_to_csv(&trace);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,norm,u_1,u_2");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,1,0.1,-0.2"));
    }
}
