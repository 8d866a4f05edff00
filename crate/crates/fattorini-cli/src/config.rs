//! Run configuration: one JSON object drives the whole pipeline, and the
//! resolved form (defaults filled in) is echoed next to the outputs so
//! every run is reproducible.

use serde::{Deserialize, Serialize};

use fattorini::io::ModelDescriptor;
use fattorini::simulate::Scheme;
use fattorini::stabilize::SynthesisMethod;

/// Actuator specification: derive from the observed left eigenvectors,
/// or give the directions explicitly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActuatorSpec {
    /// The string `"auto"`: directions `B^T chi_k` over the unstable
    /// clusters, verified after construction.
    Auto(String),
    Explicit {
        vectors: Vec<Vec<f64>>,
    },
}

impl ActuatorSpec {
    pub fn is_auto(&self) -> bool {
        matches!(self, ActuatorSpec::Auto(s) if s == "auto")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    /// `"random-seeded"` or a path to a CSV/Matrix Market vector.
    #[serde(default = "default_y0")]
    pub y0: String,
    /// Fit window; defaults to `[1/max(sigma,1), t_final]`.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
}

fn default_scheme() -> Scheme {
    Scheme::ImplicitEuler
}

fn default_y0() -> String {
    "random-seeded".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelDescriptor,
    #[serde(default = "default_actuators")]
    pub actuators: ActuatorSpec,
    #[serde(default)]
    pub sigma: f64,
    /// Defaults to `0.1 * max(sigma, 1)`.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "default_method")]
    pub method: SynthesisMethod,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// Build a dynamic (derivative) controller instead of static feedback.
    #[serde(default)]
    pub dynamic: bool,
}

fn default_actuators() -> ActuatorSpec {
    ActuatorSpec::Auto("auto".into())
}

fn default_method() -> SynthesisMethod {
    SynthesisMethod::Lqr
}

impl RunConfig {
    /// Fill in every defaulted field so the echo file is complete.
    pub fn resolved(mut self) -> RunConfig {
        if self.eps.is_none() {
            self.eps = Some(0.1 * self.sigma.max(1.0));
        }
        if let Some(sim) = &mut self.simulate {
            if sim.t_final.is_none() {
                sim.t_final = Some(10.0 / self.sigma.max(1.0));
            }
        }
        self
    }

    pub fn eps_value(&self) -> f64 {
        self.eps.unwrap_or(0.1 * self.sigma.max(1.0))
    }
}
