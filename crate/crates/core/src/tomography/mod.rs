//! State reconstruction from dip depths: depth vectors, linear inversion,
//! diluted maximum-likelihood estimation and resampling error bars.

mod conventional;
mod depths;
mod errors;
mod inversion;
mod mle;
mod reconstruct;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{DensityMatrix, HermitianMatrix};

pub use conventional::{conventional_counts, conventional_qst, reconstruct_conventional};
pub use depths::{estimate_scale, handle_negatives, normalize_depths, DepthEntry, DepthFlag, DepthVector};
pub use errors::{fidelity_errors, resample_dataset, FidelityErrors, ResampleMode};
pub use inversion::linear_inversion;
pub use mle::{mle_from_depths, mle_reconstruct};
pub use reconstruct::{dataset_depths, multipartite_depths, reconstruct, reconstruct_with_errors};

/// Treatment of depths that noise pushed below zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NegativeStrategy {
    /// Replace by zero and keep the setting.
    Zero,
    /// Exclude the setting, provided the rest still spans the operator space.
    #[default]
    Drop,
}

impl fmt::Display for NegativeStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NegativeStrategy::Zero => "zero",
            NegativeStrategy::Drop => "drop",
        })
    }
}

impl std::str::FromStr for NegativeStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(NegativeStrategy::Zero),
            "drop" => Ok(NegativeStrategy::Drop),
            other => Err(Error::invalid("strategy", format!("`{other}` (expected zero or drop)"))),
        }
    }
}

/// Objective maximized over density matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Likelihood {
    /// Poisson likelihood of the depth values with a free overall scale.
    Depths,
    /// Poisson likelihood of the raw zero- and far-delay counts, with a free
    /// baseline per setting and a common depth scale. Multi-party datasets
    /// fall back to [`Likelihood::Depths`].
    #[default]
    Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MleOptions {
    /// Stop once an accepted step raises the log-likelihood per count by
    /// less than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Tolerance used when validating the final state.
    pub physicality_tol: f64,
    pub strategy: NegativeStrategy,
    pub likelihood: Likelihood,
    /// Keep the log-likelihood of every accepted iterate.
    pub record_trace: bool,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            tolerance: 1e-10,
            max_iterations: 100_000,
            physicality_tol: 1e-9,
            strategy: NegativeStrategy::Drop,
            likelihood: Likelihood::Counts,
            record_trace: false,
        }
    }
}

impl MleOptions {
    pub fn with_strategy(mut self, strategy: NegativeStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_likelihood(mut self, likelihood: Likelihood) -> Self {
        self.likelihood = likelihood;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be positive"));
        }
        if !(self.physicality_tol.is_finite() && self.physicality_tol > 0.0) {
            return Err(Error::invalid("physicality_tol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub rho: DensityMatrix,
    /// Trace-normalized linear inversion, not necessarily positive.
    pub rho_linear: HermitianMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub strategy: NegativeStrategy,
    /// `<k|rho|k>` for every setting of the frame.
    pub fidelities: BTreeMap<String, f64>,
    /// Resampling standard deviation of each fidelity, when computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr_fidelities: Option<BTreeMap<String, f64>>,
    /// Depths the estimate was fitted to, after negative handling.
    pub depths: DepthVector,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

impl ReconstructionResult {
    pub fn fidelity(&self, label: &str) -> Result<f64> {
        self.fidelities
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }
}
