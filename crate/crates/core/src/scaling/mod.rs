//! Scaling of count matrices onto the JOD scale.
//!
//! Conditions are modelled as Normal random variables with equal variance
//! (Thurstone Case V). The probability that condition `i` is preferred over
//! `j` is `Φ((q_i - q_j) / σ_ij)`, and the default `σ_ij = 1.4826` maps a
//! preference probability of 0.75 to a score difference of exactly 1 JOD.
//! The first condition is the anchor and always scores 0.

mod bfgs;
mod counts;
mod least_squares;
mod likelihood;
mod mle;
mod prior;
mod probability;

pub use counts::CountMatrix;
pub use least_squares::scale_least_squares;
pub use likelihood::{log_likelihood_gradient, pair_log_likelihood, total_log_likelihood};
pub use mle::{log_posterior, log_posterior_gradient, scale_mle};
pub use prior::{desaturate_counts, prior_density, DistancePrior};
pub use probability::{distance_matrix, empirical_probabilities, prob_to_jod};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard deviation of the quality difference that maps `p = 0.75` to 1 JOD.
pub const JOD_SIGMA: f64 = 1.4826;

/// Offset added to the distance prior so that it modulates rather than
/// constrains distances.
pub const DEFAULT_GAMMA: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaleOptions {
    /// `σ_ij`, the standard deviation of a perceived quality difference.
    pub sigma: f64,
    pub use_prior: bool,
    pub gamma: f64,
    /// Stop when the relative change of the objective drops below this.
    pub tolerance: f64,
    /// Stop when the largest gradient component drops below this.
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ScaleOptions {
    fn default() -> Self {
        ScaleOptions {
            sigma: JOD_SIGMA,
            use_prior: true,
            gamma: DEFAULT_GAMMA,
            tolerance: 1e-9,
            gradient_tolerance: 1e-6,
            max_iterations: 10_000,
        }
    }
}

impl ScaleOptions {
    pub fn without_prior() -> Self {
        ScaleOptions {
            use_prior: false,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        if !(self.tolerance > 0.0 && self.gradient_tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "convergence tolerances and the iteration limit must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// JOD scores for every condition, anchored at `jod[0] == 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleResult {
    pub jod: Vec<f64>,
    /// Log-posterior (or log-likelihood without the prior) at `jod` for
    /// maximum-likelihood scaling; negative residual sum of squares for the
    /// least-squares baseline.
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}
