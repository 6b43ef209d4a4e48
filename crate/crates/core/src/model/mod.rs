//! The hierarchical model over per-dataset difference series.
//!
//! ```text
//! x_i      ~ MVN(1 delta_i, Sigma_i)      Sigma_i compound symmetric (sigma_i^2, rho_i)
//! delta_i  ~ t(delta0, sigma0, nu)
//! sigma_i  ~ Uniform(0, sigma_bar_i)
//! delta0   ~ Uniform(-w, w)
//! sigma0   ~ Uniform(0, sigma0_bar)
//! nu       ~ Gamma(shape, rate) truncated to [1, inf)
//! ```
//!
//! [`fit`] samples the joint posterior with adaptive Metropolis-within-Gibbs;
//! [`generate`] runs the same model forward; [`correlated_ttest`] is the
//! closed-form single-dataset companion.

mod chains;
pub mod diagnostics;
mod generate;
mod sampler;
mod ttest;

pub use chains::{Convergence, PosteriorChains, PriorSummary};
pub use diagnostics::{ParamDiagnostics, R_HAT_THRESHOLD};
pub use generate::{generate, generate_with_truth, GenerateParams, GeneratedData};
pub use sampler::fit;
pub use ttest::{correlated_ttest, TTestPosterior};

/// Gamma hyperprior on the degrees of freedom, `rate` parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

/// Lower truncation point of the degrees-of-freedom prior.
pub const NU_MIN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Multiplier turning sample standard deviations into the upper bounds
    /// of the uniform priors on `sigma_i` and `sigma0`.
    pub sigma_bar_factor: f64,
    /// Half-width of the `delta0` prior, in units of the largest absolute
    /// (working-scale) difference.
    pub delta0_prior_halfwidth: f64,
    pub nu_prior: GammaPrior,
    /// Divide all differences by the pooled mean standard deviation first.
    pub standardize: bool,
    pub chains: usize,
    /// Retained draws per chain, after warmup and thinning.
    pub samples_per_chain: usize,
    pub warmup: usize,
    /// Sweeps per retained draw.
    pub thin: usize,
    pub seed: u64,
    /// Maximum number of chains sampled concurrently.
    pub workers: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            sigma_bar_factor: 1000.0,
            delta0_prior_halfwidth: 1.0,
            nu_prior: GammaPrior {
                shape: 2.0,
                rate: 0.1,
            },
            standardize: true,
            chains: 4,
            samples_per_chain: 12_500,
            warmup: 2_500,
            thin: 4,
            seed: 0,
            workers: 4,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.chains < 2 {
            return bad(format!("chains must be at least 2, got {}", self.chains));
        }
        if self.samples_per_chain < 1000 {
            return bad(format!(
                "samples_per_chain must be at least 1000, got {}",
                self.samples_per_chain
            ));
        }
        if self.thin == 0 {
            return bad("thin must be at least 1".into());
        }
        if !(self.sigma_bar_factor > 0.0 && self.sigma_bar_factor.is_finite()) {
            return bad(format!("sigma_bar_factor must be positive, got {}", self.sigma_bar_factor));
        }
        if !(self.delta0_prior_halfwidth > 0.0 && self.delta0_prior_halfwidth.is_finite()) {
            return bad(format!(
                "delta0_prior_halfwidth must be positive, got {}",
                self.delta0_prior_halfwidth
            ));
        }
        if !(self.nu_prior.shape > 0.0 && self.nu_prior.rate > 0.0) {
            return bad("nu prior shape and rate must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("hierarchical fit needs at least 2 data sets, got {q}; use the correlated t-test for a single data set")]
    TooFewDatasets { q: usize },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("failed to initialise chain {chain}: log posterior is not finite")]
    Initialization { chain: usize },
}
