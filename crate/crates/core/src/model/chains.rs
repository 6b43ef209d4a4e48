use super::diagnostics::{diagnose, ParamDiagnostics, R_HAT_THRESHOLD};
use super::GammaPrior;

/// The prior bounds a fit actually used, on the working scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSummary {
    pub delta0_bound: f64,
    pub sigma0_upper: f64,
    /// Shared lower edge of `sigma0` and every `sigma_i`.
    pub sigma_lower: f64,
    pub sigma_upper: Vec<f64>,
    pub nu_prior: GammaPrior,
    pub nu_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Convergence {
    Converged,
    NotConverged { parameter: String, r_hat: f64 },
}

/// Posterior draws, stored `[chain][draw]` for the population parameters and
/// `[dataset][chain][draw]` for the per-dataset ones.
///
/// Draws live on the working scale: raw differences divided by
/// `standardization_constant` (1 when standardization is off).
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorChains {
    pub dataset_ids: Vec<String>,
    pub delta0: Vec<Vec<f64>>,
    pub sigma0: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
    pub delta: Vec<Vec<Vec<f64>>>,
    pub sigma: Vec<Vec<Vec<f64>>>,
    pub standardization_constant: f64,
    pub priors: PriorSummary,
    pub diagnostics: Vec<ParamDiagnostics>,
}

impl PosteriorChains {
    pub fn n_chains(&self) -> usize {
        self.delta0.len()
    }

    pub fn draws_per_chain(&self) -> usize {
        self.delta0.first().map_or(0, Vec::len)
    }

    pub fn total_draws(&self) -> usize {
        self.delta0.iter().map(Vec::len).sum()
    }

    /// `(delta0, sigma0, nu)` for every retained draw, chain by chain.
    pub fn hyper_draws(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.delta0
            .iter()
            .zip(&self.sigma0)
            .zip(&self.nu)
            .flat_map(|((d, s), n)| {
                d.iter()
                    .zip(s)
                    .zip(n)
                    .map(|((&d, &s), &n)| (d, s, n))
            })
    }

    /// Parameter names in the order used by [`Self::parameter`].
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = vec!["delta0".to_string(), "sigma0".to_string(), "nu".to_string()];
        for i in 0..self.dataset_ids.len() {
            names.push(format!("delta[{i}]"));
        }
        for i in 0..self.dataset_ids.len() {
            names.push(format!("sigma[{i}]"));
        }
        names
    }

    /// Chains of one parameter by name.
    pub fn parameter(&self, name: &str) -> Option<&[Vec<f64>]> {
        match name {
            "delta0" => Some(&self.delta0),
            "sigma0" => Some(&self.sigma0),
            "nu" => Some(&self.nu),
            _ => {
                let (kind, rest) = name.split_once('[')?;
                let idx: usize = rest.strip_suffix(']')?.parse().ok()?;
                match kind {
                    "delta" => self.delta.get(idx).map(Vec::as_slice),
                    "sigma" => self.sigma.get(idx).map(Vec::as_slice),
                    _ => None,
                }
            }
        }
    }

    /// Recomputes split R-hat and ESS for every parameter.
    pub fn compute_diagnostics(&self) -> Vec<ParamDiagnostics> {
        self.parameter_names()
            .iter()
            .map(|name| {
                let chains = self.parameter(name).expect("name from parameter_names");
                let refs: Vec<&[f64]> = chains.iter().map(Vec::as_slice).collect();
                diagnose(name, &refs)
            })
            .collect()
    }

    pub fn diagnostic(&self, name: &str) -> Option<&ParamDiagnostics> {
        self.diagnostics.iter().find(|d| d.name == name)
    }

    /// Flags the worst parameter whose R-hat exceeds [`R_HAT_THRESHOLD`].
    /// Undefined (NaN) R-hat values carry their own warning and do not fail
    /// the gate.
    pub fn convergence(&self) -> Convergence {
        self.diagnostics
            .iter()
            .filter(|d| d.r_hat > R_HAT_THRESHOLD)
            .max_by(|a, b| a.r_hat.total_cmp(&b.r_hat))
            .map_or(Convergence::Converged, |d| Convergence::NotConverged {
                parameter: d.name.clone(),
                r_hat: d.r_hat,
            })
    }

    pub fn is_converged(&self) -> bool {
        self.convergence() == Convergence::Converged
    }

    /// Chains with every location parameter negated, as if the two systems
    /// had been swapped.
    pub fn negated(&self) -> Self {
        let neg = |v: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            v.iter().map(|c| c.iter().map(|x| -x).collect()).collect()
        };
        let mut out = Self {
            delta0: neg(&self.delta0),
            delta: self.delta.iter().map(neg).collect(),
            ..self.clone()
        };
        out.diagnostics = out.compute_diagnostics();
        out
    }

    /// Posterior mean of `delta0` mapped back to the raw difference scale.
    pub fn delta0_mean_raw(&self) -> f64 {
        let total: f64 = self.delta0.iter().flatten().sum();
        total / self.total_draws() as f64 * self.standardization_constant
    }

    /// All draws of one parameter pooled across chains, on the raw scale
    /// for location and scale parameters.
    pub fn pooled_raw(&self, name: &str) -> Option<Vec<f64>> {
        let chains = self.parameter(name)?;
        let factor = if name == "nu" { 1.0 } else { self.standardization_constant };
        Some(chains.iter().flatten().map(|v| v * factor).collect())
    }
}
