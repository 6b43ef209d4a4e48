use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::ModelError;
use crate::harness::DifferenceSeries;
use crate::stats::{rho_is_admissible, rng_fork, StudentT};

/// Ground truth for a forward simulation of the hierarchical model.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateParams {
    pub delta0: f64,
    pub sigma0: f64,
    pub nu: f64,
    /// Number of data sets.
    pub q: usize,
    pub m: usize,
    pub k: usize,
    pub rho: f64,
    /// `sigma_i` is drawn uniformly from this interval.
    pub sigma_range: (f64, f64),
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedData {
    pub series: Vec<DifferenceSeries>,
    pub delta: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Simulated difference series, one per data set, named `d0`, `d1`, ...
pub fn generate(params: &GenerateParams) -> Result<Vec<DifferenceSeries>, ModelError> {
    generate_with_truth(params).map(|g| g.series)
}

/// Like [`generate`], also returning the drawn `delta_i` and `sigma_i`.
pub fn generate_with_truth(params: &GenerateParams) -> Result<GeneratedData, ModelError> {
    let bad = |msg: String| Err(ModelError::InvalidInput(msg));
    let n = params.m * params.k;
    if params.q == 0 || n < 2 {
        return bad(format!("need q >= 1 and m*k >= 2, got q={} m*k={n}", params.q));
    }
    if !rho_is_admissible(n, params.rho) {
        return bad(format!("rho {} is not admissible for n={n}", params.rho));
    }
    let (lo, hi) = params.sigma_range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return bad(format!("invalid sigma range ({lo}, {hi})"));
    }
    let population = StudentT::new(params.delta0, params.sigma0, params.nu)
        .map_err(|e| ModelError::InvalidInput(e.to_string()))?;

    let mut rng = rng_fork(params.seed, 0);
    let mut out = GeneratedData {
        series: Vec::with_capacity(params.q),
        delta: Vec::with_capacity(params.q),
        sigma: Vec::with_capacity(params.q),
    };
    let residual = (1.0 - params.rho).sqrt();
    let leading = (1.0 + (n as f64 - 1.0) * params.rho).sqrt();
    for i in 0..params.q {
        let delta = population.sample(&mut rng);
        let sigma = if hi > lo { rng.random_range(lo..hi) } else { lo };
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        // Sigma^{1/2} z for compound symmetry: scale the mean component and
        // the orthogonal remainder by the square roots of their eigenvalues
        let zbar = z.iter().sum::<f64>() / n as f64;
        let x: Vec<f64> = z
            .iter()
            .map(|&zj| delta + sigma * (residual * (zj - zbar) + leading * zbar))
            .collect();
        let s = DifferenceSeries::new(format!("d{i}"), x, params.rho, params.m, params.k)
            .map_err(|e| ModelError::InvalidInput(e.to_string()))?;
        out.series.push(s);
        out.delta.push(delta);
        out.sigma.push(sigma);
    }
    Ok(out)
}
