//! Split R-hat and multi-chain effective sample size.
//!
//! Both operate on split chains: each chain is cut in half so that a trend
//! within a chain shows up as between-chain disagreement. The ESS estimator
//! uses Geyer's initial monotone sequence over the multi-chain
//! autocorrelation.

/// Convergence summary for one scalar parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDiagnostics {
    pub name: String,
    pub r_hat: f64,
    pub ess: f64,
    /// Set when the statistics are undefined, e.g. every draw is identical.
    pub warning: Option<String>,
}

/// R-hat above this marks a fit as not converged.
pub const R_HAT_THRESHOLD: f64 = 1.05;

fn split<'a>(chains: &[&'a [f64]]) -> Vec<&'a [f64]> {
    let half = chains.iter().map(|c| c.len()).min().unwrap_or(0) / 2;
    chains
        .iter()
        .flat_map(|c| [&c[..half], &c[half..2 * half]])
        .collect()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Within-chain mean variance `W` and the pooled estimate `var+`.
fn variance_components(chains: &[&[f64]]) -> (f64, f64) {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = chains.iter().map(|c| variance(c)).sum::<f64>() / chains.len() as f64;
    let b_over_n = variance(&means);
    (w, (n - 1.0) / n * w + b_over_n)
}

/// Split R-hat. Returns NaN when it is undefined (fewer than four draws per
/// chain, or zero within-chain variance).
pub fn split_r_hat(chains: &[&[f64]]) -> f64 {
    if chains.is_empty() || chains.iter().any(|c| c.len() < 4) {
        return f64::NAN;
    }
    let halves = split(chains);
    let (w, var_plus) = variance_components(&halves);
    if !(w > 0.0) {
        return f64::NAN;
    }
    (var_plus / w).sqrt()
}

/// Biased autocovariance at `lag` (divides by the chain length).
fn autocovariance(x: &[f64], mean: f64, lag: usize) -> f64 {
    let n = x.len();
    if lag >= n {
        return 0.0;
    }
    (0..n - lag).map(|i| (x[i] - mean) * (x[i + lag] - mean)).sum::<f64>() / n as f64
}

/// Effective sample size of the pooled draws.
pub fn effective_sample_size(chains: &[&[f64]]) -> f64 {
    if chains.is_empty() || chains.iter().any(|c| c.len() < 4) {
        return f64::NAN;
    }
    let halves = split(chains);
    let m = halves.len();
    let n = halves[0].len();
    let means: Vec<f64> = halves.iter().map(|c| mean(c)).collect();
    let (w, var_plus) = variance_components(&halves);
    if !(w > 0.0) {
        return f64::NAN;
    }
    let rho = |lag: usize| {
        let acov = halves
            .iter()
            .zip(&means)
            .map(|(c, &mu)| autocovariance(c, mu, lag))
            .sum::<f64>()
            / m as f64;
        1.0 - (w - acov) / var_plus
    };

    let mut rho_hat = vec![0.0; n + 2];
    rho_hat[0] = 1.0;
    let mut even = 1.0;
    let mut odd = rho(1);
    rho_hat[1] = odd;
    let mut t = 1;
    while t + 5 < n && even + odd > 0.0 {
        even = rho(t + 1);
        odd = rho(t + 2);
        if even + odd >= 0.0 {
            rho_hat[t + 1] = even;
            rho_hat[t + 2] = odd;
        }
        t += 2;
    }
    let max_t = t;
    if even > 0.0 {
        rho_hat[max_t + 1] = even;
    }

    // initial monotone sequence
    let mut s = 1;
    while s + 3 <= max_t {
        let prev = rho_hat[s - 1] + rho_hat[s];
        if rho_hat[s + 1] + rho_hat[s + 2] > prev {
            rho_hat[s + 1] = prev / 2.0;
            rho_hat[s + 2] = prev / 2.0;
        }
        s += 2;
    }
    let total = (m * n) as f64;
    let tau = (-1.0 + 2.0 * rho_hat[..max_t].iter().sum::<f64>() + rho_hat[max_t + 1])
        .max(1.0 / total.log10());
    total / tau
}

/// R-hat and ESS for one named parameter, with a warning for degenerate input.
pub fn diagnose(name: &str, chains: &[&[f64]]) -> ParamDiagnostics {
    let r_hat = split_r_hat(chains);
    let ess = effective_sample_size(chains);
    let warning = if r_hat.is_nan() {
        Some("R-hat undefined: chains are too short or have zero variance".to_string())
    } else {
        None
    };
    ParamDiagnostics {
        name: name.to_string(),
        r_hat,
        ess,
        warning,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::rng_fork;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_chains(m: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        (0..m)
            .map(|c| {
                let mut rng = rng_fork(seed, c as u64);
                (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
            })
            .collect()
    }

    fn refs(chains: &[Vec<f64>]) -> Vec<&[f64]> {
        chains.iter().map(Vec::as_slice).collect()
    }

    #[test]
    fn constant_chains_are_undefined() {
        let chains = vec![vec![1.0; 100], vec![1.0; 100]];
        let d = diagnose("c", &refs(&chains));
        assert!(d.r_hat.is_nan());
        assert!(d.warning.is_some());
    }

    #[test]
    fn independent_draws_converge() {
        let chains = normal_chains(4, 10_000, 1);
        let r = split_r_hat(&refs(&chains));
        assert!(r < 1.01, "r_hat = {r}");
        let ess = effective_sample_size(&refs(&chains));
        assert!(ess > 30_000.0 && ess < 50_000.0, "ess = {ess}");
    }

    #[test]
    fn offset_chain_is_flagged() {
        let mut chains = normal_chains(4, 2_000, 2);
        for v in &mut chains[3] {
            *v += 5.0;
        }
        assert!(split_r_hat(&refs(&chains)) > 1.2);
    }

    #[test]
    fn autocorrelated_chain_has_smaller_ess() {
        // AR(1) with phi = 0.9: ESS / N is about (1 - phi) / (1 + phi)
        let phi: f64 = 0.9;
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|c| {
                let mut rng = rng_fork(3, c);
                let mut x = 0.0;
                (0..20_000)
                    .map(|_| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        x = phi * x + (1.0 - phi * phi).sqrt() * e;
                        x
                    })
                    .collect()
            })
            .collect();
        let ess = effective_sample_size(&refs(&chains));
        let expected = 80_000.0 * (1.0 - phi) / (1.0 + phi);
        assert!((ess / expected - 1.0).abs() < 0.2, "ess = {ess}, expected ~{expected}");
    }
}
