//! Adaptive random-walk Metropolis-within-Gibbs for the hierarchical model.
//!
//! Each scalar (`delta0`, `log sigma0`, `log nu`, every `delta_i`, every
//! `log sigma_i`) gets its own univariate random-walk update with a step
//! size tuned towards 44% acceptance during warmup and frozen afterwards.
//! A joint move shifting `delta0` and all `delta_i` together follows each
//! sweep; it leaves the t terms unchanged and lets the population location
//! travel when the per-dataset effects are tightly pooled.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::chains::{PosteriorChains, PriorSummary};
use super::{ModelConfig, ModelError, NU_MIN};
use crate::harness::DifferenceSeries;
use crate::stats::special::ln_gamma;
use crate::stats::{mean_and_sd, rng_fork, CompoundSymmetryCov, CsSummary, StreamRng};

/// Used as the working scale when every difference is identical.
const DEGENERATE_SCALE: f64 = 1e-6;
/// Per-dataset standard deviations are floored at this fraction of the
/// pooled one before they set prior bounds.
const SD_FLOOR_FRACTION: f64 = 1e-3;
/// Lower edge of the `sigma0` and `sigma_i` supports as a fraction of the
/// pooled standard deviation; keeps the posterior proper for constant series.
const SIGMA_LOWER_FRACTION: f64 = 1e-4;

const TARGET_ACCEPTANCE: f64 = 0.44;
const ADAPT_BATCH: usize = 50;

struct Prepared {
    summaries: Vec<CsSummary>,
    rhos: Vec<f64>,
    constant: f64,
    scale_ref: f64,
    sd_eff: Vec<f64>,
    priors: PriorSummary,
    nu_shape: f64,
    nu_rate: f64,
}

fn prepare(series: &[DifferenceSeries], config: &ModelConfig) -> Result<Prepared, ModelError> {
    let raw_sd: Vec<f64> = series.iter().map(|s| mean_and_sd(&s.x).1).collect();
    let pooled = raw_sd.iter().sum::<f64>() / raw_sd.len() as f64;
    let constant = if config.standardize && pooled > 0.0 && pooled.is_finite() {
        pooled
    } else {
        1.0
    };

    let mut summaries = Vec::with_capacity(series.len());
    let mut max_abs: f64 = 0.0;
    for s in series {
        let working: Vec<f64> = s.x.iter().map(|v| v / constant).collect();
        max_abs = working.iter().fold(max_abs, |acc, v| acc.max(v.abs()));
        summaries.push(CsSummary::from_slice(&working));
    }
    let sd_working: Vec<f64> = raw_sd.iter().map(|v| v / constant).collect();
    let mut scale_ref = sd_working.iter().sum::<f64>() / sd_working.len() as f64;
    if !(scale_ref > 0.0) {
        scale_ref = DEGENERATE_SCALE;
    }
    let sd_eff: Vec<f64> = sd_working
        .iter()
        .map(|&sd| sd.max(SD_FLOOR_FRACTION * scale_ref))
        .collect();

    let factor = config.sigma_bar_factor;
    let priors = PriorSummary {
        delta0_bound: config.delta0_prior_halfwidth * max_abs.max(scale_ref),
        sigma0_upper: factor * scale_ref,
        sigma_lower: SIGMA_LOWER_FRACTION * scale_ref,
        sigma_upper: sd_eff.iter().map(|sd| factor * sd).collect(),
        nu_prior: config.nu_prior,
        nu_min: NU_MIN,
    };
    if priors.sigma_upper.iter().any(|&u| u <= priors.sigma_lower) {
        return Err(ModelError::InvalidConfig(format!(
            "sigma_bar_factor {factor} leaves an empty support for the per-dataset scales"
        )));
    }
    Ok(Prepared {
        summaries,
        rhos: series.iter().map(|s| s.rho).collect(),
        constant,
        scale_ref,
        sd_eff,
        priors,
        nu_shape: config.nu_prior.shape,
        nu_rate: config.nu_prior.rate,
    })
}

/// Log normalising constant of the standard t density with `nu` dof.
fn t_log_norm(nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * std::f64::consts::PI).ln()
}

#[derive(Clone)]
struct State {
    delta0: f64,
    log_sigma0: f64,
    log_nu: f64,
    delta: Vec<f64>,
    log_sigma: Vec<f64>,
}

struct Step {
    log_size: f64,
    accepted: usize,
    tried: usize,
}

impl Step {
    fn new(size: f64) -> Self {
        Self {
            log_size: size.ln(),
            accepted: 0,
            tried: 0,
        }
    }

    fn propose<R: Rng>(&self, current: f64, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        current + self.log_size.exp() * z
    }

    fn record(&mut self, accepted: bool) {
        self.tried += 1;
        if accepted {
            self.accepted += 1;
        }
    }

    fn adapt(&mut self, batch: usize) {
        if self.tried == 0 {
            return;
        }
        let rate = self.accepted as f64 / self.tried as f64;
        let eta = (1.0 / (batch as f64).sqrt()).min(0.3);
        self.log_size += if rate > TARGET_ACCEPTANCE { eta } else { -eta };
        self.accepted = 0;
        self.tried = 0;
    }
}

struct Steps {
    delta0: Step,
    log_sigma0: Step,
    log_nu: Step,
    delta: Vec<Step>,
    log_sigma: Vec<Step>,
    shift: Step,
    funnel: Step,
}

impl Steps {
    fn all_mut(&mut self) -> impl Iterator<Item = &mut Step> {
        [
            &mut self.delta0,
            &mut self.log_sigma0,
            &mut self.log_nu,
            &mut self.shift,
            &mut self.funnel,
        ]
            .into_iter()
            .chain(self.delta.iter_mut())
            .chain(self.log_sigma.iter_mut())
    }
}

struct Target<'a> {
    data: &'a Prepared,
}

impl Target<'_> {
    fn lik(&self, i: usize, delta: f64, log_sigma: f64) -> f64 {
        let s = &self.data.summaries[i];
        let var = (2.0 * log_sigma).exp();
        let cov = CompoundSymmetryCov::new_unchecked(s.n, var, self.data.rhos[i]);
        s.loglik(delta, &cov)
    }

    /// Sum over datasets of log t(delta_i | delta0, sigma0, nu).
    fn t_sum(&self, delta: &[f64], delta0: f64, log_sigma0: f64, nu: f64) -> f64 {
        let sigma0 = log_sigma0.exp();
        let kernel: f64 = delta
            .iter()
            .map(|d| {
                let z = (d - delta0) / sigma0;
                (z * z / nu).ln_1p()
            })
            .sum();
        delta.len() as f64 * (t_log_norm(nu) - log_sigma0) - 0.5 * (nu + 1.0) * kernel
    }

    fn t_one(&self, d: f64, delta0: f64, log_sigma0: f64, nu: f64, norm: f64) -> f64 {
        let z = (d - delta0) / log_sigma0.exp();
        norm - log_sigma0 - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
    }

    fn nu_log_prior(&self, log_nu: f64) -> f64 {
        // Gamma(shape, rate) on nu plus the log-transform Jacobian
        self.data.nu_shape * log_nu - self.data.nu_rate * log_nu.exp()
    }

    fn in_support(&self, s: &State) -> bool {
        let p = &self.data.priors;
        s.delta0.abs() <= p.delta0_bound
            && s.log_sigma0.exp() > p.sigma_lower
            && s.log_sigma0.exp() < p.sigma0_upper
            && s.log_nu.exp() >= NU_MIN
            && s.log_sigma.iter().zip(&p.sigma_upper).all(|(&ls, &u)| {
                let v = ls.exp();
                v > p.sigma_lower && v < u
            })
    }

    fn log_posterior(&self, s: &State) -> f64 {
        if !self.in_support(s) {
            return f64::NEG_INFINITY;
        }
        let nu = s.log_nu.exp();
        let mut lp = self.t_sum(&s.delta, s.delta0, s.log_sigma0, nu)
            + s.log_sigma0
            + self.nu_log_prior(s.log_nu);
        for i in 0..s.delta.len() {
            lp += self.lik(i, s.delta[i], s.log_sigma[i]) + s.log_sigma[i];
        }
        lp
    }
}

fn accept<R: Rng>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

fn initial_state(data: &Prepared, rng: &mut StreamRng) -> State {
    let q = data.summaries.len();
    let p = &data.priors;
    let mut normal = || -> f64 { StandardNormal.sample(rng) };
    let mut delta = Vec::with_capacity(q);
    let mut log_sigma = Vec::with_capacity(q);
    for (i, s) in data.summaries.iter().enumerate() {
        let se = standard_error(data, i);
        delta.push(s.mean + 0.5 * se * normal());
        let sigma = (data.sd_eff[i] * (0.2 * normal()).exp())
            .clamp(p.sigma_lower * 1.5, p.sigma_upper[i] * 0.5);
        log_sigma.push(sigma.ln());
    }
    let (mean_delta, sd_delta) = mean_and_sd(&delta);
    let delta0 = (mean_delta + 0.5 * sd_delta.max(data.scale_ref * 0.01) * normal())
        .clamp(-0.99 * p.delta0_bound, 0.99 * p.delta0_bound);
    let sigma0 = (sd_delta.max(data.scale_ref * 0.01) * (0.3 * normal()).exp())
        .clamp(p.sigma_lower * 1.5, 0.5 * p.sigma0_upper);
    let nu = (10.0f64.ln() + 0.5 * normal()).exp().max(NU_MIN + 0.5);
    State {
        delta0,
        log_sigma0: sigma0.ln(),
        log_nu: nu.ln(),
        delta,
        log_sigma,
    }
}

/// Posterior standard deviation of the mean of dataset `i` at its sample sd.
fn standard_error(data: &Prepared, i: usize) -> f64 {
    let n = data.summaries[i].n as f64;
    let rho = data.rhos[i];
    data.sd_eff[i] * ((1.0 + (n - 1.0) * rho) / n).max(1e-12).sqrt()
}

fn initial_steps(data: &Prepared) -> Steps {
    let q = data.summaries.len();
    let se: Vec<f64> = (0..q).map(|i| standard_error(data, i)).collect();
    let mean_se = se.iter().sum::<f64>() / q as f64;
    Steps {
        delta0: Step::new(mean_se),
        log_sigma0: Step::new(0.5),
        log_nu: Step::new(0.5),
        delta: se.iter().map(|&s| Step::new(s)).collect(),
        log_sigma: data
            .summaries
            .iter()
            .map(|s| Step::new((0.5 / s.n as f64).sqrt()))
            .collect(),
        shift: Step::new(mean_se / (q as f64).sqrt()),
        funnel: Step::new(0.5),
    }
}

fn sweep(target: &Target<'_>, s: &mut State, steps: &mut Steps, rng: &mut StreamRng) {
    let p = &target.data.priors;
    let q = s.delta.len();
    let mut nu = s.log_nu.exp();
    let mut t_cur = target.t_sum(&s.delta, s.delta0, s.log_sigma0, nu);

    // delta0
    let prop = steps.delta0.propose(s.delta0, rng);
    let ok = prop.abs() <= p.delta0_bound && {
        let t_new = target.t_sum(&s.delta, prop, s.log_sigma0, nu);
        if accept(t_new - t_cur, rng) {
            s.delta0 = prop;
            t_cur = t_new;
            true
        } else {
            false
        }
    };
    steps.delta0.record(ok);

    // log sigma0
    let prop = steps.log_sigma0.propose(s.log_sigma0, rng);
    let ok = prop.exp() > p.sigma_lower && prop.exp() < p.sigma0_upper && {
        let t_new = target.t_sum(&s.delta, s.delta0, prop, nu);
        if accept(t_new - t_cur + prop - s.log_sigma0, rng) {
            s.log_sigma0 = prop;
            t_cur = t_new;
            true
        } else {
            false
        }
    };
    steps.log_sigma0.record(ok);

    // sigma0 and the offset of delta0 from the mean effect rescaled together,
    // so delta0 can follow sigma0 into and out of the neck of the funnel
    let eps = steps.funnel.propose(0.0, rng);
    let centre = s.delta.iter().sum::<f64>() / q as f64;
    let d_new = centre + (s.delta0 - centre) * eps.exp();
    let ls_new = s.log_sigma0 + eps;
    let ok = d_new.abs() <= p.delta0_bound && ls_new.exp() > p.sigma_lower && ls_new.exp() < p.sigma0_upper && {
        let t_new = target.t_sum(&s.delta, d_new, ls_new, nu);
        // one Jacobian factor for each of the two rescaled coordinates
        if accept(t_new - t_cur + 2.0 * eps, rng) {
            s.delta0 = d_new;
            s.log_sigma0 = ls_new;
            t_cur = t_new;
            true
        } else {
            false
        }
    };
    steps.funnel.record(ok);

    // log nu
    let prop = steps.log_nu.propose(s.log_nu, rng);
    let ok = prop.exp() >= NU_MIN && {
        let nu_new = prop.exp();
        let t_new = target.t_sum(&s.delta, s.delta0, s.log_sigma0, nu_new);
        let ratio = t_new - t_cur + target.nu_log_prior(prop) - target.nu_log_prior(s.log_nu);
        if accept(ratio, rng) {
            s.log_nu = prop;
            nu = nu_new;
            true
        } else {
            false
        }
    };
    steps.log_nu.record(ok);

    let norm = t_log_norm(nu);
    for i in 0..q {
        // delta_i
        let prop = steps.delta[i].propose(s.delta[i], rng);
        let ratio = target.t_one(prop, s.delta0, s.log_sigma0, nu, norm)
            - target.t_one(s.delta[i], s.delta0, s.log_sigma0, nu, norm)
            + target.lik(i, prop, s.log_sigma[i])
            - target.lik(i, s.delta[i], s.log_sigma[i]);
        let ok = accept(ratio, rng);
        if ok {
            s.delta[i] = prop;
        }
        steps.delta[i].record(ok);

        // log sigma_i
        let prop = steps.log_sigma[i].propose(s.log_sigma[i], rng);
        let v = prop.exp();
        let ok = v > p.sigma_lower && v < p.sigma_upper[i] && {
            let ratio = target.lik(i, s.delta[i], prop) - target.lik(i, s.delta[i], s.log_sigma[i])
                + prop
                - s.log_sigma[i];
            accept(ratio, rng)
        };
        if ok {
            s.log_sigma[i] = prop;
        }
        steps.log_sigma[i].record(ok);
    }

    // joint location shift
    let eps = steps.shift.propose(0.0, rng);
    let ok = (s.delta0 + eps).abs() <= p.delta0_bound && {
        let ratio: f64 = (0..q)
            .map(|i| {
                target.lik(i, s.delta[i] + eps, s.log_sigma[i])
                    - target.lik(i, s.delta[i], s.log_sigma[i])
            })
            .sum();
        accept(ratio, rng)
    };
    if ok {
        s.delta0 += eps;
        for d in &mut s.delta {
            *d += eps;
        }
    }
    steps.shift.record(ok);
}

struct ChainDraws {
    delta0: Vec<f64>,
    sigma0: Vec<f64>,
    nu: Vec<f64>,
    delta: Vec<Vec<f64>>,
    sigma: Vec<Vec<f64>>,
}

fn run_chain(data: &Prepared, config: &ModelConfig, chain: usize) -> Result<ChainDraws, ModelError> {
    let target = Target { data };
    let mut rng = rng_fork(config.seed, chain as u64);
    let mut state = initial_state(data, &mut rng);
    if !target.log_posterior(&state).is_finite() {
        return Err(ModelError::Initialization { chain });
    }
    let mut steps = initial_steps(data);

    for it in 1..=config.warmup {
        sweep(&target, &mut state, &mut steps, &mut rng);
        if it % ADAPT_BATCH == 0 {
            let batch = it / ADAPT_BATCH;
            steps.all_mut().for_each(|s| s.adapt(batch));
        }
    }

    let n = config.samples_per_chain;
    let q = data.summaries.len();
    let mut out = ChainDraws {
        delta0: Vec::with_capacity(n),
        sigma0: Vec::with_capacity(n),
        nu: Vec::with_capacity(n),
        delta: vec![Vec::with_capacity(n); q],
        sigma: vec![Vec::with_capacity(n); q],
    };
    for _ in 0..n {
        for _ in 0..config.thin {
            sweep(&target, &mut state, &mut steps, &mut rng);
        }
        out.delta0.push(state.delta0);
        out.sigma0.push(state.log_sigma0.exp());
        out.nu.push(state.log_nu.exp());
        for i in 0..q {
            out.delta[i].push(state.delta[i]);
            out.sigma[i].push(state.log_sigma[i].exp());
        }
    }
    Ok(out)
}

/// Samples the joint posterior of the hierarchical model.
///
/// Chains run concurrently (at most `config.workers` at a time), each on its
/// own random stream forked from `config.seed`, so the result depends only
/// on the inputs and the configuration. Lack of convergence is reported
/// through [`PosteriorChains::convergence`], not as an error, so the draws
/// stay available for inspection.
pub fn fit(series: &[DifferenceSeries], config: &ModelConfig) -> Result<PosteriorChains, ModelError> {
    if series.len() < 2 {
        return Err(ModelError::TooFewDatasets { q: series.len() });
    }
    config.validate()?;
    for s in series {
        if s.x.len() < 2 || s.x.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidInput(format!(
                "data set {} needs at least two finite differences",
                s.dataset_id
            )));
        }
    }
    let data = prepare(series, config)?;

    let mut results: Vec<Option<Result<ChainDraws, ModelError>>> =
        (0..config.chains).map(|_| None).collect();
    let workers = config.workers.max(1);
    for start in (0..config.chains).step_by(workers) {
        let end = (start + workers).min(config.chains);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (start..end)
                .map(|c| {
                    let data = &data;
                    scope.spawn(move || run_chain(data, config, c))
                })
                .collect();
            for (c, h) in (start..end).zip(handles) {
                results[c] = Some(h.join().expect("sampler thread panicked"));
            }
        });
    }

    let q = series.len();
    let mut chains = PosteriorChains {
        dataset_ids: series.iter().map(|s| s.dataset_id.clone()).collect(),
        delta0: Vec::new(),
        sigma0: Vec::new(),
        nu: Vec::new(),
        delta: vec![Vec::new(); q],
        sigma: vec![Vec::new(); q],
        standardization_constant: data.constant,
        priors: data.priors.clone(),
        diagnostics: Vec::new(),
    };
    for r in results {
        let draws = r.expect("every chain ran")?;
        chains.delta0.push(draws.delta0);
        chains.sigma0.push(draws.sigma0);
        chains.nu.push(draws.nu);
        for (i, (d, s)) in draws.delta.into_iter().zip(draws.sigma).enumerate() {
            chains.delta[i].push(d);
            chains.sigma[i].push(s);
        }
    }
    chains.diagnostics = chains.compute_diagnostics();
    Ok(chains)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(id: &str, x: Vec<f64>) -> DifferenceSeries {
        DifferenceSeries::new(id, x, 0.1, 1, 10).unwrap()
    }

    fn small_config(seed: u64) -> ModelConfig {
        ModelConfig {
            samples_per_chain: 1000,
            warmup: 500,
            thin: 1,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn single_dataset_is_rejected() {
        let s = series("d", vec![0.1, 0.2, 0.3]);
        assert!(matches!(
            fit(&[s], &ModelConfig::default()),
            Err(ModelError::TooFewDatasets { q: 1 })
        ));
    }

    #[test]
    fn standardization_constant_is_pooled_mean_sd() {
        let a = series("a", vec![0.0, 0.2, 0.4]);
        let b = series("b", vec![1.0, 1.4, 1.8]);
        let data = prepare(&[a.clone(), b.clone()], &ModelConfig::default()).unwrap();
        assert!((data.constant - 0.3).abs() < 1e-12);
        let raw = prepare(&[a, b], &ModelConfig { standardize: false, ..Default::default() }).unwrap();
        assert_eq!(raw.constant, 1.0);
        assert!((raw.priors.sigma0_upper - 300.0).abs() < 1e-9);
    }

    #[test]
    fn draws_respect_supports_and_are_reproducible() {
        let a = series("a", (0..20).map(|i| 0.01 * (i % 5) as f64).collect());
        let b = series("b", (0..20).map(|i| 0.02 - 0.005 * (i % 3) as f64).collect());
        let c1 = fit(&[a.clone(), b.clone()], &small_config(5)).unwrap();
        let c2 = fit(&[a, b], &small_config(5)).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(c1.total_draws(), 4000);
        for (i, chains) in c1.sigma.iter().enumerate() {
            for &v in chains.iter().flatten() {
                assert!(v > 0.0 && v < c1.priors.sigma_upper[i]);
            }
        }
        assert!(c1.nu.iter().flatten().all(|&v| v >= NU_MIN));
        assert!(c1.sigma0.iter().flatten().all(|&v| v > 0.0));
    }
}
