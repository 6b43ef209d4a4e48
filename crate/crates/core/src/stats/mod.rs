//! Numerical kernels shared by the sampler and the decision rule.

mod mvn;
pub mod special;
mod student_t;

pub use mvn::{cs_mvn_loglik, rho_is_admissible, CompoundSymmetryCov, CsSummary};
pub use student_t::StudentT;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator type behind every random stream in the toolkit.
pub type StreamRng = ChaCha8Rng;

/// A reproducible random stream for `(seed, stream_id)`.
///
/// Different stream ids share the key derived from `seed` but run on
/// disjoint ChaCha streams, so they never overlap.
pub fn rng_fork(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("rho = {rho} is not in (-1/(n-1), 1) for n = {n}")]
    NotPositiveDefinite { n: usize, rho: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Sample mean and unbiased (n - 1) standard deviation.
pub fn mean_and_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n as f64 - 1.0)).sqrt())
}

/// Empirical quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = (n as f64 - 1.0) * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
