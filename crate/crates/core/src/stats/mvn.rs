use super::StatsError;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Covariance with a common variance on the diagonal and `rho * variance`
/// everywhere off the diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompoundSymmetryCov {
    n: usize,
    variance: f64,
    rho: f64,
}

impl CompoundSymmetryCov {
    /// Positive definite iff `variance > 0` and `rho` lies in `(-1/(n-1), 1)`.
    pub fn new(n: usize, variance: f64, rho: f64) -> Result<Self, StatsError> {
        if n == 0 {
            return Err(StatsError::InvalidParameter {
                name: "n",
                value: 0.0,
            });
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(StatsError::InvalidParameter {
                name: "variance",
                value: variance,
            });
        }
        if !rho_is_admissible(n, rho) {
            return Err(StatsError::NotPositiveDefinite { n, rho });
        }
        Ok(Self { n, variance, rho })
    }

    /// Skips validation; for hot loops whose inputs are already known valid.
    pub(crate) fn new_unchecked(n: usize, variance: f64, rho: f64) -> Self {
        Self { n, variance, rho }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// The eigenvalue along the all-ones direction.
    pub fn leading_eigenvalue(&self) -> f64 {
        self.variance * (1.0 + (self.n as f64 - 1.0) * self.rho)
    }

    /// The eigenvalue of the orthogonal complement (multiplicity n - 1).
    pub fn residual_eigenvalue(&self) -> f64 {
        self.variance * (1.0 - self.rho)
    }

    pub fn ln_det(&self) -> f64 {
        let n = self.n as f64;
        self.leading_eigenvalue().ln() + (n - 1.0) * self.residual_eigenvalue().ln()
    }
}

/// `rho` keeps a compound-symmetry matrix of dimension `n` positive definite.
pub fn rho_is_admissible(n: usize, rho: f64) -> bool {
    if !rho.is_finite() || rho >= 1.0 {
        return false;
    }
    if n <= 1 {
        return true;
    }
    rho > -1.0 / (n as f64 - 1.0)
}

/// Everything the compound-symmetry likelihood needs from a data
/// vector: its length, mean and centred sum of squares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsSummary {
    pub n: usize,
    pub mean: f64,
    pub centered_ss: f64,
}

impl CsSummary {
    pub fn from_slice(x: &[f64]) -> Self {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let centered_ss = x.iter().map(|v| (v - mean) * (v - mean)).sum();
        Self {
            n,
            mean,
            centered_ss,
        }
    }

    /// Log density under `MVN(1 * mean, cov)` in O(1).
    pub fn loglik(&self, mean: f64, cov: &CompoundSymmetryCov) -> f64 {
        let n = self.n as f64;
        let offset = self.mean - mean;
        // projection onto 1 uses the leading eigenvalue, the remainder the residual one
        let along_ones = n * offset * offset / cov.leading_eigenvalue();
        let orthogonal = self.centered_ss / cov.residual_eigenvalue();
        -0.5 * (n * LN_2PI + cov.ln_det() + along_ones + orthogonal)
    }
}

/// Log density of `x` under a multivariate normal with constant mean vector
/// and compound-symmetry covariance.
pub fn cs_mvn_loglik(x: &[f64], mean: f64, cov: &CompoundSymmetryCov) -> Result<f64, StatsError> {
    if x.len() != cov.dim() {
        return Err(StatsError::DimensionMismatch {
            expected: cov.dim(),
            actual: x.len(),
        });
    }
    Ok(CsSummary::from_slice(x).loglik(mean, cov))
}
