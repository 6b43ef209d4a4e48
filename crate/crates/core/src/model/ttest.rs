use super::ModelError;
use crate::harness::DifferenceSeries;
use crate::stats::{mean_and_sd, StudentT};

/// Posterior of the mean difference on one data set under the correlated
/// t-test: a Student t with `n - 1` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestPosterior {
    pub location: f64,
    pub scale: f64,
    pub dof: f64,
    /// All differences were identical, so the posterior is a point mass.
    pub degenerate: bool,
}

impl TTestPosterior {
    pub fn distribution(&self) -> StudentT {
        StudentT::new(self.location, self.scale, self.dof).expect("validated at construction")
    }
}

/// Correlation-corrected t posterior: the sample variance is inflated by
/// `1/n + rho/(1 - rho)` to account for overlapping training sets.
pub fn correlated_ttest(series: &DifferenceSeries) -> Result<TTestPosterior, ModelError> {
    let n = series.n();
    if n < 2 {
        return Err(ModelError::InvalidInput(format!(
            "{}: the t-test needs at least two differences",
            series.dataset_id
        )));
    }
    if !(0.0..1.0).contains(&series.rho) {
        return Err(ModelError::InvalidInput(format!(
            "{}: rho must lie in [0, 1), got {}",
            series.dataset_id, series.rho
        )));
    }
    let (mean, sd) = mean_and_sd(&series.x);
    let correction = 1.0 / n as f64 + series.rho / (1.0 - series.rho);
    let scale = (correction * sd * sd).sqrt();
    Ok(TTestPosterior {
        location: mean,
        scale,
        dof: (n - 1) as f64,
        degenerate: scale == 0.0,
    })
}
