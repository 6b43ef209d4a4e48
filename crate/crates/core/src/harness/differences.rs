use std::collections::BTreeSet;
use std::fmt;

use super::{HarnessError, ScoreMatrix};
use crate::stats::rho_is_admissible;

/// How the fold-overlap correlation of a difference series is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RhoPolicy {
    /// `1 / k`, the evaluation-fold fraction.
    #[default]
    TestFraction,
    Fixed(f64),
}

impl RhoPolicy {
    pub fn resolve(&self, k: usize) -> f64 {
        match *self {
            RhoPolicy::TestFraction => 1.0 / k as f64,
            RhoPolicy::Fixed(rho) => rho,
        }
    }
}

impl fmt::Display for RhoPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhoPolicy::TestFraction => write!(f, "1/k"),
            RhoPolicy::Fixed(rho) => write!(f, "{rho}"),
        }
    }
}

/// Paired score differences of two systems on one data set.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceSeries {
    pub dataset_id: String,
    /// Differences ordered by (repetition, fold).
    pub x: Vec<f64>,
    pub rho: f64,
    pub m: usize,
    pub k: usize,
}

impl DifferenceSeries {
    pub fn new(
        dataset_id: impl Into<String>,
        x: Vec<f64>,
        rho: f64,
        m: usize,
        k: usize,
    ) -> Result<Self, HarnessError> {
        let dataset_id = dataset_id.into();
        if x.len() < 2 {
            return Err(HarnessError::TooFewObservations {
                dataset: dataset_id,
                n: x.len(),
            });
        }
        if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
            return Err(HarnessError::InvalidArgument(format!(
                "{dataset_id}: non-finite difference {bad}"
            )));
        }
        if !rho_is_admissible(x.len(), rho) {
            return Err(HarnessError::InvalidRho { rho, n: x.len() });
        }
        Ok(Self {
            dataset_id,
            x,
            rho,
            m,
            k,
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn negated(&self) -> Self {
        Self {
            x: self.x.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            x: self.x.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

/// Per-dataset differences `system_a - system_b` on one metric.
///
/// Cells where either system's score is missing are dropped from both
/// sides. A (repetition, fold) present for one system but absent for the
/// other on a shared data set is an error. Data sets scored by only one of
/// the systems are skipped.
pub fn assemble_differences(
    scores: &ScoreMatrix,
    system_a: &str,
    system_b: &str,
    metric: &str,
    rho_policy: RhoPolicy,
) -> Result<Vec<DifferenceSeries>, HarnessError> {
    let a_cells = scores.cells(system_a, metric);
    let b_cells = scores.cells(system_b, metric);
    let mut out = Vec::new();
    for (dataset, a) in &a_cells {
        let Some(b) = b_cells.get(dataset) else {
            continue;
        };
        if a.keys().ne(b.keys()) {
            let a_keys: BTreeSet<_> = a.keys().collect();
            let b_keys: BTreeSet<_> = b.keys().collect();
            let (rep, fold) = **a_keys.symmetric_difference(&b_keys).next().expect("sets differ");
            return Err(HarnessError::UnpairedKey {
                dataset: dataset.to_string(),
                repetition: rep,
                fold,
            });
        }
        let mut x = Vec::with_capacity(a.len());
        let mut reps = BTreeSet::new();
        let mut k = 0;
        for ((key, sa), sb) in a.iter().zip(b.values()) {
            reps.insert(key.0);
            k = k.max(key.1 + 1);
            if let (Some(sa), Some(sb)) = (sa, sb) {
                x.push(sa - sb);
            }
        }
        let rho = rho_policy.resolve(k);
        out.push(DifferenceSeries::new(*dataset, x, rho, reps.len(), k)?);
    }
    if out.is_empty() {
        return Err(HarnessError::NoSharedKeys {
            system_a: system_a.to_string(),
            system_b: system_b.to_string(),
            metric: metric.to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ScoreKey;

    fn matrix(rows: &[(&str, &str, usize, usize, Option<f64>)]) -> ScoreMatrix {
        let mut m = ScoreMatrix::new();
        for &(d, s, r, f, v) in rows {
            m.insert(ScoreKey::new(d, s, "token", r, f), v).unwrap();
        }
        m
    }

    fn grid(systems: &[(&str, f64)], datasets: &[&str], m: usize, k: usize) -> ScoreMatrix {
        let mut rows = Vec::new();
        for &(s, v) in systems {
            for &d in datasets {
                for r in 0..m {
                    for f in 0..k {
                        rows.push((d, s, r, f, Some(v)));
                    }
                }
            }
        }
        matrix(&rows)
    }

    #[test]
    fn self_comparison_is_all_zero() {
        let scores = grid(&[("a", 0.93)], &["d1", "d2"], 2, 10);
        let series = assemble_differences(&scores, "a", "a", "token", RhoPolicy::default()).unwrap();
        assert_eq!(series.len(), 2);
        assert!(series.iter().all(|s| s.x.len() == 20 && s.x.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn constant_shift() {
        let scores = grid(&[("a", 0.9), ("b", 0.8)], &["d1"], 3, 10);
        let series = assemble_differences(&scores, "a", "b", "token", RhoPolicy::default()).unwrap();
        assert!(series[0].x.iter().all(|&v| (v - 0.1).abs() < 1e-15));
        assert_eq!(series[0].rho, 0.1);
        assert_eq!((series[0].m, series[0].k), (3, 10));
    }

    #[test]
    fn missing_cells_are_dropped_pairwise() {
        let scores = matrix(&[
            ("d", "a", 0, 0, Some(0.5)),
            ("d", "a", 0, 1, None),
            ("d", "a", 0, 2, Some(0.7)),
            ("d", "b", 0, 0, Some(0.4)),
            ("d", "b", 0, 1, Some(0.4)),
            ("d", "b", 0, 2, Some(0.4)),
        ]);
        let series = assemble_differences(&scores, "a", "b", "token", RhoPolicy::Fixed(0.2)).unwrap();
        assert_eq!(series[0].x.len(), 2);
        assert!((series[0].x[1] - 0.3).abs() < 1e-15);
        assert_eq!(series[0].rho, 0.2);
    }

    #[test]
    fn no_shared_keys() {
        let scores = matrix(&[("d1", "a", 0, 0, Some(0.5)), ("d2", "b", 0, 0, Some(0.5))]);
        assert!(matches!(
            assemble_differences(&scores, "a", "b", "token", RhoPolicy::default()),
            Err(HarnessError::NoSharedKeys { .. })
        ));
        assert!(matches!(
            assemble_differences(&scores, "a", "a", "sentence", RhoPolicy::default()),
            Err(HarnessError::NoSharedKeys { .. })
        ));
    }

    #[test]
    fn unpaired_key_is_an_error() {
        let scores = matrix(&[
            ("d", "a", 0, 0, Some(0.5)),
            ("d", "a", 0, 1, Some(0.5)),
            ("d", "b", 0, 0, Some(0.5)),
        ]);
        assert!(matches!(
            assemble_differences(&scores, "a", "b", "token", RhoPolicy::default()),
            Err(HarnessError::UnpairedKey { repetition: 0, fold: 1, .. })
        ));
    }

    #[test]
    fn invalid_rho_rejected() {
        assert!(DifferenceSeries::new("d", vec![0.1, 0.2, 0.3], 1.0, 1, 3).is_err());
        assert!(DifferenceSeries::new("d", vec![0.1, 0.2, 0.3], -0.5, 1, 3).is_err());
        assert!(DifferenceSeries::new("d", vec![0.1, 0.2, 0.3], -0.49, 1, 3).is_ok());
    }
}
