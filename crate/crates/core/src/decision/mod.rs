//! From posterior draws to a decision triple.
//!
//! Each draw `(delta0, sigma0, nu)` defines the predictive distribution of
//! the mean difference on a new data set. The draw votes for whichever of
//! the three regions (below, inside, above the ROPE) holds most of that
//! distribution's mass; the triple is the vote share of each region.
//!
//! Differences are `A - B`, so `Right` favours system A and `Left` favours B.

mod rank;

pub use rank::{rank, Inconsistency, PairVerdict, Ranking, Relation};

use std::fmt;
use std::str::FromStr;

use crate::harness::DifferenceSeries;
use crate::model::{PosteriorChains, TTestPosterior};
use crate::stats::{quantile_sorted, StudentT};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecisionError {
    #[error("invalid ROPE half-width {0}; must be finite and >= 0")]
    InvalidRope(f64),
    #[error("no posterior draws to tally")]
    EmptyChains,
    #[error("no comparison for the pair {a} / {b}")]
    MissingPair { a: String, b: String },
    #[error("ranking needs at least 2 systems, got {0}")]
    TooFewSystems(usize),
    #[error("unknown system {0} in pairwise verdicts")]
    UnknownSystem(String),
    #[error("no differences to size the ROPE from")]
    NoDifferences,
}

/// The symmetric interval `[-halfwidth, halfwidth]` on the raw difference scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RopeInterval {
    halfwidth: f64,
}

impl RopeInterval {
    pub fn new(halfwidth: f64) -> Result<Self, DecisionError> {
        if !(halfwidth >= 0.0 && halfwidth.is_finite()) {
            return Err(DecisionError::InvalidRope(halfwidth));
        }
        Ok(Self { halfwidth })
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }
}

/// How the ROPE half-width is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RopeSizing {
    Fixed(f64),
    /// Half the width of the pooled empirical 2.5%-97.5% interval of all
    /// per-fold differences.
    Ci95,
}

impl RopeSizing {
    pub fn resolve(&self, series: &[DifferenceSeries]) -> Result<RopeInterval, DecisionError> {
        match *self {
            RopeSizing::Fixed(r) => RopeInterval::new(r),
            RopeSizing::Ci95 => RopeInterval::new(ci95_halfwidth(series)?),
        }
    }

    /// One-line description for run metadata.
    pub fn describe(&self) -> String {
        match self {
            RopeSizing::Fixed(r) => format!("fixed {r}"),
            RopeSizing::Ci95 => {
                "ci95: (q97.5 - q2.5) / 2 of pooled per-fold differences, linear interpolation".into()
            }
        }
    }
}

/// `(q97.5 - q2.5) / 2` of every difference in `series`, pooled.
pub fn ci95_halfwidth(series: &[DifferenceSeries]) -> Result<f64, DecisionError> {
    let mut all: Vec<f64> = series.iter().flat_map(|s| s.x.iter().copied()).collect();
    if all.is_empty() {
        return Err(DecisionError::NoDifferences);
    }
    all.sort_by(f64::total_cmp);
    Ok(0.5 * (quantile_sorted(&all, 0.975) - quantile_sorted(&all, 0.025)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Left,
    Rope,
    Right,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Left => "left",
            Region::Rope => "rope",
            Region::Right => "right",
        }
    }

    pub fn flipped(&self) -> Self {
        match self {
            Region::Left => Region::Right,
            Region::Rope => Region::Rope,
            Region::Right => Region::Left,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Region::Left),
            "rope" => Ok(Region::Rope),
            "right" => Ok(Region::Right),
            other => Err(format!("unknown region '{other}'")),
        }
    }
}

/// Mass of a region triple, in `(left, rope, right)` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionProbs {
    pub left: f64,
    pub rope: f64,
    pub right: f64,
}

impl RegionProbs {
    /// Largest region; ties go to rope, then left, then right.
    pub fn argmax(&self) -> Region {
        if self.rope >= self.left && self.rope >= self.right {
            Region::Rope
        } else if self.left >= self.right {
            Region::Left
        } else {
            Region::Right
        }
    }
}

/// Mass of `t(delta0, sigma0, nu)` below, inside and above `[-r, r]`.
/// `sigma0 == 0` is treated as a point mass at `delta0`.
pub fn region_probs(delta0: f64, sigma0: f64, nu: f64, halfwidth: f64) -> RegionProbs {
    let t = StudentT::new(delta0, sigma0, nu).expect("sigma0 >= 0 and nu > 0");
    probs_of(&t, halfwidth)
}

fn probs_of(t: &StudentT, r: f64) -> RegionProbs {
    if t.is_point_mass() {
        let d = t.location();
        let region = if d < -r {
            Region::Left
        } else if d > r {
            Region::Right
        } else {
            Region::Rope
        };
        return RegionProbs {
            left: (region == Region::Left) as u8 as f64,
            rope: (region == Region::Rope) as u8 as f64,
            right: (region == Region::Right) as u8 as f64,
        };
    }
    let left = t.cdf(-r);
    let right = t.sf(r);
    let rope = if r == 0.0 {
        0.0
    } else {
        (1.0 - (left + right)).max(0.0)
    };
    RegionProbs { left, rope, right }
}

/// Vote counts and shares over the three regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionTriple {
    pub n_left: u64,
    pub n_rope: u64,
    pub n_right: u64,
    pub p_left: f64,
    pub p_rope: f64,
    pub p_right: f64,
    /// Number of votes; 0 for analytic triples that are not vote counts.
    pub n_samples: u64,
    pub verdict: Region,
}

impl DecisionTriple {
    pub fn from_counts(n_left: u64, n_rope: u64, n_right: u64) -> Self {
        let n = n_left + n_rope + n_right;
        let share = |c: u64| if n == 0 { 0.0 } else { c as f64 / n as f64 };
        let probs = RegionProbs {
            left: share(n_left),
            rope: share(n_rope),
            right: share(n_right),
        };
        Self {
            n_left,
            n_rope,
            n_right,
            p_left: probs.left,
            p_rope: probs.rope,
            p_right: probs.right,
            n_samples: n,
            verdict: probs.argmax(),
        }
    }

    /// A triple given directly as probabilities, with no counters.
    pub fn from_probs(p: RegionProbs) -> Self {
        Self {
            n_left: 0,
            n_rope: 0,
            n_right: 0,
            p_left: p.left,
            p_rope: p.rope,
            p_right: p.right,
            n_samples: 0,
            verdict: p.argmax(),
        }
    }

    pub fn probs(&self) -> RegionProbs {
        RegionProbs {
            left: self.p_left,
            rope: self.p_rope,
            right: self.p_right,
        }
    }

    /// The triple for the comparison with the two systems swapped.
    pub fn flipped(&self) -> Self {
        Self {
            n_left: self.n_right,
            n_right: self.n_left,
            p_left: self.p_right,
            p_right: self.p_left,
            verdict: self.verdict.flipped(),
            ..*self
        }
    }
}

/// Vote of every retained draw. The ROPE is divided by the chains'
/// standardization constant to bring it onto the working scale.
pub fn tally(chains: &PosteriorChains, rope: RopeInterval) -> Result<DecisionTriple, DecisionError> {
    tally_draws(chains.hyper_draws(), rope.halfwidth() / chains.standardization_constant)
}

/// Like [`tally`], for draws already on the same scale as `halfwidth`.
pub fn tally_draws(
    draws: impl IntoIterator<Item = (f64, f64, f64)>,
    halfwidth: f64,
) -> Result<DecisionTriple, DecisionError> {
    let mut counts = [0u64; 3];
    for (d, s, nu) in draws {
        let idx = match region_probs(d, s, nu, halfwidth).argmax() {
            Region::Left => 0,
            Region::Rope => 1,
            Region::Right => 2,
        };
        counts[idx] += 1;
    }
    if counts.iter().sum::<u64>() == 0 {
        return Err(DecisionError::EmptyChains);
    }
    Ok(DecisionTriple::from_counts(counts[0], counts[1], counts[2]))
}

/// Region masses of the correlated t-test posterior: the single data set
/// analogue of a tally, reported as probabilities rather than votes.
pub fn ttest_triple(posterior: &TTestPosterior, rope: RopeInterval) -> DecisionTriple {
    DecisionTriple::from_probs(probs_of(&posterior.distribution(), rope.halfwidth()))
}

/// Barycentric to Cartesian with left at (0, 0), rope at (1/2, sqrt(3)/2)
/// and right at (1, 0).
pub fn simplex_coordinates(p: RegionProbs) -> (f64, f64) {
    (0.5 * p.rope + p.right, 0.75f64.sqrt() * p.rope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_posterior_has_equal_tails() {
        let p = region_probs(0.0, 0.02, 4.0, 0.01);
        assert!((p.left - p.right).abs() < 1e-15);
        assert!((p.left + p.rope + p.right - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rope_has_no_mass() {
        let p = region_probs(0.003, 0.01, 3.0, 0.0);
        assert_eq!(p.rope, 0.0);
        assert!((p.left + p.right - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_regions() {
        assert_eq!(region_probs(0.005, 0.0, 5.0, 0.01).argmax(), Region::Rope);
        assert_eq!(region_probs(0.02, 0.0, 5.0, 0.01).right, 1.0);
        assert_eq!(region_probs(-0.02, 0.0, 5.0, 0.01).left, 1.0);
        assert_eq!(region_probs(0.01, 0.0, 5.0, 0.01).rope, 1.0);
    }

    #[test]
    fn ties_prefer_rope_then_left() {
        let even = RegionProbs { left: 0.4, rope: 0.4, right: 0.2 };
        assert_eq!(even.argmax(), Region::Rope);
        let lr = RegionProbs { left: 0.5, rope: 0.0, right: 0.5 };
        assert_eq!(lr.argmax(), Region::Left);
    }

    #[test]
    fn unanimous_rope_votes() {
        let draws = vec![(0.0, 0.001, 5.0); 100];
        let t = tally_draws(draws, 0.01).unwrap();
        assert_eq!((t.n_left, t.n_rope, t.n_right), (0, 100, 0));
        assert_eq!((t.p_left, t.p_rope, t.p_right), (0.0, 1.0, 0.0));
        assert_eq!(t.verdict, Region::Rope);
    }

    #[test]
    fn empty_draws_are_an_error() {
        assert_eq!(tally_draws(Vec::new(), 0.01), Err(DecisionError::EmptyChains));
    }

    #[test]
    fn simplex_vertices_and_centroid() {
        let v = |l, r, rt| simplex_coordinates(RegionProbs { left: l, rope: r, right: rt });
        assert_eq!(v(1.0, 0.0, 0.0), (0.0, 0.0));
        assert_eq!(v(0.0, 0.0, 1.0), (1.0, 0.0));
        let (x, y) = v(0.0, 1.0, 0.0);
        assert!((x - 0.5).abs() < 1e-15 && (y - 3f64.sqrt() / 2.0).abs() < 1e-15);
        let third = 1.0 / 3.0;
        let (x, y) = v(third, third, third);
        assert!((x - 0.5).abs() < 1e-15 && (y - 3f64.sqrt() / 6.0).abs() < 1e-15);
    }

    #[test]
    fn ci95_of_uniform_grid() {
        // 0.00, 0.01, ..., 1.00: quantiles 0.025 and 0.975 interpolate exactly
        let x: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let s = DifferenceSeries::new("d", x, 0.0, 1, 101).unwrap();
        assert!((ci95_halfwidth(&[s]).unwrap() - 0.475).abs() < 1e-12);
    }

    #[test]
    fn rope_validation() {
        assert!(RopeInterval::new(-0.1).is_err());
        assert!(RopeInterval::new(f64::NAN).is_err());
        assert!(RopeInterval::new(0.0).is_ok());
    }
}
