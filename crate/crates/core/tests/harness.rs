use baycv_core::harness::{assemble_differences, make_splits, RhoPolicy, ScoreKey, ScoreMatrix, SplitPlan};
use baycv_core::stats::rng_fork;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_item_in_one_fold_and_sizes_balanced(n in 2usize..400, k in 2usize..12, m in 1usize..4, seed: u64) {
        prop_assume!(n >= k);
        let plan = make_splits(n, k, m, seed).unwrap();
        for r in 0..m {
            let sizes = plan.fold_sizes(r);
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
            for f in 0..k {
                let roles = plan.fold_roles(r, f).unwrap();
                prop_assert_eq!(roles.train.len() + roles.validation.len() + roles.eval.len(), n);
            }
        }
        prop_assert_eq!(SplitPlan::parse(&plan.to_text(None)).unwrap(), plan);
    }
}

#[test]
fn split_plan_is_pinned_for_a_fixed_seed() {
    let plan = make_splits(12, 3, 2, 42).unwrap();
    let again = make_splits(12, 3, 2, 42).unwrap();
    assert_eq!(plan.to_text(None), again.to_text(None));
    assert_ne!(plan.assignment(0), plan.assignment(1));
    assert_ne!(make_splits(12, 3, 2, 43).unwrap(), plan);
}

#[test]
fn swapping_systems_negates_differences() {
    let mut rng = rng_fork(5, 0);
    let mut scores = ScoreMatrix::new();
    for d in ["x", "y"] {
        for sys in ["A", "B"] {
            for r in 0..3 {
                for f in 0..4 {
                    let key = ScoreKey::new(d, sys, "token", r, f);
                    scores.insert(key, Some(rng.random_range(0.8..0.99))).unwrap();
                }
            }
        }
    }
    let ab = assemble_differences(&scores, "A", "B", "token", RhoPolicy::default()).unwrap();
    let ba = assemble_differences(&scores, "B", "A", "token", RhoPolicy::default()).unwrap();
    for (s, t) in ab.iter().zip(&ba) {
        assert_eq!(s.x, t.negated().x);
        assert_eq!(s.rho, 0.25);
    }
}

/// Fold means of a per-item score, taken from two independently shuffled
/// repetitions, correlate at roughly the evaluation fraction `1/k`.
#[test]
fn fold_overlap_correlation_is_near_test_fraction() {
    let (n, k, trials) = (200, 10, 4000);
    let mut rng = rng_fork(77, 0);
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in 0..trials {
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let plan = make_splits(n, k, 2, t as u64).unwrap();
        let fold_mean = |rep: usize| {
            let roles = plan.fold_roles(rep, 0).unwrap();
            roles.eval.iter().map(|&i| y[i]).sum::<f64>() / roles.eval.len() as f64
        };
        let (a, b) = (fold_mean(0), fold_mean(1));
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let nt = trials as f64;
    let cov = sxy / nt - sx / nt * sy / nt;
    let corr = cov / ((sxx / nt - (sx / nt).powi(2)) * (syy / nt - (sy / nt).powi(2))).sqrt();
    let target = 1.0 / k as f64;
    assert!((corr - target).abs() < (corr - 0.0).abs(), "corr = {corr}");
    assert!((corr - target).abs() < (corr - 2.0 * target).abs(), "corr = {corr}");
}
