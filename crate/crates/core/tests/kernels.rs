mod common;

use baycv_core::stats::special::{inc_beta, ln_gamma};
use baycv_core::stats::{cs_mvn_loglik, rng_fork, CompoundSymmetryCov, StudentT};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn compound_symmetry_matches_dense_cholesky() {
    let mut rng = rng_fork(2024, 0);
    for _ in 0..200 {
        let n = rng.random_range(1..=20usize);
        let variance = 10f64.powf(rng.random_range(-4.0..1.0));
        let rho_min = if n > 1 { -0.9 / (n as f64 - 1.0) } else { -0.9 };
        let rho = rng.random_range(rho_min..0.95);
        let mean = rng.random_range(-1.0..1.0);
        let x: Vec<f64> = (0..n).map(|_| mean + variance.sqrt() * rng.random_range(-3.0..3.0)).collect();
        let cov = CompoundSymmetryCov::new(n, variance, rho).unwrap();
        let fast = cs_mvn_loglik(&x, mean + 0.1, &cov).unwrap();
        let dense = common::dense_mvn_loglik(&x, mean + 0.1, variance, rho);
        assert!((fast - dense).abs() < 1e-10, "n={n} var={variance} rho={rho}: {fast} vs {dense}");
    }
}

#[test]
fn t_cdf_matches_quadrature() {
    for nu in [1.0, 2.0, 3.0, 5.0, 10.0, 30.0] {
        let t = StudentT::new(0.0, 1.0, nu).unwrap();
        for i in -40..=40 {
            let x = i as f64 * 0.125;
            let expected = common::t_cdf(x, nu);
            assert!((t.cdf(x) - expected).abs() < 1e-10, "nu={nu} x={x}");
            assert!((t.sf(x) - (1.0 - expected)).abs() < 1e-10, "nu={nu} x={x}");
        }
    }
}

#[test]
fn location_scale_cdf_matches_quadrature() {
    let t = StudentT::new(0.02, 0.01, 5.0).unwrap();
    for x in [-0.01, 0.0, 0.01, 0.03, 0.05] {
        let expected = common::t_cdf((x - 0.02) / 0.01, 5.0);
        assert!((t.cdf(x) - expected).abs() < 1e-10);
    }
}

#[test]
fn ln_gamma_matches_factorial_oracle() {
    for twice in 1..60u32 {
        let x = twice as f64 / 2.0;
        let expected = common::gamma_half_integer(x).ln();
        assert!((ln_gamma(x) - expected).abs() < 1e-10 * expected.abs().max(1.0), "x={x}");
    }
}

#[test]
fn ln_pdf_matches_oracle_density() {
    for nu in [1.0, 4.0, 9.0] {
        let t = StudentT::new(0.0, 1.0, nu).unwrap();
        for z in [-3.0, -0.5, 0.0, 1.25, 4.0] {
            assert!((t.pdf(z) - common::t_pdf(z, nu)).abs() < 1e-13);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn inc_beta_reflection(a in 0.1f64..50.0, b in 0.1f64..50.0, x in 0.0f64..=1.0) {
        let lhs = inc_beta(a, b, x, 1.0 - x);
        let rhs = 1.0 - inc_beta(b, a, 1.0 - x, x);
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&lhs));
    }

    #[test]
    fn t_cdf_is_monotone_and_symmetric(nu in 0.5f64..100.0, x in -50.0f64..50.0, dx in 1e-6f64..1.0) {
        let t = StudentT::new(0.0, 1.0, nu).unwrap();
        prop_assert!(t.cdf(x + dx) >= t.cdf(x));
        prop_assert!((t.cdf(-x) - t.sf(x)).abs() < 1e-15);
        prop_assert!((t.cdf(x) + t.sf(x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loglik_depends_on_data_only_through_mean_and_spread(
        x in proptest::collection::vec(-1.0f64..1.0, 2..15),
        rho in 0.0f64..0.9,
        shift in -0.5f64..0.5,
    ) {
        let n = x.len();
        let cov = CompoundSymmetryCov::new(n, 0.3, rho).unwrap();
        let mut rev = x.clone();
        rev.reverse();
        let a = cs_mvn_loglik(&x, 0.1, &cov).unwrap();
        let b = cs_mvn_loglik(&rev, 0.1, &cov).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
        // shifting data and mean together leaves the density unchanged
        let shifted: Vec<f64> = x.iter().map(|v| v + shift).collect();
        let c = cs_mvn_loglik(&shifted, 0.1 + shift, &cov).unwrap();
        prop_assert!((a - c).abs() < 1e-9);
    }
}
