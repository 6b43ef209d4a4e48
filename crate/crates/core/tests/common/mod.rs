//! Independent reference computations for the numerical kernels.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 60)
}

/// Gamma function at positive integers and half-integers, from factorials.
pub fn gamma_half_integer(x: f64) -> f64 {
    let twice = (2.0 * x).round() as u64;
    assert!(twice >= 1 && (2.0 * x - twice as f64).abs() < 1e-12);
    if twice.is_multiple_of(2) {
        (1..twice / 2).map(|i| i as f64).product()
    } else {
        // Gamma(n + 1/2) = (2n)! / (4^n n!) sqrt(pi)
        let n = (twice - 1) / 2;
        let mut g = std::f64::consts::PI.sqrt();
        for i in 0..n {
            g *= i as f64 + 0.5;
        }
        g
    }
}

/// Standard t density for integer `nu`, built without the crate's special functions.
pub fn t_pdf(z: f64, nu: f64) -> f64 {
    let c = gamma_half_integer(0.5 * (nu + 1.0)) / (gamma_half_integer(0.5 * nu) * (nu * std::f64::consts::PI).sqrt());
    c * (1.0 + z * z / nu).powf(-0.5 * (nu + 1.0))
}

/// Standard t CDF by quadrature from the centre outwards.
pub fn t_cdf(x: f64, nu: f64) -> f64 {
    let pdf = |z: f64| t_pdf(z, nu);
    let half = integrate(&pdf, 0.0, x.abs(), 1e-14);
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// Multivariate normal log density through a dense Cholesky factorisation.
pub fn dense_mvn_loglik(x: &[f64], mean: f64, variance: f64, rho: f64) -> f64 {
    let n = x.len();
    let cov = DMatrix::from_fn(n, n, |i, j| if i == j { variance } else { rho * variance });
    let chol = cov.cholesky().expect("positive definite");
    let r = DVector::from_iterator(n, x.iter().map(|v| v - mean));
    let solved = chol.solve(&r);
    let quad = r.dot(&solved);
    let ln_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + ln_det + quad)
}
