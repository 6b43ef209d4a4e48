use rand::Rng;
use rand_distr::Distribution;

use super::special::{inc_beta, ln_gamma};
use super::StatsError;

/// Location-scale Student-t distribution.
///
/// A scale of exactly zero is accepted and treated as a point mass at the
/// location; every other method honours that limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentT {
    location: f64,
    scale: f64,
    dof: f64,
}

impl StudentT {
    pub fn new(location: f64, scale: f64, dof: f64) -> Result<Self, StatsError> {
        if !location.is_finite() {
            return Err(StatsError::InvalidParameter {
                name: "location",
                value: location,
            });
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(StatsError::InvalidParameter {
                name: "scale",
                value: scale,
            });
        }
        if !(dof > 0.0) || dof.is_nan() {
            return Err(StatsError::InvalidParameter {
                name: "dof",
                value: dof,
            });
        }
        Ok(Self {
            location,
            scale,
            dof,
        })
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn is_point_mass(&self) -> bool {
        self.scale == 0.0
    }

    /// Probability mass of the tail beyond `|z|` standard units on one side.
    fn one_sided_tail(&self, z: f64) -> f64 {
        if z.is_infinite() {
            return 0.0;
        }
        let nu = self.dof;
        let z2 = z * z;
        let denom = nu + z2;
        0.5 * inc_beta(0.5 * nu, 0.5, nu / denom, z2 / denom)
    }

    /// `P(T <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if self.is_point_mass() {
            return if x >= self.location { 1.0 } else { 0.0 };
        }
        let z = (x - self.location) / self.scale;
        let tail = self.one_sided_tail(z);
        if z <= 0.0 {
            tail
        } else {
            1.0 - tail
        }
    }

    /// `P(T > x)`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if self.is_point_mass() {
            return if x >= self.location { 0.0 } else { 1.0 };
        }
        let z = (x - self.location) / self.scale;
        let tail = self.one_sided_tail(z);
        if z >= 0.0 {
            tail
        } else {
            1.0 - tail
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if self.is_point_mass() {
            return if x == self.location {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
        }
        let nu = self.dof;
        let z = (x - self.location) / self.scale;
        ln_gamma(0.5 * (nu + 1.0))
            - ln_gamma(0.5 * nu)
            - 0.5 * (nu * std::f64::consts::PI).ln()
            - self.scale.ln()
            - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// One draw; deterministic given the generator state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_point_mass() {
            return self.location;
        }
        // dof was validated in `new`, so this cannot fail
        let standard = rand_distr::StudentT::new(self.dof).expect("positive dof");
        self.location + self.scale * standard.sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::rng_fork;

    #[test]
    fn rejects_invalid_parameters() {
        assert!(StudentT::new(0.0, -1.0, 3.0).is_err());
        assert!(StudentT::new(0.0, 1.0, 0.0).is_err());
        assert!(StudentT::new(f64::NAN, 1.0, 3.0).is_err());
        assert!(StudentT::new(0.0, f64::NAN, 3.0).is_err());
    }

    #[test]
    fn cdf_at_location_is_one_half() {
        for &nu in &[0.5, 1.0, 2.5, 30.0, 1e6] {
            let t = StudentT::new(0.37, 2.0, nu).unwrap();
            assert_eq!(t.cdf(0.37), 0.5);
        }
    }

    #[test]
    fn cauchy_quartile() {
        let t = StudentT::new(1.5, 0.25, 1.0).unwrap();
        assert!((t.cdf(1.75) - 0.75).abs() < 1e-14);
        assert!((t.cdf(1.25) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn two_dof_closed_form() {
        // F(z) = 1/2 + z / (2 sqrt(2 + z^2)) for nu = 2
        let t = StudentT::new(0.0, 1.0, 2.0).unwrap();
        for &z in &[-4.0f64, -1.0, -0.1, 0.3, 2.0, 9.0] {
            let expected = 0.5 + z / (2.0 * (2.0 + z * z).sqrt());
            assert!((t.cdf(z) - expected).abs() < 1e-14, "z = {z}");
        }
    }

    #[test]
    fn limits_and_sf_complement() {
        let t = StudentT::new(0.0, 1.0, 5.0).unwrap();
        assert_eq!(t.cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(t.cdf(f64::INFINITY), 1.0);
        for &x in &[-3.0, -0.2, 0.0, 0.4, 7.0] {
            assert!((t.cdf(x) + t.sf(x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn point_mass_behaviour() {
        let t = StudentT::new(0.2, 0.0, 3.0).unwrap();
        assert_eq!(t.cdf(0.19), 0.0);
        assert_eq!(t.cdf(0.2), 1.0);
        let mut rng = rng_fork(3, 0);
        assert_eq!(t.sample(&mut rng), 0.2);
    }

    #[test]
    fn sample_mean_within_five_standard_errors() {
        let t = StudentT::new(0.25, 2.0, 30.0).unwrap();
        let mut rng = rng_fork(11, 4);
        let n = 100_000;
        let mean = (0..n).map(|_| t.sample(&mut rng)).sum::<f64>() / n as f64;
        // var = scale^2 * nu / (nu - 2)
        let se = (4.0 * 30.0 / 28.0 / n as f64).sqrt();
        assert!((mean - 0.25).abs() < 5.0 * se, "mean {mean}");
    }

    #[test]
    fn identical_seeds_give_identical_draws() {
        let t = StudentT::new(0.0, 1.0, 4.0).unwrap();
        let mut a = rng_fork(99, 2);
        let mut b = rng_fork(99, 2);
        let xs: Vec<f64> = (0..100).map(|_| t.sample(&mut a)).collect();
        let ys: Vec<f64> = (0..100).map(|_| t.sample(&mut b)).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn tiny_scale_approaches_point_mass() {
        let t = StudentT::new(0.5, 1e-12, 3.0).unwrap();
        let mut rng = rng_fork(5, 5);
        for _ in 0..1000 {
            assert!((t.sample(&mut rng) - 0.5).abs() < 1e-6);
        }
    }
}
