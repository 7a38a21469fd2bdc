//! Hyperparameter priors: inverse-gamma on lengthscales, noise scale and
//! interaction weights (suppressing values near zero), standard normal on
//! the noise mean.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

const LN_2PI: f64 = 1.8378770664093453;

/// Inverse-gamma(shape, scale) with log density
/// `a ln b - lnGamma(a) - (a+1) ln x - b/x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvGamma {
    pub shape: f64,
    pub scale: f64,
}

impl InvGamma {
    pub fn new(shape: f64, scale: f64) -> InvGamma {
        assert!(shape > 0.0 && scale > 0.0);
        InvGamma { shape, scale }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.shape * self.scale.ln() - ln_gamma(self.shape) - (self.shape + 1.0) * x.ln()
            - self.scale / x
    }

    /// d/dx log pdf.
    pub fn dlog_pdf(&self, x: f64) -> f64 {
        -(self.shape + 1.0) / x + self.scale / (x * x)
    }

    /// Mean b/(a-1), defined for a > 1.
    pub fn mean(&self) -> f64 {
        assert!(self.shape > 1.0);
        self.scale / (self.shape - 1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = Gamma::new(self.shape, 1.0).expect("positive shape");
        self.scale / g.sample(rng)
    }
}

/// Independent priors for one node/parent-set hyperparameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub lengthscale: InvGamma,
    /// Standard deviation of the zero-mean normal prior on mu.
    pub mu_sd: f64,
    pub sigma: InvGamma,
    pub tau: InvGamma,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            lengthscale: InvGamma::new(2.0, 2.0),
            mu_sd: 1.0,
            sigma: InvGamma::new(1.0, 1.0),
            tau: InvGamma::new(1.0, 1.0),
        }
    }
}

impl PriorSpec {
    pub fn log_pdf_mu(&self, mu: f64) -> f64 {
        -0.5 * LN_2PI - self.mu_sd.ln() - 0.5 * (mu / self.mu_sd).powi(2)
    }

    pub fn dlog_pdf_mu(&self, mu: f64) -> f64 {
        -mu / (self.mu_sd * self.mu_sd)
    }

    pub fn sample_mu<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Normal::new(0.0, self.mu_sd).expect("positive sd").sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn invgamma_log_pdf_known_value() {
        // IG(2,2) at x=1: ln(4 e^{-2}) = 2 ln 2 - 2
        let ig = InvGamma::new(2.0, 2.0);
        assert_abs_diff_eq!(ig.log_pdf(1.0), 4.0f64.ln() - 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ig.log_pdf(1.0), -0.6137056388801094, epsilon = 1e-12);
    }

    #[test]
    fn invgamma_grad_matches_fd() {
        let ig = InvGamma::new(1.0, 1.0);
        for x in [0.3, 1.0, 2.5] {
            let h = 1e-6;
            let fd = (ig.log_pdf(x + h) - ig.log_pdf(x - h)) / (2.0 * h);
            assert_abs_diff_eq!(ig.dlog_pdf(x), fd, epsilon = 1e-5);
        }
    }

    #[test]
    fn invgamma_sampling_mean() {
        // IG(3,4) has mean 2 and finite variance (= 4 for a=3,b=4)
        let ig = InvGamma::new(3.0, 4.0);
        assert_abs_diff_eq!(ig.mean(), 2.0, epsilon = 1e-15);
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| ig.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.02, "sample mean {mean}");
    }

    #[test]
    fn mu_prior_is_standard_normal() {
        let p = PriorSpec::default();
        assert_abs_diff_eq!(p.log_pdf_mu(0.0), -0.5 * LN_2PI, epsilon = 1e-12);
        assert_abs_diff_eq!(p.dlog_pdf_mu(1.5), -1.5, epsilon = 1e-12);
    }
}
