//! Bridge-sampling evidence estimates against a closed form: the
//! conjugate normal-mean model, where the marginal likelihood is known
//! analytically.
//!
//! ```bash
//! cargo run --example bridge_evidence
//! ```

use gpnet::density::LogDensity;
use gpnet::evidence::{bridge_log_ml, BridgeConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

struct NormalMeanModel {
    y: Vec<f64>,
    noise_sd: f64,
    prior_sd: f64,
}

impl LogDensity for NormalMeanModel {
    fn dim(&self) -> usize {
        1
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        let theta = x[0];
        let ln_norm = -0.5 * (2.0 * std::f64::consts::PI).ln();
        let lik: f64 = self
            .y
            .iter()
            .map(|v| ln_norm - self.noise_sd.ln() - 0.5 * ((v - theta) / self.noise_sd).powi(2))
            .sum();
        lik + ln_norm - self.prior_sd.ln() - 0.5 * (theta / self.prior_sd).powi(2)
    }
}

impl NormalMeanModel {
    /// y ~ N(theta 1, s^2 I + v^2 11'): closed-form log evidence.
    fn analytic_log_evidence(&self) -> f64 {
        let n = self.y.len() as f64;
        let s2 = self.noise_sd * self.noise_sd;
        let v2 = self.prior_sd * self.prior_sd;
        let sum: f64 = self.y.iter().sum();
        let ss: f64 = self.y.iter().map(|v| v * v).sum();
        let log_det = n * s2.ln() + (1.0 + n * v2 / s2).ln();
        let quad = ss / s2 - (v2 / s2) * sum * sum / (s2 + n * v2);
        -0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det - 0.5 * quad
    }

    fn posterior(&self) -> (f64, f64) {
        let n = self.y.len() as f64;
        let s2 = self.noise_sd * self.noise_sd;
        let var = 1.0 / (n / s2 + 1.0 / (self.prior_sd * self.prior_sd));
        (var * self.y.iter().sum::<f64>() / s2, var.sqrt())
    }
}

fn main() -> gpnet::Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let y: Vec<f64> = (0..25)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            0.7 + 0.9 * z
        })
        .collect();
    let model = NormalMeanModel { y, noise_sd: 0.9, prior_sd: 1.5 };
    let analytic = model.analytic_log_evidence();
    println!("analytic log evidence: {analytic:.6}");

    let (pm, psd) = model.posterior();
    for n_particles in [50usize, 300, 1000] {
        let cfg = BridgeConfig { n1: n_particles, n2: n_particles, ..Default::default() };
        let mut errs = Vec::new();
        for seed in 0..10u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(100 + seed);
            let draws: Vec<Vec<f64>> = (0..2 * n_particles)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    vec![pm + psd * z]
                })
                .collect();
            let res = bridge_log_ml(|t| model.log_density(t), &draws, &cfg, &mut rng)?;
            errs.push((res.log_ml - analytic).abs());
        }
        let mean_err = errs.iter().sum::<f64>() / errs.len() as f64;
        println!(
            "N1 = N2 = {n_particles:>4}: mean |log error| over 10 seeds = {mean_err:.5} nats"
        );
    }
    Ok(())
}
