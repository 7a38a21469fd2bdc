//! Monte Carlo estimation of the exact local score: an adaptive
//! random-walk Metropolis sampler for the hyperparameter posterior and
//! the iterative optimal-bridge estimator of the marginal likelihood.
//!
//! Everything operates in the unconstrained hyperparameter coordinates of
//! [`crate::gp::GpModel`]; the Gaussian proposal is fitted there, so its
//! support matches the posterior's.

use crate::density::LogDensity;
use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::util::{log_add_exp, log_sum_exp};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Adaptive random-walk Metropolis over the hyperparameter posterior.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RwmConfig {
    /// Draws returned after burn-in (>= 100).
    pub n_draws: usize,
    /// Fraction of the total chain discarded as adaptive burn-in.
    pub burn_in_frac: f64,
    pub target_accept: f64,
}

impl Default for RwmConfig {
    fn default() -> Self {
        RwmConfig { n_draws: 1000, burn_in_frac: 0.5, target_accept: 0.3 }
    }
}

/// Posterior draws in unconstrained coordinates with chain diagnostics.
#[derive(Debug, Clone)]
pub struct HyperPosteriorSample {
    pub draws: Vec<Vec<f64>>,
    pub log_joint: Vec<f64>,
    /// Acceptance rate over the post-adaptation phase.
    pub acceptance_rate: f64,
    /// Split-chain potential scale reduction per coordinate.
    pub rhat: Vec<f64>,
}

/// Split-chain potential scale reduction factor per coordinate.
fn split_rhat(draws: &[Vec<f64>]) -> Vec<f64> {
    let n = draws.len() / 2;
    let d = draws[0].len();
    let mut out = Vec::with_capacity(d);
    for c in 0..d {
        let first: Vec<f64> = draws[..n].iter().map(|x| x[c]).collect();
        let second: Vec<f64> = draws[n..2 * n].iter().map(|x| x[c]).collect();
        let (m1, s1) = crate::util::mean_sd(&first);
        let (m2, s2) = crate::util::mean_sd(&second);
        let w = 0.5 * (s1 * s1 + s2 * s2);
        let mean = 0.5 * (m1 + m2);
        let b = n as f64 * ((m1 - mean).powi(2) + (m2 - mean).powi(2)); // m-1 = 1
        if w <= 0.0 {
            out.push(1.0);
            continue;
        }
        let var_plus = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
        out.push((var_plus / w).sqrt());
    }
    out
}

/// Sample the posterior of a log density with diagonal-covariance adaptive
/// random-walk Metropolis targeting ~0.3 acceptance. The adaptive first
/// half of the chain is discarded.
pub fn sample_posterior<R: Rng + ?Sized>(
    target: &dyn LogDensity,
    init: &[f64],
    cfg: &RwmConfig,
    rng: &mut R,
) -> Result<HyperPosteriorSample> {
    if cfg.n_draws < 100 {
        return Err(Error::InvalidArgument("n_draws must be >= 100".into()));
    }
    let d = target.dim();
    if init.len() != d {
        return Err(Error::DimensionMismatch("init length vs target dim".into()));
    }
    let total = (cfg.n_draws as f64 / (1.0 - cfg.burn_in_frac)).ceil() as usize;
    let burn = total - cfg.n_draws;

    let mut x = init.to_vec();
    let mut fx = target.log_density(&x);
    if !fx.is_finite() {
        return Err(Error::McmcDivergence("non-finite log density at initial point".into()));
    }

    // Welford accumulators for the per-coordinate chain variance.
    let mut count = 0usize;
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    let mut global_scale = 2.38 / (d as f64).sqrt();
    let mut batch_accepts = 0usize;
    let mut batch_size = 0usize;
    let mut batch_idx = 0usize;

    let mut draws = Vec::with_capacity(cfg.n_draws);
    let mut ljs = Vec::with_capacity(cfg.n_draws);
    let mut post_accepts = 0usize;

    let mut y = vec![0.0; d];
    for it in 0..total {
        let adapting = it < burn;
        for i in 0..d {
            let var = if count > 1 { m2[i] / (count - 1) as f64 } else { 0.0 };
            let step = global_scale * (var.sqrt() + 0.1);
            let z: f64 = StandardNormal.sample(rng);
            y[i] = x[i] + step * z;
        }
        let fy = target.log_density(&y);
        let accept = fy.is_finite() && rng.random::<f64>().ln() < fy - fx;
        if accept {
            x.copy_from_slice(&y);
            fx = fy;
        }

        if adapting {
            batch_accepts += accept as usize;
            batch_size += 1;
            if batch_size == 25 {
                batch_idx += 1;
                let rate = batch_accepts as f64 / batch_size as f64;
                let delta = (1.0 / (batch_idx as f64).sqrt()).min(0.1);
                global_scale *= (delta * (rate - cfg.target_accept) / cfg.target_accept).exp();
                batch_accepts = 0;
                batch_size = 0;
            }
            count += 1;
            for i in 0..d {
                let delta = x[i] - mean[i];
                mean[i] += delta / count as f64;
                m2[i] += delta * (x[i] - mean[i]);
            }
        } else {
            post_accepts += accept as usize;
            draws.push(x.clone());
            ljs.push(fx);
        }
    }

    let acceptance_rate = post_accepts as f64 / cfg.n_draws as f64;
    if acceptance_rate < 0.05 {
        return Err(Error::McmcDivergence(format!(
            "acceptance rate {acceptance_rate:.3} below 0.05 after adaptation"
        )));
    }
    let rhat = split_rhat(&draws);
    Ok(HyperPosteriorSample { draws, log_joint: ljs, acceptance_rate, rhat })
}

/// GP-specific entry point: sample p(Theta | x, Pa_X) for one model.
/// The chain starts from the best of a handful of prior draws.
pub fn sample_hyper_posterior<R: Rng + ?Sized>(
    model: &GpModel,
    n_draws: usize,
    rng: &mut R,
) -> Result<HyperPosteriorSample> {
    let cfg = RwmConfig { n_draws, ..Default::default() };
    let mut init = model.reference_start();
    let mut best = model.log_density(&init);
    for _ in 0..20 {
        let cand = model.sample_prior_unconstrained(rng);
        let v = model.log_density(&cand);
        if v > best {
            best = v;
            init = cand;
        }
    }
    sample_posterior(model, &init, &cfg, rng)
}

// ---------------------------------------------------------------------------
// Gaussian proposal.
// ---------------------------------------------------------------------------

/// Moment-matched Gaussian in unconstrained coordinates.
#[derive(Debug, Clone)]
pub struct GaussianProposal {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl GaussianProposal {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<GaussianProposal> {
        let sym = (&cov + cov.transpose()) * 0.5;
        let chol = match Cholesky::new(sym.clone()) {
            Some(c) => c,
            None => {
                // floor eigenvalues and refactor
                let mut eig = sym.clone().symmetric_eigen();
                for l in eig.eigenvalues.iter_mut() {
                    *l = l.max(1e-10);
                }
                let rebuilt = &eig.eigenvectors
                    * DMatrix::from_diagonal(&eig.eigenvalues)
                    * eig.eigenvectors.transpose();
                let rebuilt = (&rebuilt + rebuilt.transpose()) * 0.5;
                Cholesky::new(rebuilt.clone())
                    .ok_or_else(|| Error::Factorization("proposal covariance not PD after flooring".into()))?
            }
        };
        Ok(GaussianProposal { mean, cov: sym, chol })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.dim() as f64;
        let diff = DVector::from_column_slice(x) - &self.mean;
        let half_log_det: f64 = self.chol.l().diagonal().iter().map(|v| v.ln()).sum();
        let sol = self.chol.solve(&diff);
        -0.5 * d * (2.0 * std::f64::consts::PI).ln() - half_log_det - 0.5 * diff.dot(&sol)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        (&self.mean + self.chol.l() * z).as_slice().to_vec()
    }
}

/// Fit a moment-matched Gaussian to draws. Degenerate coordinates (zero
/// sample variance) get their diagonal inflated by 1e-6; eigenvalues are
/// floored at 1e-10 inside [`GaussianProposal::new`].
pub fn fit_gaussian_proposal(samples: &[Vec<f64>]) -> Result<GaussianProposal> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples to fit".into()));
    }
    let d = samples[0].len();
    if samples.len() < d + 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least d+2 = {} draws to fit a proposal, got {}",
            d + 2,
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mut mean = DVector::zeros(d);
    for s in samples {
        mean += DVector::from_column_slice(s);
    }
    mean /= n;
    let mut cov = DMatrix::zeros(d, d);
    for s in samples {
        let diff = DVector::from_column_slice(s) - &mean;
        cov += &diff * diff.transpose();
    }
    cov /= n - 1.0;
    for i in 0..d {
        if cov[(i, i)] < 1e-12 {
            cov[(i, i)] += 1e-6;
        }
    }
    GaussianProposal::new(mean, cov)
}

// ---------------------------------------------------------------------------
// Bridge sampling.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BridgeConfig {
    /// Proposal draw count.
    pub n1: usize,
    /// Posterior draw count entering the estimator.
    pub n2: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        BridgeConfig { n1: 300, n2: 300, max_iterations: 1000, tolerance: 1e-10 }
    }
}

impl BridgeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n1 < 2 || self.n2 < 2 {
            return Err(Error::InvalidArgument("bridge requires n1, n2 >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BridgeResult {
    /// log S(X, Pa_X), the log marginal likelihood estimate.
    pub log_ml: f64,
    pub iterations_used: usize,
    pub relative_change_at_stop: f64,
    pub converged: bool,
    /// Proposal draws discarded for non-finite log joint values.
    pub dropped_proposal_draws: usize,
}

/// One update of the iterative optimal-bridge ratio in log space.
fn bridge_update(l1: &[f64], l2: &[f64], log_r: f64) -> f64 {
    let n1 = l1.len() as f64;
    let n2 = l2.len() as f64;
    let log_s1 = (n1 / (n1 + n2)).ln();
    let log_s2 = (n2 / (n1 + n2)).ln();
    let num_terms: Vec<f64> = l1
        .iter()
        .map(|&l| l - log_add_exp(log_s1 + l, log_s2 + log_r))
        .collect();
    let den_terms: Vec<f64> = l2
        .iter()
        .map(|&l| -log_add_exp(log_s1 + l, log_s2 + log_r))
        .collect();
    (log_sum_exp(&num_terms) - n1.ln()) - (log_sum_exp(&den_terms) - n2.ln())
}

/// Core bridge estimator with an explicit proposal: `l1`/`l2` are
/// log-joint minus log-proposal at proposal and posterior draws.
pub fn bridge_iterate(l1: &[f64], l2: &[f64], cfg: &BridgeConfig) -> BridgeResult {
    // importance-sampling warm start (bridge function h proportional to 1/g)
    let mut log_r = log_sum_exp(l1) - (l1.len() as f64).ln();
    let mut iterations_used = 0;
    let mut rel = f64::INFINITY;
    for _ in 0..cfg.max_iterations {
        iterations_used += 1;
        let next = bridge_update(l1, l2, log_r);
        rel = (next - log_r).exp_m1().abs();
        log_r = next;
        if rel <= cfg.tolerance {
            break;
        }
    }
    BridgeResult {
        log_ml: log_r,
        iterations_used,
        relative_change_at_stop: rel,
        converged: rel <= cfg.tolerance,
        dropped_proposal_draws: 0,
    }
}

/// Bridge estimate given a fitted proposal and the posterior half used
/// for evaluation.
pub fn bridge_log_ml_with_proposal<F, R>(
    log_joint: F,
    proposal: &GaussianProposal,
    posterior_half: &[Vec<f64>],
    cfg: &BridgeConfig,
    rng: &mut R,
) -> Result<BridgeResult>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    if posterior_half.is_empty() {
        return Err(Error::InvalidArgument("no posterior draws".into()));
    }
    let mut l1 = Vec::with_capacity(cfg.n1);
    let mut dropped = 0usize;
    for _ in 0..cfg.n1 {
        let theta = proposal.sample(rng);
        let lj = log_joint(&theta);
        if lj.is_finite() {
            l1.push(lj - proposal.log_density(&theta));
        } else {
            dropped += 1;
        }
    }
    if dropped * 10 > cfg.n1 {
        log::warn!(
            "bridge sampler dropped {dropped}/{} proposal draws with non-finite log joint",
            cfg.n1
        );
    }
    if l1.len() < 2 {
        return Err(Error::InvalidArgument(
            "fewer than 2 usable proposal draws for the bridge estimator".into(),
        ));
    }
    let take = posterior_half.len().min(cfg.n2);
    let l2: Vec<f64> = posterior_half[..take]
        .iter()
        .map(|t| log_joint(t) - proposal.log_density(t))
        .collect();
    let mut res = bridge_iterate(&l1, &l2, cfg);
    res.dropped_proposal_draws = dropped;
    Ok(res)
}

/// Split posterior draws into two halves in a permutation-invariant way:
/// sort canonically (lexicographic by coordinates) and interleave by rank.
/// Even ranks fit the proposal, odd ranks enter the estimator, so neither
/// half is a biased (e.g. low-tail) subset.
pub fn split_halves(samples: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut sorted: Vec<&Vec<f64>> = samples.iter().collect();
    sorted.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b.iter()) {
            match x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        std::cmp::Ordering::Equal
    });
    let fit = sorted.iter().step_by(2).map(|v| (*v).clone()).collect();
    let eval = sorted.iter().skip(1).step_by(2).map(|v| (*v).clone()).collect();
    (fit, eval)
}

/// Full bridge estimate from posterior draws: fit the Gaussian proposal on
/// one half, evaluate the estimator on the other.
pub fn bridge_log_ml<F, R>(
    log_joint: F,
    posterior_samples: &[Vec<f64>],
    cfg: &BridgeConfig,
    rng: &mut R,
) -> Result<BridgeResult>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    if posterior_samples.is_empty() {
        return Err(Error::InvalidArgument("posterior_samples must be nonempty".into()));
    }
    let (fit_half, eval_half) = split_halves(posterior_samples);
    let proposal = fit_gaussian_proposal(&fit_half)?;
    bridge_log_ml_with_proposal(log_joint, &proposal, &eval_half, cfg, rng)
}

/// Exact (bridge) local score for one GP model, deterministic in `seed`:
/// sample 2 n2 hyperparameter posterior draws, then bridge.
pub fn gp_bridge_log_score(model: &GpModel, cfg: &BridgeConfig, seed: u64) -> Result<BridgeResult> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let n_draws = (2 * cfg.n2).max(200);
    let post = sample_hyper_posterior(model, n_draws, &mut rng)?;
    bridge_log_ml(|eta| model.log_density(eta), &post.draws, cfg, &mut rng)
}
