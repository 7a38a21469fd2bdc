//! Closed-form BGe local score: the log marginal likelihood of one node
//! given a parent set under the Gaussian / normal-Wishart model. The
//! score is decomposable and score-equivalent, and serves as the
//! linear-Gaussian baseline throughout.
//!
//! With `Fa = Pa + {node}`, `p = |Pa|`, `a = alpha_w - n + p` and
//! `R = T + S_N + (N alpha_mu / (N + alpha_mu)) (nu - xbar)(nu - xbar)'`:
//!
//! ```text
//! log S = -(N/2) ln pi + (1/2) ln(alpha_mu / (alpha_mu + N))
//!         + lnGamma((N + a + 1)/2) - lnGamma((a + 1)/2)
//!         + ((a + 1)/2) ln|T_Fa| - (a/2) ln|T_Pa|
//!         - ((a + 1 + N)/2) ln|R_Fa| + ((a + N)/2) ln|R_Pa|
//! ```

use crate::error::{Error, Result};
use crate::synth::Dataset;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BgeParams {
    pub alpha_mu: f64,
    /// Wishart degrees of freedom; defaults to n + alpha_mu + 1.
    pub alpha_w: f64,
    /// Scale multiplier of the prior parametric matrix T = t I;
    /// defaults to alpha_mu (alpha_w - n - 1) / (alpha_mu + 1).
    pub t_scale: f64,
    /// Prior mean (a constant vector); defaults to zero.
    pub nu: f64,
}

impl BgeParams {
    /// Standard defaults for an n-variable dataset.
    pub fn for_nodes(n: usize) -> BgeParams {
        let alpha_mu = 1.0;
        let alpha_w = n as f64 + alpha_mu + 1.0;
        BgeParams {
            alpha_mu,
            alpha_w,
            t_scale: alpha_mu * (alpha_w - n as f64 - 1.0) / (alpha_mu + 1.0),
            nu: 0.0,
        }
    }

    pub fn with_t_scale(n: usize, t_scale: f64) -> BgeParams {
        BgeParams { t_scale, ..BgeParams::for_nodes(n) }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.alpha_mu <= 0.0 {
            return Err(Error::InvalidArgument("alpha_mu must be > 0".into()));
        }
        if self.alpha_w <= n as f64 + 1.0 {
            return Err(Error::InvalidArgument(format!(
                "alpha_w must exceed n + 1 = {}",
                n + 1
            )));
        }
        if self.t_scale <= 0.0 {
            return Err(Error::InvalidArgument("t_scale must be > 0".into()));
        }
        Ok(())
    }
}

/// Per-dataset sufficient statistics shared by every local score.
#[derive(Debug, Clone)]
pub struct BgeSuffStats {
    n_obs: usize,
    n_nodes: usize,
    params: BgeParams,
    /// R = T + S_N + correction.
    r: DMatrix<f64>,
}

impl BgeSuffStats {
    pub fn new(dataset: &Dataset, params: BgeParams) -> Result<BgeSuffStats> {
        let n_obs = dataset.n_obs();
        let n_nodes = dataset.n_nodes();
        if n_obs < 1 {
            return Err(Error::InvalidArgument("dataset must have N >= 1 rows".into()));
        }
        params.validate(n_nodes)?;
        let nf = n_obs as f64;
        let mut xbar = DVector::zeros(n_nodes);
        for j in 0..n_nodes {
            xbar[j] = dataset.values.column(j).sum() / nf;
        }
        let mut scatter = DMatrix::zeros(n_nodes, n_nodes);
        for i in 0..n_obs {
            let row = dataset.values.row(i).transpose() - &xbar;
            scatter += &row * row.transpose();
        }
        let nu = DVector::from_element(n_nodes, params.nu);
        let diff = &nu - &xbar;
        let coef = nf * params.alpha_mu / (nf + params.alpha_mu);
        let mut r = scatter + coef * (&diff * diff.transpose());
        for i in 0..n_nodes {
            r[(i, i)] += params.t_scale;
        }
        Ok(BgeSuffStats { n_obs, n_nodes, params, r })
    }

    fn log_det_r(&self, idx: &[usize]) -> Result<f64> {
        if idx.is_empty() {
            return Ok(0.0);
        }
        let k = idx.len();
        let sub = DMatrix::from_fn(k, k, |a, b| self.r[(idx[a], idx[b])]);
        let chol = nalgebra::Cholesky::new(sub).ok_or_else(|| {
            Error::Factorization(format!("singular posterior scatter submatrix for {idx:?}"))
        })?;
        Ok(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
    }

    /// Log BGe local score of `node` given `parents`.
    pub fn local_score(&self, node: usize, parents: &[usize]) -> Result<f64> {
        if parents.contains(&node) {
            return Err(Error::InvalidArgument(format!(
                "parent set of node {node} must exclude the node"
            )));
        }
        let nf = self.n_obs as f64;
        let n = self.n_nodes as f64;
        let p = parents.len() as f64;
        let a = self.params.alpha_w - n + p;
        let mut fa: Vec<usize> = parents.to_vec();
        fa.push(node);
        fa.sort_unstable();

        let log_det_r_fa = self
            .log_det_r(&fa)
            .map_err(|e| e.with_score_context(node, parents))?;
        let log_det_r_pa = self
            .log_det_r(parents)
            .map_err(|e| e.with_score_context(node, parents))?;
        let ln_t = self.params.t_scale.ln();
        let log_det_t_fa = (p + 1.0) * ln_t;
        let log_det_t_pa = p * ln_t;

        Ok(-0.5 * nf * std::f64::consts::PI.ln()
            + 0.5 * (self.params.alpha_mu / (self.params.alpha_mu + nf)).ln()
            + ln_gamma((nf + a + 1.0) / 2.0)
            - ln_gamma((a + 1.0) / 2.0)
            + 0.5 * (a + 1.0) * log_det_t_fa
            - 0.5 * a * log_det_t_pa
            - 0.5 * (a + 1.0 + nf) * log_det_r_fa
            + 0.5 * (a + nf) * log_det_r_pa)
    }
}

/// One-shot local score; build [`BgeSuffStats`] once when scoring many pairs.
pub fn bge_local_score(
    node: usize,
    parents: &[usize],
    dataset: &Dataset,
    params: BgeParams,
) -> Result<f64> {
    BgeSuffStats::new(dataset, params)?.local_score(node, parents)
}
