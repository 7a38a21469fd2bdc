//! The log joint density of one node given a parent set, as a function of
//! the hyperparameters, in both constrained and unconstrained coordinates.
//!
//! Unconstrained layout: `[mu, ln sigma, ln theta_1 .. ln theta_p, (ln tau_1, ln tau_2)]`.
//! The transformed density includes the log-Jacobian of the exp map, so
//! exp of the transformed objective integrates to the same evidence as the
//! constrained integrand. Optimization, Laplace curvature and the bridge
//! proposal all live in these coordinates, which removes the sigma -> 0
//! boundary.

use super::kernel::{
    combine_grams, component_grams_from_sq, squared_distances, KernelConfig, KernelKind,
};
use super::likelihood::{factor_noisy_gram, lml_from_factor};
use super::prior::PriorSpec;
use crate::density::{LogDensity, LogDensityGrad};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Hyperparameters for one node/parent-set pair in natural coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    /// Noise mean.
    pub mu: f64,
    /// Noise standard deviation, > 0.
    pub sigma: f64,
    pub kernel: KernelConfig,
}

impl HyperParams {
    /// Total dimension: 2 + p, plus 2 with interactions.
    pub fn dim(&self) -> usize {
        2 + self.kernel.lengthscales.len() + if self.kernel.tau.is_some() { 2 } else { 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidArgument("sigma must be strictly positive".into()));
        }
        if self.kernel.n_parents() > 0 {
            self.kernel.validate()?;
        }
        Ok(())
    }
}

/// The model for one (node, parent set): standardized node column,
/// standardized parent columns, kernel kind and priors.
pub struct GpModel {
    y: DVector<f64>,
    n_parents: usize,
    /// Squared distances per parent column, reused across kernel evals.
    sq_dists: Vec<DMatrix<f64>>,
    kind: KernelKind,
    priors: PriorSpec,
}

impl GpModel {
    pub fn new(y: DVector<f64>, parent_data: DMatrix<f64>, kind: KernelKind, priors: PriorSpec) -> Result<GpModel> {
        if parent_data.ncols() > 0 && parent_data.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} observations vs {} parent rows",
                y.len(),
                parent_data.nrows()
            )));
        }
        Ok(GpModel {
            y,
            n_parents: parent_data.ncols(),
            sq_dists: squared_distances(&parent_data),
            kind,
            priors,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn n_parents(&self) -> usize {
        self.n_parents
    }

    pub fn priors(&self) -> &PriorSpec {
        &self.priors
    }

    fn has_tau(&self) -> bool {
        self.n_parents > 0 && self.kind == KernelKind::AdditiveWithInteractions
    }

    /// Decode an unconstrained vector into natural hyperparameters.
    pub fn decode(&self, eta: &[f64]) -> HyperParams {
        assert_eq!(eta.len(), self.dim(), "unconstrained vector length");
        let mu = eta[0];
        let sigma = eta[1].exp();
        let lengthscales: Vec<f64> = (0..self.n_parents).map(|i| eta[2 + i].exp()).collect();
        let kernel = if self.n_parents == 0 {
            KernelConfig::additive(lengthscales)
        } else if self.has_tau() {
            let t1 = eta[2 + self.n_parents].exp();
            let t2 = eta[3 + self.n_parents].exp();
            KernelConfig::with_interactions(lengthscales, t1, t2)
        } else {
            KernelConfig::additive(lengthscales)
        };
        HyperParams { mu, sigma, kernel }
    }

    pub fn encode(&self, hp: &HyperParams) -> Vec<f64> {
        let mut eta = vec![hp.mu, hp.sigma.ln()];
        eta.extend(hp.kernel.lengthscales.iter().map(|t| t.ln()));
        if let Some((t1, t2)) = hp.kernel.tau {
            eta.push(t1.ln());
            eta.push(t2.ln());
        }
        assert_eq!(eta.len(), self.dim());
        eta
    }

    /// Log joint in natural coordinates: marginal likelihood plus priors.
    /// The empty parent set uses a zero Gram matrix.
    pub fn log_joint_natural(&self, hp: &HyperParams) -> Result<f64> {
        hp.validate()?;
        let n = self.n_obs();
        let k = if self.n_parents == 0 {
            DMatrix::zeros(n, n)
        } else {
            let comps = component_grams_from_sq(&self.sq_dists, &hp.kernel.lengthscales);
            combine_grams(&hp.kernel, &comps)
        };
        let lml = super::likelihood::log_marginal_likelihood(&self.y, &k, hp.mu, hp.sigma)?;
        Ok(lml + self.log_prior(hp))
    }

    fn log_prior(&self, hp: &HyperParams) -> f64 {
        let mut lp = self.priors.log_pdf_mu(hp.mu) + self.priors.sigma.log_pdf(hp.sigma);
        for &t in &hp.kernel.lengthscales {
            lp += self.priors.lengthscale.log_pdf(t);
        }
        if let Some((t1, t2)) = hp.kernel.tau {
            lp += self.priors.tau.log_pdf(t1) + self.priors.tau.log_pdf(t2);
        }
        lp
    }

    /// Draw a prior point in unconstrained coordinates (used to disperse
    /// optimizer restarts and to initialize the hyperparameter sampler).
    pub fn sample_prior_unconstrained<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut eta = vec![
            self.priors.sample_mu(rng),
            self.priors.sigma.sample(rng).ln(),
        ];
        for _ in 0..self.n_parents {
            eta.push(self.priors.lengthscale.sample(rng).ln());
        }
        if self.has_tau() {
            eta.push(self.priors.tau.sample(rng).ln());
            eta.push(self.priors.tau.sample(rng).ln());
        }
        eta
    }

    /// A fixed reference start: prior means/medians on the natural scale.
    pub fn reference_start(&self) -> Vec<f64> {
        let mut eta = vec![0.0, 0.0]; // mu = 0, sigma = 1
        for _ in 0..self.n_parents {
            eta.push(self.priors.lengthscale.mean().ln());
        }
        if self.has_tau() {
            eta.push(0.0);
            eta.push(0.0);
        }
        eta
    }
}

impl LogDensity for GpModel {
    fn dim(&self) -> usize {
        2 + self.n_parents + if self.has_tau() { 2 } else { 0 }
    }

    /// Transformed log joint: natural log joint plus the log-Jacobian
    /// (ln sigma + sum ln theta_i + ln tau terms) of the exp map.
    fn log_density(&self, eta: &[f64]) -> f64 {
        let hp = self.decode(eta);
        let jac: f64 = eta[1..].iter().sum();
        match self.log_joint_natural(&hp) {
            Ok(v) => v + jac,
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

impl LogDensityGrad for GpModel {
    fn grad(&self, eta: &[f64]) -> Vec<f64> {
        self.value_and_grad(eta).1
    }

    fn value_and_grad(&self, eta: &[f64]) -> (f64, Vec<f64>) {
        let hp = self.decode(eta);
        let d = self.dim();
        let n = self.n_obs();
        let p = self.n_parents;

        // Likelihood value and d/dK parts.
        let mut value = 0.0;
        let mut grad = vec![0.0; d];

        if n > 0 {
            let comps = if p > 0 {
                component_grams_from_sq(&self.sq_dists, &hp.kernel.lengthscales)
            } else {
                Vec::new()
            };
            let k = if p == 0 {
                DMatrix::zeros(n, n)
            } else {
                combine_grams(&hp.kernel, &comps)
            };
            let chol = match factor_noisy_gram(&k, hp.sigma) {
                Ok(c) => c,
                Err(_) => return (f64::NEG_INFINITY, vec![0.0; d]),
            };
            value += lml_from_factor(&self.y, &chol, hp.mu);

            let r = self.y.map(|v| v - hp.mu);
            let alpha = chol.solve(&r);
            let ky_inv = chol.inverse();
            // dL/dK = (alpha alpha' - Ky^{-1}) / 2
            let a_mat = &alpha * alpha.transpose() - &ky_inv;

            // mu
            grad[0] += alpha.sum();
            // sigma (natural): dK/dsigma = 2 sigma I
            let dl_dsigma = hp.sigma * a_mat.diagonal().sum();
            grad[1] += dl_dsigma;

            if p > 0 {
                // Per-lengthscale derivative grams dK_i/dtheta_i = K_i .* D_i / theta_i^3
                for i in 0..p {
                    let ti = hp.kernel.lengthscales[i];
                    let dki = comps[i].component_mul(&self.sq_dists[i]) / (ti * ti * ti);
                    let dk = match hp.kernel.kind {
                        KernelKind::Additive => dki,
                        KernelKind::AdditiveWithInteractions => {
                            let (t1, t2) = hp.kernel.tau.expect("interactions carry tau");
                            let mut other = DMatrix::zeros(n, n);
                            for (j, c) in comps.iter().enumerate() {
                                if j != i {
                                    other += c;
                                }
                            }
                            &dki * t1 + (dki.component_mul(&other)) * t2
                        }
                    };
                    grad[2 + i] += 0.5 * a_mat.component_mul(&dk).sum();
                }
                if let Some((_, _)) = hp.kernel.tau {
                    let mut sum_k = DMatrix::zeros(n, n);
                    for c in &comps {
                        sum_k += c;
                    }
                    let mut pairs = DMatrix::zeros(n, n);
                    for i in 0..p {
                        for j in (i + 1)..p {
                            pairs += comps[i].component_mul(&comps[j]);
                        }
                    }
                    grad[2 + p] += 0.5 * a_mat.component_mul(&sum_k).sum();
                    grad[3 + p] += 0.5 * a_mat.component_mul(&pairs).sum();
                }
            }
        }

        // Priors (natural-coordinate derivatives).
        value += self.log_prior(&hp);
        grad[0] += self.priors.dlog_pdf_mu(hp.mu);
        grad[1] += self.priors.sigma.dlog_pdf(hp.sigma);
        for i in 0..p {
            grad[2 + i] += self.priors.lengthscale.dlog_pdf(hp.kernel.lengthscales[i]);
        }
        if let Some((t1, t2)) = hp.kernel.tau {
            grad[2 + p] += self.priors.tau.dlog_pdf(t1);
            grad[3 + p] += self.priors.tau.dlog_pdf(t2);
        }

        // Chain rule to unconstrained coordinates plus the Jacobian term:
        // for x = e^t, d/dt [f(x) + t] = f'(x) x + 1. mu is untransformed.
        let jac: f64 = eta[1..].iter().sum();
        value += jac;
        for (i, g) in grad.iter_mut().enumerate().skip(1) {
            let x = eta[i].exp();
            *g = *g * x + 1.0;
        }

        if !value.is_finite() {
            return (f64::NEG_INFINITY, vec![0.0; d]);
        }
        (value, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::fd_gradient;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn toy_model(n: usize, p: usize, kind: KernelKind, seed: u64) -> GpModel {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let y = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let z = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() * 3.0 - 1.5);
        GpModel::new(y, z, kind, PriorSpec::default()).unwrap()
    }

    #[test]
    fn empty_parent_set_reduces_to_iid_gaussian() {
        let y = DVector::from_vec(vec![0.4, -0.2, 1.1]);
        let m = GpModel::new(y.clone(), DMatrix::zeros(3, 0), KernelKind::Additive, PriorSpec::default()).unwrap();
        let hp = HyperParams { mu: 0.2, sigma: 0.9, kernel: KernelConfig::additive(vec![]) };
        let lj = m.log_joint_natural(&hp).unwrap();
        let iid: f64 = y
            .iter()
            .map(|v| {
                -0.5 * (2.0 * std::f64::consts::PI).ln() - 0.9f64.ln()
                    - 0.5 * ((v - 0.2) / 0.9).powi(2)
            })
            .sum();
        let priors = PriorSpec::default();
        let expect = iid + priors.log_pdf_mu(0.2) + priors.sigma.log_pdf(0.9);
        assert_abs_diff_eq!(lj, expect, epsilon = 1e-10);
    }

    #[test]
    fn dims_count_hyperparameters() {
        assert_eq!(toy_model(5, 0, KernelKind::Additive, 1).dim(), 2);
        assert_eq!(toy_model(5, 3, KernelKind::Additive, 1).dim(), 5);
        assert_eq!(toy_model(5, 2, KernelKind::AdditiveWithInteractions, 1).dim(), 6);
    }

    #[test]
    fn log_joint_vanishes_as_sigma_grows() {
        let m = toy_model(10, 1, KernelKind::Additive, 3);
        let at = |s: f64| {
            let hp = HyperParams { mu: 0.0, sigma: s, kernel: KernelConfig::additive(vec![1.0]) };
            m.log_joint_natural(&hp).unwrap()
        };
        assert!(at(1e4) < at(10.0));
        assert!(at(10.0) < at(1.0));
        assert!(at(1e8) < -100.0);
    }

    #[test]
    fn analytic_gradient_matches_fd_20_points() {
        // spec invariant: relative error <= 1e-4 at 20 random points
        for (p, kind) in [
            (0, KernelKind::Additive),
            (1, KernelKind::Additive),
            (3, KernelKind::Additive),
            (2, KernelKind::AdditiveWithInteractions),
        ] {
            let m = toy_model(12, p, kind, 100 + p as u64);
            let mut rng = ChaCha12Rng::seed_from_u64(55 + p as u64);
            let n_pts = if p == 3 { 5 } else { 20 };
            for _ in 0..n_pts {
                let eta: Vec<f64> = (0..m.dim()).map(|_| rng.random::<f64>() * 1.4 - 0.7).collect();
                let analytic = m.grad(&eta);
                let fd = fd_gradient(&m, &eta, 1e-5);
                for (a, f) in analytic.iter().zip(&fd) {
                    let scale = f.abs().max(1.0);
                    assert!(
                        (a - f).abs() / scale <= 1e-4,
                        "grad mismatch p={p}: analytic {a} vs fd {f} at {eta:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn encode_decode_roundtrip() {
        let m = toy_model(4, 2, KernelKind::AdditiveWithInteractions, 8);
        let hp = HyperParams {
            mu: -0.3,
            sigma: 0.75,
            kernel: KernelConfig::with_interactions(vec![0.5, 2.0], 1.2, 0.4),
        };
        let eta = m.encode(&hp);
        let back = m.decode(&eta);
        assert_abs_diff_eq!(back.mu, hp.mu, epsilon = 1e-14);
        assert_abs_diff_eq!(back.sigma, hp.sigma, epsilon = 1e-14);
        assert_abs_diff_eq!(back.kernel.tau.unwrap().0, 1.2, epsilon = 1e-14);
    }

    #[test]
    fn zero_length_data_gives_pure_prior() {
        let m = GpModel::new(
            DVector::from_vec(Vec::new()),
            DMatrix::zeros(0, 1),
            KernelKind::Additive,
            PriorSpec::default(),
        )
        .unwrap();
        let eta = vec![0.5, 0.0, 0.0];
        let hp = m.decode(&eta);
        let priors = PriorSpec::default();
        let expect = priors.log_pdf_mu(0.5)
            + priors.sigma.log_pdf(1.0)
            + priors.lengthscale.log_pdf(1.0)
            + 0.0; // jacobian: ln 1 + ln 1
        assert_abs_diff_eq!(m.log_density(&eta), expect, epsilon = 1e-12);
        let _ = hp;
    }
}
