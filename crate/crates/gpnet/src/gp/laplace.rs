//! MAP estimation and the Laplace approximation of the local score.
//!
//! The score of a node given a parent set is the marginal likelihood
//! integrated over the hyperparameter priors; the Laplace value replaces
//! the integral with a Gaussian around the posterior mode:
//!
//! `log S_L = f(eta~) + (d/2) ln 2pi - (1/2) ln |H|`
//!
//! where `f` is the log joint in unconstrained coordinates (including the
//! transform Jacobian) and `H` the Hessian of `-f` at the mode `eta~`,
//! obtained by central finite differences of the analytic gradient.

use super::objective::{GpModel, HyperParams};
use crate::density::LogDensityGrad;
use crate::error::Result;
use crate::opt::{maximize_multistart, OptConfig, OptResult};
use nalgebra::DMatrix;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct MapResult {
    /// Mode in unconstrained coordinates.
    pub eta: Vec<f64>,
    pub log_joint: f64,
    pub grad_norm: f64,
    /// False when no restart met the gradient tolerance; the best iterate
    /// is still returned.
    pub converged: bool,
}

/// Best local maximizer of the transformed log joint over multi-start
/// BFGS runs with prior-dispersed initial points.
pub fn map_estimate<R: Rng + ?Sized>(model: &GpModel, cfg: &OptConfig, rng: &mut R) -> MapResult {
    let mut starts = vec![model.reference_start()];
    for _ in 1..cfg.restarts.max(1) {
        starts.push(model.sample_prior_unconstrained(rng));
    }
    let r: OptResult = maximize_multistart(model, &starts, cfg);
    MapResult {
        eta: r.x,
        log_joint: r.value,
        grad_norm: r.grad_norm,
        converged: r.converged,
    }
}

#[derive(Debug, Clone)]
pub struct LaplaceResult {
    pub theta_map: HyperParams,
    /// log S_L.
    pub log_score: f64,
    /// Hessian of the negative transformed log joint at the mode.
    pub hessian: DMatrix<f64>,
    pub log_det_hessian: f64,
    /// True when the optimizer met tolerance and the Hessian was positive
    /// definite without eigenvalue flooring.
    pub converged: bool,
}

/// Hessian of `-f` at `x` by central finite differences of the gradient,
/// symmetrized.
pub fn neg_hessian_fd(obj: &dyn LogDensityGrad, x: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    let mut h = DMatrix::zeros(d, d);
    let mut xp = x.to_vec();
    for j in 0..d {
        let hj = 1e-4 * x[j].abs().max(1.0);
        xp[j] = x[j] + hj;
        let gp = obj.grad(&xp);
        xp[j] = x[j] - hj;
        let gm = obj.grad(&xp);
        xp[j] = x[j];
        for i in 0..d {
            // negative log joint: flip the sign of the gradient difference
            h[(i, j)] = -(gp[i] - gm[i]) / (2.0 * hj);
        }
    }
    let ht = h.transpose();
    (h + ht) * 0.5
}

/// log|H| for a symmetric H expected to be positive definite. When the
/// Cholesky fails the eigenvalues are floored at 1e-8 and `pd` is false.
pub fn log_det_pd(h: &DMatrix<f64>) -> (f64, bool) {
    if let Some(chol) = nalgebra::Cholesky::new(h.clone()) {
        let ld = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        return (ld, true);
    }
    let eig = h.clone().symmetric_eigen();
    let ld = eig.eigenvalues.iter().map(|&l| l.max(1e-8).ln()).sum();
    (ld, false)
}

/// Laplace log integral of `exp(f)` around a mode of `f`.
pub fn laplace_log_integral(obj: &dyn LogDensityGrad, mode: &[f64], f_at_mode: f64) -> (f64, DMatrix<f64>, f64, bool) {
    let d = mode.len() as f64;
    let h = neg_hessian_fd(obj, mode);
    let (log_det, pd) = log_det_pd(&h);
    let log_integral = f_at_mode + 0.5 * d * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det;
    (log_integral, h, log_det, pd)
}

/// Laplace-approximate local log score for one node/parent-set model.
pub fn laplace_log_score<R: Rng + ?Sized>(
    model: &GpModel,
    opt_cfg: &OptConfig,
    rng: &mut R,
) -> Result<LaplaceResult> {
    let map = map_estimate(model, opt_cfg, rng);
    let (log_score, hessian, log_det_hessian, pd) =
        laplace_log_integral(model, &map.eta, map.log_joint);
    Ok(LaplaceResult {
        theta_map: model.decode(&map.eta),
        log_score,
        hessian,
        log_det_hessian,
        converged: map.converged && pd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::LogDensity;
    use crate::gp::kernel::KernelKind;
    use crate::gp::prior::PriorSpec;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Exactly Gaussian integrand: f(x) = c - (x-a)' Q (x-a) / 2 with
    /// analytic integral c + (d/2) ln 2pi - (1/2) ln|Q|.
    struct GaussianIntegrand {
        c: f64,
        a: Vec<f64>,
        q: DMatrix<f64>,
    }

    impl LogDensity for GaussianIntegrand {
        fn dim(&self) -> usize {
            self.a.len()
        }
        fn log_density(&self, x: &[f64]) -> f64 {
            let d = DVector::from_iterator(x.len(), x.iter().zip(&self.a).map(|(xi, ai)| xi - ai));
            self.c - 0.5 * (d.transpose() * &self.q * &d)[(0, 0)]
        }
    }

    impl LogDensityGrad for GaussianIntegrand {
        fn grad(&self, x: &[f64]) -> Vec<f64> {
            let d = DVector::from_iterator(x.len(), x.iter().zip(&self.a).map(|(xi, ai)| xi - ai));
            (-(&self.q * d)).as_slice().to_vec()
        }
    }

    #[test]
    fn laplace_exact_for_gaussian_integrand() {
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.5, -0.2, 0.0, -0.2, 4.0]);
        let g = GaussianIntegrand { c: 1.7, a: vec![0.4, -1.0, 2.0], q: q.clone() };
        let mode = g.a.clone();
        let f_mode = g.log_density(&mode);
        let (log_int, _, _, pd) = laplace_log_integral(&g, &mode, f_mode);
        let analytic = 1.7 + 1.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * q.determinant().ln();
        assert!(pd);
        assert_abs_diff_eq!(log_int, analytic, epsilon = 1e-6);
    }

    #[test]
    fn non_pd_hessian_floored_not_crashed() {
        // a flat direction: f depends only on x0
        struct Flat;
        impl LogDensity for Flat {
            fn dim(&self) -> usize {
                2
            }
            fn log_density(&self, x: &[f64]) -> f64 {
                -0.5 * x[0] * x[0]
            }
        }
        impl LogDensityGrad for Flat {
            fn grad(&self, x: &[f64]) -> Vec<f64> {
                vec![-x[0], 0.0]
            }
        }
        let (v, _, _, pd) = laplace_log_integral(&Flat, &[0.0, 0.0], 0.0);
        assert!(!pd);
        assert!(v.is_finite());
    }

    #[test]
    fn map_empty_parent_set_matches_grid_oracle() {
        // dense grid over (mu, ln sigma) as the independent oracle
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let raw: Vec<f64> = (0..40).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let (m, s) = crate::util::mean_sd(&raw);
        let y = DVector::from_iterator(40, raw.iter().map(|v| (v - m) / s));
        let model = GpModel::new(y, DMatrix::zeros(40, 0), KernelKind::Additive, PriorSpec::default()).unwrap();

        let map = map_estimate(&model, &crate::opt::OptConfig::default(), &mut rng);
        assert!(map.converged);

        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        let grid = 400;
        for i in 0..grid {
            let mu = -0.5 + 1.0 * (i as f64) / (grid - 1) as f64;
            for j in 0..grid {
                let ls = -1.0 + 2.0 * (j as f64) / (grid - 1) as f64;
                let v = model.log_density(&[mu, ls]);
                if v > best.0 {
                    best = (v, mu, ls);
                }
            }
        }
        assert_abs_diff_eq!(map.eta[0], best.1, epsilon = 2e-3);
        assert_abs_diff_eq!(map.eta[1], best.2, epsilon = 3e-3);
        // standardized data: posterior mode of mu sits at (shrunk toward) 0
        assert!(map.eta[0].abs() < 0.05, "mu-hat {}", map.eta[0]);
    }

    #[test]
    fn map_dominates_prior_mode_and_fd_gradient_small() {
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let y = DVector::from_fn(25, |_, _| rng.random::<f64>() - 0.5);
        let z = DMatrix::from_fn(25, 1, |_, _| rng.random::<f64>() * 2.0);
        let model = GpModel::new(y, z, KernelKind::Additive, PriorSpec::default()).unwrap();
        let cfg = crate::opt::OptConfig::default();
        let map = map_estimate(&model, &cfg, &mut rng);

        let reference = model.reference_start();
        assert!(map.log_joint >= model.log_density(&reference));

        let fd = crate::density::fd_gradient(&model, &map.eta, 1e-6);
        let fd_norm = fd.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(fd_norm <= 10.0 * cfg.grad_tol, "fd grad norm {fd_norm}");
    }

    #[test]
    fn laplace_matches_1d_quadrature() {
        // freeze mu at its conditional mode and integrate over sigma only:
        // build a 1-D wrapper around the model with mu fixed
        struct FixMu<'a> {
            inner: &'a GpModel,
            mu: f64,
        }
        impl LogDensity for FixMu<'_> {
            fn dim(&self) -> usize {
                1
            }
            fn log_density(&self, x: &[f64]) -> f64 {
                self.inner.log_density(&[self.mu, x[0]])
            }
        }
        impl LogDensityGrad for FixMu<'_> {
            fn grad(&self, x: &[f64]) -> Vec<f64> {
                vec![self.inner.grad(&[self.mu, x[0]])[1]]
            }
        }

        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let raw: Vec<f64> = (0..60).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let (m, s) = crate::util::mean_sd(&raw);
        let y = DVector::from_iterator(60, raw.iter().map(|v| (v - m) / s));
        let model = GpModel::new(y, DMatrix::zeros(60, 0), KernelKind::Additive, PriorSpec::default()).unwrap();
        let toy = FixMu { inner: &model, mu: 0.0 };

        // 1-D mode search by grid refine + Laplace
        let mut mode = 0.0;
        let mut best = f64::NEG_INFINITY;
        for i in 0..4000 {
            let ls = -2.0 + 4.0 * (i as f64) / 3999.0;
            let v = toy.log_density(&[ls]);
            if v > best {
                best = v;
                mode = ls;
            }
        }
        let (laplace, _, _, pd) = laplace_log_integral(&toy, &[mode], best);
        assert!(pd);

        // adaptive Simpson over ln sigma in [-6, 4], shifted by the peak
        // value and pre-subdivided so the narrow mode cannot be skipped
        let f = |ls: f64| (toy.log_density(&[ls]) - best).exp();
        let mut total = 0.0;
        let (a, b, segs) = (-6.0, 4.0, 80);
        for s in 0..segs {
            let lo = a + (b - a) * s as f64 / segs as f64;
            let hi = a + (b - a) * (s + 1) as f64 / segs as f64;
            total += simpson_adaptive(&f, lo, hi, 1e-12, 20);
        }
        assert_abs_diff_eq!(laplace, total.ln() + best, epsilon = 0.1);
    }

    fn simpson_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            let c = 0.5 * (a + b);
            (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b))
        }
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: usize) -> f64 {
            let c = 0.5 * (a + b);
            let left = simpson(f, a, c);
            let right = simpson(f, c, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, c, left, tol / 2.0, depth - 1) + rec(f, c, b, right, tol / 2.0, depth - 1)
            }
        }
        rec(f, a, b, simpson(f, a, b), tol, depth)
    }
}
