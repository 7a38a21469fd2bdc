//! BFGS quasi-Newton maximizer with backtracking line search.
//!
//! Dimensions here are tiny (d <= 9), so the dense inverse-Hessian
//! update is the natural choice.

use crate::density::LogDensityGrad;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OptConfig {
    /// Multi-start count for MAP estimation.
    pub restarts: usize,
    pub max_iters: usize,
    /// Convergence threshold on the gradient (sup of euclidean norm).
    pub grad_tol: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        // restarts default 5: hyperparameter posteriors can be multimodal
        OptConfig { restarts: 5, max_iters: 200, grad_tol: 1e-5 }
    }
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximize `obj` starting from `x0` (single start).
pub fn maximize(obj: &dyn LogDensityGrad, x0: &[f64], cfg: &OptConfig) -> OptResult {
    let d = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, gx) = obj.value_and_grad(x.as_slice());
    let mut g = -DVector::from_vec(gx); // gradient of the negated objective
    let mut h_inv = DMatrix::<f64>::identity(d, d);
    let mut iterations = 0;

    if !fx.is_finite() {
        return OptResult {
            x: x.as_slice().to_vec(),
            value: fx,
            grad_norm: f64::INFINITY,
            iterations,
            converged: false,
        };
    }

    for _ in 0..cfg.max_iters {
        iterations += 1;
        let gnorm = g.norm();
        if gnorm <= cfg.grad_tol {
            break;
        }
        let mut dir = -(&h_inv * &g);
        // fall back to steepest descent if the update lost descent
        if dir.dot(&g) >= 0.0 {
            h_inv = DMatrix::identity(d, d);
            dir = -g.clone();
        }

        // backtracking Armijo on the negated objective
        let mut alpha = 1.0f64;
        let slope = g.dot(&dir); // < 0
        let mut accepted = None;
        for _ in 0..50 {
            let x_new = &x + alpha * &dir;
            let (f_new, g_new) = obj.value_and_grad(x_new.as_slice());
            let neg_new = -f_new;
            if f_new.is_finite() && neg_new <= -fx + 1e-4 * alpha * slope {
                accepted = Some((x_new, f_new, g_new));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            break; // line search failed; report current point
        };

        let g_new = -DVector::from_vec(g_new);
        let s = &x_new - &x;
        let yv = &g_new - &g;
        let sy = s.dot(&yv);
        if sy > 1e-12 * s.norm() * yv.norm() {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(d, d);
            let left = &i - rho * (&s * yv.transpose());
            let right = &i - rho * (&yv * s.transpose());
            h_inv = &left * h_inv * &right + rho * (&s * s.transpose());
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }

    let grad_norm = g.norm();
    OptResult {
        x: x.as_slice().to_vec(),
        value: fx,
        grad_norm,
        iterations,
        converged: grad_norm <= cfg.grad_tol,
    }
}

/// Maximize from several starting points; returns the best by value.
pub fn maximize_multistart(
    obj: &dyn LogDensityGrad,
    starts: &[Vec<f64>],
    cfg: &OptConfig,
) -> OptResult {
    assert!(!starts.is_empty(), "at least one start required");
    let mut best: Option<OptResult> = None;
    for s in starts {
        let r = maximize(obj, s, cfg);
        let better = match &best {
            None => true,
            Some(b) => r.value.is_finite() && (!b.value.is_finite() || r.value > b.value),
        };
        if better {
            best = Some(r);
        }
    }
    best.unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::LogDensity;
    use approx::assert_abs_diff_eq;

    /// -(x - a)' Q (x - a) / 2 with diagonal Q.
    struct Quadratic {
        center: Vec<f64>,
        scale: Vec<f64>,
    }

    impl LogDensity for Quadratic {
        fn dim(&self) -> usize {
            self.center.len()
        }
        fn log_density(&self, x: &[f64]) -> f64 {
            -0.5 * x
                .iter()
                .zip(&self.center)
                .zip(&self.scale)
                .map(|((xi, ci), qi)| qi * (xi - ci).powi(2))
                .sum::<f64>()
        }
    }

    impl LogDensityGrad for Quadratic {
        fn grad(&self, x: &[f64]) -> Vec<f64> {
            x.iter()
                .zip(&self.center)
                .zip(&self.scale)
                .map(|((xi, ci), qi)| -qi * (xi - ci))
                .collect()
        }
    }

    #[test]
    fn finds_quadratic_maximum() {
        let q = Quadratic { center: vec![1.0, -2.0, 0.5], scale: vec![4.0, 0.5, 10.0] };
        let r = maximize(&q, &[5.0, 5.0, 5.0], &OptConfig::default());
        assert!(r.converged);
        for (xi, ci) in r.x.iter().zip(&q.center) {
            assert_abs_diff_eq!(xi, ci, epsilon = 1e-5);
        }
    }

    #[test]
    fn rosenbrock_like_banana() {
        // maximize -( (1-x)^2 + 100 (y - x^2)^2 )
        struct Banana;
        impl LogDensity for Banana {
            fn dim(&self) -> usize {
                2
            }
            fn log_density(&self, x: &[f64]) -> f64 {
                -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2))
            }
        }
        impl LogDensityGrad for Banana {
            fn grad(&self, x: &[f64]) -> Vec<f64> {
                let g0 = 2.0 * (1.0 - x[0]) + 400.0 * x[0] * (x[1] - x[0] * x[0]);
                let g1 = -200.0 * (x[1] - x[0] * x[0]);
                vec![g0, g1]
            }
        }
        let r = maximize(&Banana, &[-1.2, 1.0], &OptConfig { max_iters: 2000, ..Default::default() });
        assert!(r.converged, "grad norm {}", r.grad_norm);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(r.x[1], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn multistart_picks_best() {
        let q = Quadratic { center: vec![3.0], scale: vec![1.0] };
        let r = maximize_multistart(
            &q,
            &[vec![-10.0], vec![10.0], vec![0.0]],
            &OptConfig::default(),
        );
        assert_abs_diff_eq!(r.x[0], 3.0, epsilon = 1e-5);
    }
}
