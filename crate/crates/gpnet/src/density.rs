//! Log-density traits shared by the optimizer, the hyperparameter
//! sampler, the Laplace approximation and the bridge estimator.

/// An unnormalized log density over R^d.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;
    fn log_density(&self, x: &[f64]) -> f64;
}

/// A log density with an analytic gradient.
pub trait LogDensityGrad: LogDensity {
    fn grad(&self, x: &[f64]) -> Vec<f64>;

    /// Value and gradient together; override when they share work.
    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.log_density(x), self.grad(x))
    }
}

/// Central finite-difference gradient; the reference used in tests to
/// validate analytic gradients.
pub fn fd_gradient(f: &dyn LogDensity, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let hi = h * x[i].abs().max(1.0);
        xp[i] = x[i] + hi;
        let fp = f.log_density(&xp);
        xp[i] = x[i] - hi;
        let fm = f.log_density(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * hi);
    }
    g
}
