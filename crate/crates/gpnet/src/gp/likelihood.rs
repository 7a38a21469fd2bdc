//! Gaussian process marginal likelihood through a symmetric
//! positive-definite factorization.

use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Cholesky of K + sigma^2 I with a single bounded jitter retry:
/// on failure add 1e-8 * mean(diag) to the diagonal, retry once, then error.
pub(crate) fn factor_noisy_gram(
    k: &DMatrix<f64>,
    sigma: f64,
) -> Result<Cholesky<f64, Dyn>> {
    let n = k.nrows();
    let mut ky = k.clone();
    for i in 0..n {
        ky[(i, i)] += sigma * sigma;
    }
    let mean_diag = ky.diagonal().sum() / n as f64;
    match Cholesky::new(ky.clone()) {
        Some(c) => Ok(c),
        None => {
            let jitter = 1e-8 * mean_diag;
            for i in 0..n {
                ky[(i, i)] += jitter;
            }
            Cholesky::new(ky).ok_or_else(|| {
                Error::Factorization(format!(
                    "K + sigma^2 I not positive definite (n={n}, sigma={sigma:.3e}) after jitter"
                ))
            })
        }
    }
}

/// Log marginal likelihood of observations `y` under a GP with Gram
/// matrix `k`, noise mean `mu` and noise standard deviation `sigma`:
///
/// `-(N/2) ln 2pi - 1/2 ln|K + sigma^2 I| - 1/2 (y-mu)' (K + sigma^2 I)^{-1} (y-mu)`
pub fn log_marginal_likelihood(
    y: &DVector<f64>,
    k: &DMatrix<f64>,
    mu: f64,
    sigma: f64,
) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(Error::InvalidArgument("sigma must be strictly positive".into()));
    }
    let n = y.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "Gram matrix {}x{} vs {n} observations",
            k.nrows(),
            k.ncols()
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let chol = factor_noisy_gram(k, sigma)?;
    Ok(lml_from_factor(y, &chol, mu))
}

pub(crate) fn lml_from_factor(y: &DVector<f64>, chol: &Cholesky<f64, Dyn>, mu: f64) -> f64 {
    let n = y.len() as f64;
    let r = y.map(|v| v - mu);
    let half_log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum();
    let alpha = chol.solve(&r);
    -0.5 * n * (2.0 * std::f64::consts::PI).ln() - half_log_det - 0.5 * r.dot(&alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    const LN_2PI: f64 = 1.8378770664093453;

    #[test]
    fn single_point_standard_normal() {
        let y = DVector::from_vec(vec![0.0]);
        let k = DMatrix::zeros(1, 1);
        let v = log_marginal_likelihood(&y, &k, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(v, -0.5 * LN_2PI, epsilon = 1e-12);
    }

    #[test]
    fn two_point_identity_kernel() {
        // K = I, sigma = 1 -> covariance 2I; |2I| = 4, quadratic form 0
        let y = DVector::from_vec(vec![0.0, 0.0]);
        let k = DMatrix::identity(2, 2);
        let v = log_marginal_likelihood(&y, &k, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(v, -LN_2PI - 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn matches_dense_oracle() {
        // direct evaluation with explicit determinant and inverse
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let raw = DMatrix::from_fn(5, 5, |_, _| rng.random::<f64>() - 0.5);
        let k = &raw * raw.transpose(); // PSD
        let y = DVector::from_fn(5, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let (mu, sigma) = (0.3, 0.8);

        let ky = &k + DMatrix::identity(5, 5) * sigma * sigma;
        let det = ky.determinant();
        let inv = ky.try_inverse().unwrap();
        let r = y.map(|v| v - mu);
        let oracle = -2.5 * LN_2PI - 0.5 * det.ln() - 0.5 * (r.transpose() * inv * &r)[(0, 0)];

        let v = log_marginal_likelihood(&y, &k, mu, sigma).unwrap();
        assert_abs_diff_eq!(v, oracle, epsilon = 1e-10);
    }

    #[test]
    fn permutation_invariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let data = DMatrix::from_fn(8, 2, |_, _| rng.random::<f64>() * 3.0);
        let cfg = super::super::kernel::KernelConfig::additive(vec![0.9, 1.4]);
        let y = DVector::from_fn(8, |_, _| rng.random::<f64>());
        let k = super::super::kernel::gram_matrix(&cfg, &data).unwrap();
        let base = log_marginal_likelihood(&y, &k, 0.1, 0.7).unwrap();

        // permute rows of y and parent data together
        let perm = [3usize, 0, 7, 1, 5, 2, 6, 4];
        let data_p = DMatrix::from_fn(8, 2, |i, j| data[(perm[i], j)]);
        let y_p = DVector::from_fn(8, |i, _| y[perm[i]]);
        let k_p = super::super::kernel::gram_matrix(&cfg, &data_p).unwrap();
        let permuted = log_marginal_likelihood(&y_p, &k_p, 0.1, 0.7).unwrap();
        assert_abs_diff_eq!(base, permuted, epsilon = 1e-10);
    }

    #[test]
    fn zero_length_data() {
        let y = DVector::from_vec(Vec::<f64>::new());
        let k = DMatrix::zeros(0, 0);
        assert_eq!(log_marginal_likelihood(&y, &k, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_sigma() {
        let y = DVector::from_vec(vec![1.0]);
        let k = DMatrix::zeros(1, 1);
        assert!(log_marginal_likelihood(&y, &k, 0.0, 0.0).is_err());
    }
}
