//! Squared-exponential kernels over parent vectors: an additive kernel
//! (one lengthscale per parent) and an additive kernel with all
//! first-order interactions weighted by tau_1, tau_2. Each component is
//! unit variance; the data are standardized before scoring.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Additive,
    AdditiveWithInteractions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub kind: KernelKind,
    /// One strictly positive lengthscale per parent.
    pub lengthscales: Vec<f64>,
    /// (tau_1, tau_2), present only for the interactions kind.
    pub tau: Option<(f64, f64)>,
}

impl KernelConfig {
    pub fn additive(lengthscales: Vec<f64>) -> KernelConfig {
        KernelConfig { kind: KernelKind::Additive, lengthscales, tau: None }
    }

    pub fn with_interactions(lengthscales: Vec<f64>, tau1: f64, tau2: f64) -> KernelConfig {
        KernelConfig {
            kind: KernelKind::AdditiveWithInteractions,
            lengthscales,
            tau: Some((tau1, tau2)),
        }
    }

    pub fn n_parents(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidArgument("lengthscales must be strictly positive".into()));
        }
        match (self.kind, self.tau) {
            (KernelKind::Additive, None) => Ok(()),
            (KernelKind::AdditiveWithInteractions, Some((t1, t2))) if t1 > 0.0 && t2 > 0.0 => Ok(()),
            (KernelKind::Additive, Some(_)) => {
                Err(Error::InvalidArgument("additive kernel takes no tau weights".into()))
            }
            (KernelKind::AdditiveWithInteractions, _) => Err(Error::InvalidArgument(
                "interaction kernel requires strictly positive tau_1, tau_2".into(),
            )),
        }
    }
}

/// Unit-variance squared exponential in one coordinate.
#[inline]
fn se(z: f64, z2: f64, theta: f64) -> f64 {
    (-(z - z2).powi(2) / (2.0 * theta * theta)).exp()
}

/// Kernel value between two parent vectors.
pub fn kernel_eval(cfg: &KernelConfig, z: &[f64], z2: &[f64]) -> Result<f64> {
    cfg.validate()?;
    let p = cfg.n_parents();
    if p == 0 {
        return Err(Error::DimensionMismatch("kernel requires at least one parent".into()));
    }
    if z.len() != p || z2.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "expected parent vectors of length {p}, got {} and {}",
            z.len(),
            z2.len()
        )));
    }
    let comps: Vec<f64> = (0..p).map(|i| se(z[i], z2[i], cfg.lengthscales[i])).collect();
    let additive: f64 = comps.iter().sum();
    match cfg.kind {
        KernelKind::Additive => Ok(additive),
        KernelKind::AdditiveWithInteractions => {
            let (t1, t2) = cfg.tau.expect("validated");
            let mut pairs = 0.0;
            for i in 0..p {
                for j in (i + 1)..p {
                    pairs += comps[i] * comps[j];
                }
            }
            Ok(t1 * additive + t2 * pairs)
        }
    }
}

/// N x N Gram matrix of the kernel over the rows of `parent_data`.
pub fn gram_matrix(cfg: &KernelConfig, parent_data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    if parent_data.ncols() != cfg.n_parents() {
        return Err(Error::DimensionMismatch(format!(
            "{} data columns vs {} lengthscales",
            parent_data.ncols(),
            cfg.n_parents()
        )));
    }
    if parent_data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite parent data".into()));
    }
    let comps = component_grams(parent_data, &cfg.lengthscales);
    Ok(combine_grams(cfg, &comps))
}

/// Squared distances per parent column; reusable across lengthscale values.
pub(crate) fn squared_distances(parent_data: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let n = parent_data.nrows();
    (0..parent_data.ncols())
        .map(|c| {
            let col = parent_data.column(c);
            DMatrix::from_fn(n, n, |a, b| (col[a] - col[b]).powi(2))
        })
        .collect()
}

/// Per-parent component grams from precomputed squared distances.
pub(crate) fn component_grams_from_sq(sq: &[DMatrix<f64>], lengthscales: &[f64]) -> Vec<DMatrix<f64>> {
    sq.iter()
        .zip(lengthscales)
        .map(|(d, &t)| d.map(|v| (-v / (2.0 * t * t)).exp()))
        .collect()
}

fn component_grams(parent_data: &DMatrix<f64>, lengthscales: &[f64]) -> Vec<DMatrix<f64>> {
    component_grams_from_sq(&squared_distances(parent_data), lengthscales)
}

/// Combine per-parent grams per the kernel kind.
pub(crate) fn combine_grams(cfg: &KernelConfig, comps: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = comps[0].nrows();
    let mut k = DMatrix::zeros(n, n);
    for c in comps {
        k += c;
    }
    match cfg.kind {
        KernelKind::Additive => k,
        KernelKind::AdditiveWithInteractions => {
            let (t1, t2) = cfg.tau.expect("validated");
            let mut pairs = DMatrix::zeros(n, n);
            for i in 0..comps.len() {
                for j in (i + 1)..comps.len() {
                    pairs += comps[i].component_mul(&comps[j]);
                }
            }
            k * t1 + pairs * t2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn kernel_at_zero_distance() {
        let cfg = KernelConfig::additive(vec![1.0, 2.0]);
        let z = [0.3, -1.0];
        assert_abs_diff_eq!(kernel_eval(&cfg, &z, &z).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn kernel_one_lengthscale_apart() {
        for theta in [0.5, 1.0, 3.0] {
            let cfg = KernelConfig::additive(vec![theta]);
            let v = kernel_eval(&cfg, &[0.0], &[theta]).unwrap();
            assert_abs_diff_eq!(v, (-0.5f64).exp(), epsilon = 1e-12);
        }
    }

    #[test]
    fn interaction_kernel_at_zero_distance() {
        let cfg = KernelConfig::with_interactions(vec![1.0, 1.0], 1.0, 1.0);
        let z = [0.1, 0.2];
        assert_abs_diff_eq!(kernel_eval(&cfg, &z, &z).unwrap(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let cfg = KernelConfig::additive(vec![1.0, 1.0]);
        assert!(kernel_eval(&cfg, &[0.0], &[0.0, 1.0]).is_err());
        let bad = KernelConfig::additive(vec![-1.0]);
        assert!(kernel_eval(&bad, &[0.0], &[0.0]).is_err());
    }

    #[test]
    fn gram_trivial_cases() {
        let cfg = KernelConfig::additive(vec![1.0]);
        let one = DMatrix::from_row_slice(1, 1, &[0.7]);
        let k = gram_matrix(&cfg, &one).unwrap();
        assert_eq!(k.nrows(), 1);
        assert_abs_diff_eq!(k[(0, 0)], 1.0, epsilon = 1e-15);

        let two = DMatrix::from_row_slice(2, 1, &[0.5, 0.5]);
        let k2 = gram_matrix(&cfg, &two).unwrap();
        for v in k2.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn gram_matches_entrywise_oracle() {
        // loop-based oracle independent of the vectorized path
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let data = DMatrix::from_fn(3, 2, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        for cfg in [
            KernelConfig::additive(vec![0.8, 1.7]),
            KernelConfig::with_interactions(vec![0.8, 1.7], 0.6, 1.4),
        ] {
            let k = gram_matrix(&cfg, &data).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    let za: Vec<f64> = data.row(a).iter().cloned().collect();
                    let zb: Vec<f64> = data.row(b).iter().cloned().collect();
                    let expect = kernel_eval(&cfg, &za, &zb).unwrap();
                    assert_abs_diff_eq!(k[(a, b)], expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn gram_symmetric_and_jittered_psd() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let data = DMatrix::from_fn(20, 3, |_, _| rng.random::<f64>() * 2.0);
        let cfg = KernelConfig::additive(vec![0.5, 1.0, 2.0]);
        let k = gram_matrix(&cfg, &data).unwrap();
        for a in 0..20 {
            for b in 0..20 {
                assert_abs_diff_eq!(k[(a, b)], k[(b, a)], epsilon = 1e-12);
            }
        }
        let sigma = 1e-6f64;
        let shifted = &k + DMatrix::identity(20, 20) * sigma * sigma;
        assert!(nalgebra::Cholesky::new(shifted).is_some());
    }
}
