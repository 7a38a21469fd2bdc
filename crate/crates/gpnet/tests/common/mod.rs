//! Shared helpers and independent oracles for the integration suites.

use gpnet::dag::{Dag, DagKey};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::HashMap;

/// Closed-form log evidence of the conjugate normal-mean model:
/// y_i ~ N(theta, s0^2) iid, theta ~ N(m0, v0^2).
pub fn conjugate_log_evidence(y: &[f64], s0: f64, m0: f64, v0: f64) -> f64 {
    let n = y.len() as f64;
    let s2 = s0 * s0;
    let v2 = v0 * v0;
    let sum: f64 = y.iter().map(|v| v - m0).sum();
    let ss: f64 = y.iter().map(|v| (v - m0).powi(2)).sum();
    let log_det = n * s2.ln() + (1.0 + n * v2 / s2).ln();
    let quad = ss / s2 - (v2 / s2) * sum * sum / (s2 + n * v2);
    -0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det - 0.5 * quad
}

/// p-value of the chi-square test of uniformity over cells.
pub fn chi_square_uniform_p(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let chi = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    1.0 - chi.cdf(stat)
}

/// Empirical counts of samples over an enumerated DAG list.
pub fn empirical_dag_counts(samples: &[(Dag, f64)], dags: &[Dag]) -> Vec<usize> {
    let index: HashMap<DagKey, usize> = dags.iter().enumerate().map(|(i, d)| (d.key(), i)).collect();
    let mut counts = vec![0usize; dags.len()];
    for (d, _) in samples {
        counts[index[&d.key()]] += 1;
    }
    counts
}

/// Total variation distance between empirical counts and probabilities.
pub fn tv_distance(counts: &[usize], probs: &[f64]) -> f64 {
    let total: usize = counts.iter().sum();
    0.5 * counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| (c as f64 / total as f64 - p).abs())
        .sum::<f64>()
}
