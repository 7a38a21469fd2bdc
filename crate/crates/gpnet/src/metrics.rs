//! Evaluation quantities: structural Hamming distance on DAGs and
//! CPDAGs, posterior-expected statistics, reverse KL divergence,
//! TPR/FPRp, and the forward-vs-backward score equivalence gap.

use crate::dag::{Cpdag, Dag, DagKey};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// How a reversed edge is counted by `shd`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReversalCost {
    /// A flip counts as one edit (the default convention here).
    One,
    /// A flip counts as remove + add.
    Two,
}

impl Default for ReversalCost {
    fn default() -> Self {
        ReversalCost::One
    }
}

/// Structural Hamming distance between two DAGs.
pub fn shd(g1: &Dag, g2: &Dag, cost: ReversalCost) -> Result<usize> {
    if g1.n() != g2.n() {
        return Err(Error::Evaluation(format!(
            "node count mismatch: {} vs {}",
            g1.n(),
            g2.n()
        )));
    }
    let n = g1.n();
    let mut dist = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let a = (g1.has_edge(i, j), g1.has_edge(j, i));
            let b = (g2.has_edge(i, j), g2.has_edge(j, i));
            if a == b {
                continue;
            }
            let a_present = a.0 || a.1;
            let b_present = b.0 || b.1;
            dist += match (a_present, b_present) {
                (true, true) => match cost {
                    ReversalCost::One => 1,
                    ReversalCost::Two => 2,
                },
                _ => 1,
            };
        }
    }
    Ok(dist)
}

/// Structural Hamming distance between two CPDAGs: any mismatch on a
/// skeleton edge (direction or directedness) counts one edit, with the
/// directed-flip cost configurable as for DAGs.
pub fn shd_cpdag(g1: &Cpdag, g2: &Cpdag, cost: ReversalCost) -> Result<usize> {
    if g1.n() != g2.n() {
        return Err(Error::Evaluation(format!(
            "node count mismatch: {} vs {}",
            g1.n(),
            g2.n()
        )));
    }
    #[derive(PartialEq, Clone, Copy)]
    enum E {
        None,
        Fwd,
        Bwd,
        Und,
    }
    let state = |g: &Cpdag, i: usize, j: usize| {
        if g.has_directed(i, j) {
            E::Fwd
        } else if g.has_directed(j, i) {
            E::Bwd
        } else if g.has_undirected(i, j) {
            E::Und
        } else {
            E::None
        }
    };
    let n = g1.n();
    let mut dist = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let a = state(g1, i, j);
            let b = state(g2, i, j);
            if a == b {
                continue;
            }
            dist += match (a, b) {
                (E::Fwd, E::Bwd) | (E::Bwd, E::Fwd) => match cost {
                    ReversalCost::One => 1,
                    ReversalCost::Two => 2,
                },
                _ => 1,
            };
        }
    }
    Ok(dist)
}

/// Posterior-weighted mean of an arbitrary per-DAG statistic. The weights
/// need not be normalized.
pub fn expected_statistic<F>(posterior: &[(Dag, f64)], stat: F) -> Result<f64>
where
    F: Fn(&Dag) -> Result<f64>,
{
    if posterior.is_empty() {
        return Err(Error::Evaluation("empty posterior".into()));
    }
    let total: f64 = posterior.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        return Err(Error::Evaluation("posterior weights sum to zero".into()));
    }
    let mut acc = 0.0;
    for (dag, w) in posterior {
        acc += w * stat(dag)?;
    }
    Ok(acc / total)
}

/// Posterior-expected SHD to the ground truth.
pub fn expected_shd(posterior: &[(Dag, f64)], truth: &Dag, cost: ReversalCost) -> Result<f64> {
    expected_statistic(posterior, |d| Ok(shd(d, truth, cost)? as f64))
}

/// Directed true/false positive counts of an estimate against the truth.
/// A reversed edge counts toward neither.
pub fn tp_fp_counts(estimate: &Dag, truth: &Dag) -> Result<(usize, usize)> {
    if estimate.n() != truth.n() {
        return Err(Error::Evaluation("node count mismatch".into()));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    for (u, v) in estimate.edges() {
        if truth.has_edge(u, v) {
            tp += 1;
        } else if !truth.has_edge(v, u) {
            fp += 1;
        }
    }
    Ok((tp, fp))
}

/// TPR = TP/P and FPRp = FP/P with P the number of true edges.
pub fn tpr_fprp(estimate: &Dag, truth: &Dag) -> Result<(f64, f64)> {
    let p = truth.edge_count();
    if p == 0 {
        return Err(Error::Evaluation("TPR/FPRp undefined for an empty true graph".into()));
    }
    let (tp, fp) = tp_fp_counts(estimate, truth)?;
    Ok((tp as f64 / p as f64, fp as f64 / p as f64))
}

/// Reverse KL divergence sum_G q(G) (ln q(G) - ln p(G)) over the sampled
/// support, with 0 ln 0 := 0. `exact` must be strictly positive on every
/// sampled DAG.
pub fn reverse_kl(estimated: &BTreeMap<DagKey, f64>, exact: &BTreeMap<DagKey, f64>) -> Result<f64> {
    let mut kl = 0.0;
    for (key, &q) in estimated {
        if q == 0.0 {
            continue;
        }
        let p = exact.get(key).copied().unwrap_or(0.0);
        if p <= 0.0 {
            return Err(Error::Evaluation(format!(
                "estimated DAG {} has exact probability zero",
                key.to_hex()
            )));
        }
        kl += q * (q.ln() - p.ln());
    }
    Ok(kl)
}

/// Total log score of the forward DAG minus the fully reversed DAG under
/// a local scorer; positive values favor the forward orientation.
pub fn equivalence_gap<F>(forward: &Dag, mut local_score: F) -> Result<f64>
where
    F: FnMut(usize, &[usize]) -> Result<f64>,
{
    let backward = forward.reversed();
    let mut fwd = 0.0;
    let mut bwd = 0.0;
    for v in 0..forward.n() {
        fwd += local_score(v, forward.parents(v))?;
        bwd += local_score(v, backward.parents(v))?;
    }
    Ok(fwd - bwd)
}

/// Full evaluation summary serialized by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub e_shd: f64,
    pub e_tp: f64,
    pub e_fp: f64,
    /// TPR/FPRp of the highest-scoring sampled DAG.
    pub tpr: f64,
    pub fprp: f64,
    pub reverse_kl: Option<f64>,
    pub n_samples: usize,
    pub n_unique_dags: usize,
    pub effective_sample_size: f64,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str =
        "e_shd,e_tp,e_fp,tpr,fprp,reverse_kl,n_samples,n_unique_dags,effective_sample_size";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.e_shd,
            self.e_tp,
            self.e_fp,
            self.tpr,
            self.fprp,
            self.reverse_kl.map(|v| v.to_string()).unwrap_or_default(),
            self.n_samples,
            self.n_unique_dags,
            self.effective_sample_size
        )
    }
}
