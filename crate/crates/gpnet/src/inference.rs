//! Second phase of the sampling scheme: re-score sampled DAGs with the
//! Monte Carlo (bridge) estimator, importance-reweight toward the exact
//! posterior, and answer posterior feature queries.
//!
//! Sampled DAGs are deduplicated through their canonical keys, and bridge
//! scores are computed once per unique (node, parent set) pair; thanks to
//! decomposability this is usually far fewer evaluations than DAGs.

use crate::dag::{to_cpdag, Dag, DagKey};
use crate::error::{Error, Result};
use crate::score::{GraphPrior, LocalScorer, ScoreCache, ScoreTable};
use crate::util::log_sum_exp;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// A sampled DAG with its approximate (Laplace) and exact (bridge)
/// unnormalized log posteriors; the importance weight is their ratio.
#[derive(Debug, Clone)]
pub struct WeightedDagSample {
    pub dag: Dag,
    /// Laplace-score log posterior used by the sampler.
    pub log_q: f64,
    /// Bridge-score log posterior.
    pub log_p: f64,
}

impl WeightedDagSample {
    pub fn log_w(&self) -> f64 {
        self.log_p - self.log_q
    }
}

/// A feature of interest evaluated on a DAG to a value in [0, 1].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FeatureQuery {
    /// Directed edge i -> j present.
    Edge { from: usize, to: usize },
    /// Directed path i ~> j present (transitive closure).
    DirectedPath { from: usize, to: usize },
    /// The sampled DAG equals the given one.
    DagEquals { key_hex: String },
    /// The CPDAG of the sample links i and j compatibly with i -> j
    /// (directed i -> j or undirected i - j).
    CpdagEdge { from: usize, to: usize },
}

impl FeatureQuery {
    pub fn evaluate(&self, dag: &Dag) -> f64 {
        let hit = match self {
            FeatureQuery::Edge { from, to } => dag.has_edge(*from, *to),
            FeatureQuery::DirectedPath { from, to } => dag.has_directed_path(*from, *to),
            FeatureQuery::DagEquals { key_hex } => dag.key().to_hex() == *key_hex,
            FeatureQuery::CpdagEdge { from, to } => {
                let c = to_cpdag(dag);
                c.has_directed(*from, *to) || c.has_undirected(*from, *to)
            }
        };
        if hit {
            1.0
        } else {
            0.0
        }
    }
}

/// Bridge-rescore a list of sampled DAGs against their Laplace-table
/// log posteriors. Unique (node, parent set) pairs across the unique
/// DAGs are scored once (optionally through the cache) and in parallel;
/// the graph prior is folded into `log_p` exactly as the table folded it
/// into `log_q`, so it cancels in the weights.
pub fn rescore_unique(
    samples: &[Dag],
    laplace_table: &ScoreTable,
    bridge_scorer: &dyn LocalScorer,
    cache: Option<&ScoreCache>,
) -> Result<Vec<WeightedDagSample>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples to rescore".into()));
    }
    let mut unique: BTreeMap<DagKey, &Dag> = BTreeMap::new();
    for d in samples {
        unique.entry(d.key()).or_insert(d);
    }

    // unique (node, parent set) pairs across unique DAGs
    let mut pairs: BTreeMap<(usize, u64), Vec<usize>> = BTreeMap::new();
    for dag in unique.values() {
        for v in 0..dag.n() {
            pairs
                .entry((v, dag.parent_mask(v)))
                .or_insert_with(|| dag.parents(v).to_vec());
        }
    }
    let pair_list: Vec<((usize, u64), Vec<usize>)> = pairs.into_iter().collect();
    let scored: Result<Vec<f64>> = pair_list
        .par_iter()
        .map(|((node, _), parents)| match cache {
            Some(c) => c.get_or_compute(*node, parents, bridge_scorer),
            None => bridge_scorer.local_score(*node, parents),
        })
        .collect();
    let scored = scored?;
    let local: HashMap<(usize, u64), f64> = pair_list
        .iter()
        .map(|(key, _)| *key)
        .zip(scored)
        .collect();

    let mut per_key: HashMap<DagKey, (f64, f64)> = HashMap::new();
    for (key, dag) in &unique {
        let mut log_p = 0.0;
        for v in 0..dag.n() {
            log_p += local[&(v, dag.parent_mask(v))]
                + laplace_table.prior.local_term(dag.parents(v).len());
        }
        let log_q = crate::score::dag_log_posterior(dag, laplace_table)
            .map_err(|e| Error::Evaluation(format!("DAG {}: {e}", key.to_hex())))?;
        per_key.insert(key.clone(), (log_q, log_p));
    }

    Ok(samples
        .iter()
        .map(|d| {
            let (log_q, log_p) = per_key[&d.key()];
            WeightedDagSample { dag: d.clone(), log_q, log_p }
        })
        .collect())
}

/// Self-normalized importance-sampling estimate of a feature posterior.
pub fn feature_posterior(weighted: &[WeightedDagSample], query: &FeatureQuery) -> Result<f64> {
    if weighted.is_empty() {
        return Err(Error::InvalidArgument("no weighted samples".into()));
    }
    let log_ws: Vec<f64> = weighted.iter().map(|w| w.log_w()).collect();
    let hits: Vec<f64> = weighted
        .iter()
        .zip(&log_ws)
        .filter(|(w, _)| query.evaluate(&w.dag) > 0.5)
        .map(|(_, &lw)| lw)
        .collect();
    if hits.is_empty() {
        return Ok(0.0);
    }
    Ok((log_sum_exp(&hits) - log_sum_exp(&log_ws)).exp())
}

/// The normalized posterior over sampled DAG keys implied by the weights.
pub fn estimated_dag_posterior(weighted: &[WeightedDagSample]) -> Result<BTreeMap<DagKey, f64>> {
    if weighted.is_empty() {
        return Err(Error::InvalidArgument("no weighted samples".into()));
    }
    let mut grouped: BTreeMap<DagKey, Vec<f64>> = BTreeMap::new();
    for w in weighted {
        grouped.entry(w.dag.key()).or_default().push(w.log_w());
    }
    let all: Vec<f64> = weighted.iter().map(|w| w.log_w()).collect();
    let log_z = log_sum_exp(&all);
    Ok(grouped
        .into_iter()
        .map(|(k, ws)| (k, (log_sum_exp(&ws) - log_z).exp()))
        .collect())
}

/// Effective sample size (sum w)^2 / sum w^2 of the importance weights.
pub fn effective_sample_size(weighted: &[WeightedDagSample]) -> f64 {
    let log_ws: Vec<f64> = weighted.iter().map(|w| w.log_w()).collect();
    let log_sum = log_sum_exp(&log_ws);
    let log_sum_sq = log_sum_exp(&log_ws.iter().map(|w| 2.0 * w).collect::<Vec<_>>());
    (2.0 * log_sum - log_sum_sq).exp()
}

/// The exact posterior over every DAG on `n` nodes for a decomposable
/// local score; the ground truth for KL comparisons.
#[derive(Debug, Clone)]
pub struct ExactPosterior {
    pub dags: Vec<Dag>,
    /// Total unnormalized log score per DAG (same order as `dags`).
    pub log_scores: Vec<f64>,
    /// Log normalization constant.
    pub log_z: f64,
}

impl ExactPosterior {
    pub fn probabilities(&self) -> BTreeMap<DagKey, f64> {
        self.dags
            .iter()
            .zip(&self.log_scores)
            .map(|(d, &s)| (d.key(), (s - self.log_z).exp()))
            .collect()
    }

    pub fn log_prob(&self, key: &DagKey) -> Option<f64> {
        self.dags
            .iter()
            .position(|d| &d.key() == key)
            .map(|i| self.log_scores[i] - self.log_z)
    }
}

/// Enumerate every DAG and score it with the given local score
/// (n <= 4 is the practical bound for bridge scores; <= 5 otherwise).
pub fn exact_posterior<F>(n: usize, mut local_score: F) -> Result<ExactPosterior>
where
    F: FnMut(usize, &[usize]) -> Result<f64>,
{
    let dags = crate::dag::enumerate_dags(n)?;
    let mut log_scores = Vec::with_capacity(dags.len());
    for d in &dags {
        let mut total = 0.0;
        for v in 0..n {
            total += local_score(v, d.parents(v))?;
        }
        log_scores.push(total);
    }
    let log_z = log_sum_exp(&log_scores);
    Ok(ExactPosterior { dags, log_scores, log_z })
}

/// Exact posterior from a complete score table (prior included).
pub fn exact_posterior_from_table(table: &ScoreTable) -> Result<ExactPosterior> {
    exact_posterior(table.n, |v, pa| {
        let mask = pa.iter().fold(0u64, |m, &p| m | (1 << p));
        table.log_score(v, mask)
    })
}

/// Check table coverage: every DAG on n nodes is scoreable iff
/// max_parents >= n - 1.
pub fn assert_full_coverage(table: &ScoreTable) -> Result<()> {
    if table.max_parents + 1 < table.n {
        return Err(Error::InvalidArgument(format!(
            "exact enumeration needs max_parents = n-1; table has {} for n = {}",
            table.max_parents, table.n
        )));
    }
    Ok(())
}

/// The prior term is needed when composing bridge local scores into a DAG
/// log posterior outside `rescore_unique`.
pub fn dag_log_score_with_prior<F>(dag: &Dag, prior: GraphPrior, mut local_score: F) -> Result<f64>
where
    F: FnMut(usize, &[usize]) -> Result<f64>,
{
    let mut total = 0.0;
    for v in 0..dag.n() {
        total += local_score(v, dag.parents(v))? + prior.local_term(dag.parents(v).len());
    }
    Ok(total)
}
