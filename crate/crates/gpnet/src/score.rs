//! Local-score plumbing for the DAG samplers: scorer implementations over
//! a dataset, complete parent-set score tables, the decomposable graph
//! prior, and a persistent on-disk score cache.
//!
//! # Score cache file layout (version 1)
//!
//! An append-only record log. All integers little-endian.
//!
//! ```text
//! header:  8 bytes magic "GPNSCORE" | u32 version = 1
//! record:  u16 node | u64 parent-set bitmask | u8 kind | u64 seed fingerprint | f64 log_score
//! ```
//!
//! Records are 27 bytes each. A truncated or corrupt tail is skipped with
//! a warning and the affected entries are recomputed on demand. Later
//! records win on duplicate keys. Readers may share the cache; writes are
//! serialized behind a lock.

use crate::bge::{BgeParams, BgeSuffStats};
use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::evidence::{gp_bridge_log_score, BridgeConfig};
use crate::gp::{laplace_log_score, GpModel, KernelKind, PriorSpec};
use crate::opt::OptConfig;
use crate::synth::Dataset;
use crate::util::{log_sum_exp, mix_seed};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{Read, Seek, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Laplace,
    Bridge,
    Bge,
}

impl ScoreKind {
    fn to_byte(self) -> u8 {
        match self {
            ScoreKind::Laplace => 0,
            ScoreKind::Bridge => 1,
            ScoreKind::Bge => 2,
        }
    }

    fn from_byte(b: u8) -> Option<ScoreKind> {
        match b {
            0 => Some(ScoreKind::Laplace),
            1 => Some(ScoreKind::Bridge),
            2 => Some(ScoreKind::Bge),
            _ => None,
        }
    }
}

/// A cached local score.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub node: usize,
    pub parent_set: Vec<usize>,
    pub kind: ScoreKind,
    pub log_score: f64,
    pub seed_fingerprint: u64,
}

/// Prior over graph structures, folded into local scores (decomposable).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GraphPrior {
    Uniform,
    /// p(G) proportional to exp(-gamma * #edges).
    EdgePenalty { gamma: f64 },
}

impl GraphPrior {
    /// Per-node contribution for a parent set of size `k`.
    pub fn local_term(&self, k: usize) -> f64 {
        match self {
            GraphPrior::Uniform => 0.0,
            GraphPrior::EdgePenalty { gamma } => -gamma * k as f64,
        }
    }
}

/// Computes the local score of (node, parent set); implementations carry
/// the dataset and their estimator configuration.
pub trait LocalScorer: Sync {
    fn kind(&self) -> ScoreKind;
    fn n_nodes(&self) -> usize;
    /// Stable fingerprint of (data, seed, estimator settings) for cache keys.
    fn fingerprint(&self) -> u64;
    fn local_score(&self, node: usize, parents: &[usize]) -> Result<f64>;
}

fn parents_to_mask(parents: &[usize]) -> u64 {
    parents.iter().fold(0u64, |m, &p| m | (1 << p))
}

fn mask_to_parents(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask & (1 << i) != 0).collect()
}

/// Per-pair RNG stream seed.
fn pair_seed(master: u64, node: usize, parents: &[usize], kind: ScoreKind) -> u64 {
    mix_seed(&[master, node as u64, parents_to_mask(parents), kind.to_byte() as u64])
}

// ---------------------------------------------------------------------------
// Scorers.
// ---------------------------------------------------------------------------

/// Laplace-approximate GP score.
pub struct GpLaplaceScorer {
    dataset: Dataset,
    pub kernel: KernelKind,
    pub priors: PriorSpec,
    pub opt: OptConfig,
    pub seed: u64,
}

impl GpLaplaceScorer {
    pub fn new(dataset: &Dataset, kernel: KernelKind, priors: PriorSpec, opt: OptConfig, seed: u64) -> Result<GpLaplaceScorer> {
        Ok(GpLaplaceScorer { dataset: dataset.standardized()?, kernel, priors, opt, seed })
    }

    fn model(&self, node: usize, parents: &[usize]) -> Result<GpModel> {
        let y = nalgebra::DVector::from_vec(self.dataset.column(node));
        let z = self.dataset.columns(parents);
        GpModel::new(y, z, self.kernel, self.priors)
    }
}

impl LocalScorer for GpLaplaceScorer {
    fn kind(&self) -> ScoreKind {
        ScoreKind::Laplace
    }

    fn n_nodes(&self) -> usize {
        self.dataset.n_nodes()
    }

    fn fingerprint(&self) -> u64 {
        mix_seed(&[
            self.dataset.fingerprint(),
            self.seed,
            matches!(self.kernel, KernelKind::AdditiveWithInteractions) as u64,
            self.opt.restarts as u64,
        ])
    }

    fn local_score(&self, node: usize, parents: &[usize]) -> Result<f64> {
        let model = self.model(node, parents).map_err(|e| e.with_score_context(node, parents))?;
        let mut rng = ChaCha12Rng::seed_from_u64(pair_seed(self.seed, node, parents, ScoreKind::Laplace));
        let res = laplace_log_score(&model, &self.opt, &mut rng)
            .map_err(|e| e.with_score_context(node, parents))?;
        Ok(res.log_score)
    }
}

/// Bridge-sampling (exact MC) GP score.
pub struct GpBridgeScorer {
    dataset: Dataset,
    pub kernel: KernelKind,
    pub priors: PriorSpec,
    pub bridge: BridgeConfig,
    pub seed: u64,
}

impl GpBridgeScorer {
    pub fn new(dataset: &Dataset, kernel: KernelKind, priors: PriorSpec, bridge: BridgeConfig, seed: u64) -> Result<GpBridgeScorer> {
        Ok(GpBridgeScorer { dataset: dataset.standardized()?, kernel, priors, bridge, seed })
    }
}

impl LocalScorer for GpBridgeScorer {
    fn kind(&self) -> ScoreKind {
        ScoreKind::Bridge
    }

    fn n_nodes(&self) -> usize {
        self.dataset.n_nodes()
    }

    fn fingerprint(&self) -> u64 {
        mix_seed(&[
            self.dataset.fingerprint(),
            self.seed,
            matches!(self.kernel, KernelKind::AdditiveWithInteractions) as u64,
            self.bridge.n1 as u64,
            self.bridge.n2 as u64,
        ])
    }

    fn local_score(&self, node: usize, parents: &[usize]) -> Result<f64> {
        let y = nalgebra::DVector::from_vec(self.dataset.column(node));
        let z = self.dataset.columns(parents);
        let model = GpModel::new(y, z, self.kernel, self.priors)
            .map_err(|e| e.with_score_context(node, parents))?;
        let seed = pair_seed(self.seed, node, parents, ScoreKind::Bridge);
        let res = gp_bridge_log_score(&model, &self.bridge, seed)
            .map_err(|e| e.with_score_context(node, parents))?;
        Ok(res.log_ml)
    }
}

/// Closed-form BGe score.
pub struct BgeScorer {
    stats: BgeSuffStats,
    n_nodes: usize,
    fingerprint: u64,
}

impl BgeScorer {
    pub fn new(dataset: &Dataset, params: BgeParams) -> Result<BgeScorer> {
        let std = dataset.standardized()?;
        let fingerprint = mix_seed(&[
            std.fingerprint(),
            params.alpha_mu.to_bits(),
            params.alpha_w.to_bits(),
            params.t_scale.to_bits(),
            params.nu.to_bits(),
        ]);
        Ok(BgeScorer {
            stats: BgeSuffStats::new(&std, params)?,
            n_nodes: std.n_nodes(),
            fingerprint,
        })
    }
}

impl LocalScorer for BgeScorer {
    fn kind(&self) -> ScoreKind {
        ScoreKind::Bge
    }

    fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    fn local_score(&self, node: usize, parents: &[usize]) -> Result<f64> {
        self.stats.local_score(node, parents)
    }
}

/// Exact (bridge) local score of one node/parent-set pair as a cacheable
/// entry; composes the hyperparameter sampler and the bridge estimator,
/// deterministic given the scorer's master seed.
pub fn exact_local_score(
    scorer: &GpBridgeScorer,
    node: usize,
    parents: &[usize],
    cache: Option<&ScoreCache>,
) -> Result<ScoreEntry> {
    let log_score = match cache {
        Some(c) => c.get_or_compute(node, parents, scorer)?,
        None => scorer.local_score(node, parents)?,
    };
    Ok(ScoreEntry {
        node,
        parent_set: parents.to_vec(),
        kind: ScoreKind::Bridge,
        log_score,
        seed_fingerprint: scorer.fingerprint(),
    })
}

// ---------------------------------------------------------------------------
// Score table.
// ---------------------------------------------------------------------------

/// Complete per-node table of local scores for every parent set up to
/// `max_parents`, with the graph prior folded in.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    pub n: usize,
    pub max_parents: usize,
    pub kind: ScoreKind,
    pub prior: GraphPrior,
    /// entries[node]: sorted (mask, prior-folded log score) pairs.
    entries: Vec<Vec<(u64, f64)>>,
    lookup: Vec<HashMap<u64, f64>>,
}

impl ScoreTable {
    pub fn log_score(&self, node: usize, parents_mask: u64) -> Result<f64> {
        self.lookup[node].get(&parents_mask).copied().ok_or_else(|| {
            Error::UncoveredParentSet { node, parents: mask_to_parents(parents_mask, self.n) }
        })
    }

    /// All (mask, score) pairs for a node, sorted by mask.
    pub fn node_entries(&self, node: usize) -> &[(u64, f64)] {
        &self.entries[node]
    }

    pub fn entry_count(&self) -> usize {
        self.entries.iter().map(|e| e.len()).sum()
    }

    /// Log-sum-exp of scores over parent sets that are subsets of
    /// `allowed` and additionally intersect `required` (when nonzero).
    /// The empty set satisfies only a zero `required` mask.
    pub fn log_sum_over_subsets(&self, node: usize, allowed: u64, required: u64) -> f64 {
        let terms: Vec<f64> = self.entries[node]
            .iter()
            .filter(|(m, _)| m & !allowed == 0 && (required == 0 || m & required != 0))
            .map(|&(_, s)| s)
            .collect();
        log_sum_exp(&terms)
    }
}

/// Enumerate subsets of `candidates` with size <= max_size.
fn subsets_up_to(candidates: &[usize], max_size: usize) -> Vec<Vec<usize>> {
    fn rec(candidates: &[usize], from: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        if left == 0 {
            return;
        }
        for i in from..candidates.len() {
            cur.push(candidates[i]);
            rec(candidates, i + 1, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(candidates, 0, max_size, &mut Vec::new(), &mut out);
    out
}

/// Compute one ScoreEntry per (node, parent set), |parent set| <=
/// max_parents, in parallel; the edge-penalty prior folds into each local
/// score. Any individual failure aborts the build naming the pair.
pub fn build_score_table(
    scorer: &dyn LocalScorer,
    max_parents: usize,
    prior: GraphPrior,
    cache: Option<&ScoreCache>,
    parallelism: usize,
) -> Result<ScoreTable> {
    let n = scorer.n_nodes();
    if max_parents > n.saturating_sub(1) {
        return Err(Error::InvalidArgument(format!(
            "max_parents {max_parents} exceeds n-1 = {}",
            n - 1
        )));
    }
    let mut pairs: Vec<(usize, Vec<usize>)> = Vec::new();
    for node in 0..n {
        let candidates: Vec<usize> = (0..n).filter(|&j| j != node).collect();
        for subset in subsets_up_to(&candidates, max_parents) {
            pairs.push((node, subset));
        }
    }

    let compute = |(node, parents): &(usize, Vec<usize>)| -> Result<(usize, u64, f64)> {
        let raw = match cache {
            Some(c) => c.get_or_compute(*node, parents, scorer)?,
            None => scorer.local_score(*node, parents)?,
        };
        Ok((*node, parents_to_mask(parents), raw + prior.local_term(parents.len())))
    };

    let results: Result<Vec<(usize, u64, f64)>> = if parallelism == 1 {
        pairs.iter().map(compute).collect()
    } else if parallelism == 0 {
        pairs.par_iter().map(compute).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| pairs.par_iter().map(compute).collect())
    };

    let mut entries: Vec<Vec<(u64, f64)>> = vec![Vec::new(); n];
    for (node, mask, score) in results? {
        entries[node].push((mask, score));
    }
    let mut lookup = Vec::with_capacity(n);
    for e in &mut entries {
        e.sort_unstable_by_key(|&(m, _)| m);
        lookup.push(e.iter().cloned().collect());
    }
    Ok(ScoreTable {
        n,
        max_parents,
        kind: scorer.kind(),
        prior,
        entries,
        lookup,
    })
}

/// Sum of local scores of a DAG's parent sets (prior already folded).
pub fn dag_log_posterior(dag: &Dag, table: &ScoreTable) -> Result<f64> {
    if dag.n() != table.n {
        return Err(Error::DimensionMismatch(format!(
            "DAG on {} nodes vs table for {}",
            dag.n(),
            table.n
        )));
    }
    let mut total = 0.0;
    for v in 0..dag.n() {
        total += table.log_score(v, dag.parent_mask(v))?;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Persistent score cache.
// ---------------------------------------------------------------------------

const CACHE_MAGIC: &[u8; 8] = b"GPNSCORE";
const CACHE_VERSION: u32 = 1;
const RECORD_LEN: usize = 2 + 8 + 1 + 8 + 8;

struct CacheInner {
    map: HashMap<(u16, u64, u8, u64), f64>,
    file: std::fs::File,
}

/// Append-only persistent cache of local scores.
pub struct ScoreCache {
    path: PathBuf,
    inner: Mutex<CacheInner>,
}

impl ScoreCache {
    /// Open or create a cache file, loading all intact records.
    pub fn open(path: &Path) -> Result<ScoreCache> {
        let mut file = std::fs::OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let mut map = HashMap::new();
        if bytes.is_empty() {
            file.write_all(CACHE_MAGIC)?;
            file.write_all(&CACHE_VERSION.to_le_bytes())?;
            file.flush()?;
        } else if bytes.len() < 12 || &bytes[..8] != CACHE_MAGIC {
            log::warn!("score cache {path:?} has a bad header; starting fresh");
            file.set_len(0)?;
            file.seek(std::io::SeekFrom::Start(0))?;
            file.write_all(CACHE_MAGIC)?;
            file.write_all(&CACHE_VERSION.to_le_bytes())?;
            file.flush()?;
        } else {
            let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
            if version != CACHE_VERSION {
                return Err(Error::InvalidArgument(format!(
                    "score cache version {version} unsupported (expected {CACHE_VERSION})"
                )));
            }
            let body = &bytes[12..];
            let whole = body.len() / RECORD_LEN * RECORD_LEN;
            if whole != body.len() {
                log::warn!(
                    "score cache {path:?} has a truncated tail of {} bytes; dropping it",
                    body.len() - whole
                );
                file.set_len((12 + whole) as u64)?;
            }
            for rec in body[..whole].chunks_exact(RECORD_LEN) {
                let node = u16::from_le_bytes(rec[0..2].try_into().unwrap());
                let mask = u64::from_le_bytes(rec[2..10].try_into().unwrap());
                let kind = rec[10];
                let fp = u64::from_le_bytes(rec[11..19].try_into().unwrap());
                let score = f64::from_le_bytes(rec[19..27].try_into().unwrap());
                if ScoreKind::from_byte(kind).is_none() || !score.is_finite() {
                    log::warn!("score cache {path:?}: skipping corrupt record");
                    continue;
                }
                map.insert((node, mask, kind, fp), score);
            }
            file.seek(std::io::SeekFrom::End(0))?;
        }
        Ok(ScoreCache { path: path.to_path_buf(), inner: Mutex::new(CacheInner { map, file }) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, node: usize, parents: &[usize], kind: ScoreKind, fingerprint: u64) -> Option<f64> {
        let key = (node as u16, parents_to_mask(parents), kind.to_byte(), fingerprint);
        self.inner.lock().unwrap().map.get(&key).copied()
    }

    pub fn insert(&self, node: usize, parents: &[usize], kind: ScoreKind, fingerprint: u64, score: f64) -> Result<()> {
        let mask = parents_to_mask(parents);
        let mut inner = self.inner.lock().unwrap();
        let mut rec = Vec::with_capacity(RECORD_LEN);
        rec.extend_from_slice(&(node as u16).to_le_bytes());
        rec.extend_from_slice(&mask.to_le_bytes());
        rec.push(kind.to_byte());
        rec.extend_from_slice(&fingerprint.to_le_bytes());
        rec.extend_from_slice(&score.to_le_bytes());
        inner.file.write_all(&rec)?;
        inner.file.flush()?;
        inner.map.insert((node as u16, mask, kind.to_byte(), fingerprint), score);
        Ok(())
    }

    /// Cached entry if present (matching kind and fingerprint), else
    /// compute, persist and return. The lock is not held during compute.
    pub fn get_or_compute(&self, node: usize, parents: &[usize], scorer: &dyn LocalScorer) -> Result<f64> {
        let kind = scorer.kind();
        let fp = scorer.fingerprint();
        if let Some(v) = self.get(node, parents, kind, fp) {
            return Ok(v);
        }
        let v = scorer.local_score(node, parents)?;
        self.insert(node, parents, kind, fp, v)?;
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn random_dataset(n_obs: usize, n_nodes: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let values = DMatrix::from_fn(n_obs, n_nodes, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        Dataset::new(values, crate::dag::default_labels(n_nodes)).unwrap()
    }

    struct CountingScorer {
        n: usize,
        calls: AtomicUsize,
    }

    impl LocalScorer for CountingScorer {
        fn kind(&self) -> ScoreKind {
            ScoreKind::Bge
        }
        fn n_nodes(&self) -> usize {
            self.n
        }
        fn fingerprint(&self) -> u64 {
            42
        }
        fn local_score(&self, node: usize, parents: &[usize]) -> Result<f64> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(-(node as f64) - parents.len() as f64)
        }
    }

    #[test]
    fn subset_counting_matches_formula() {
        // n = 3, max_parents = 2: 3 nodes x (1 + 2 + 1) = 12 entries
        let scorer = CountingScorer { n: 3, calls: AtomicUsize::new(0) };
        let table = build_score_table(&scorer, 2, GraphPrior::Uniform, None, 1).unwrap();
        assert_eq!(table.entry_count(), 12);
        assert_eq!(scorer.calls.load(Ordering::SeqCst), 12);
    }

    #[test]
    fn edge_penalty_folds_into_scores() {
        let ds = random_dataset(20, 3, 1);
        let scorer = BgeScorer::new(&ds, BgeParams::for_nodes(3)).unwrap();
        let flat = build_score_table(&scorer, 2, GraphPrior::Uniform, None, 1).unwrap();
        let zero_gamma = build_score_table(&scorer, 2, GraphPrior::EdgePenalty { gamma: 0.0 }, None, 1).unwrap();
        let penalized = build_score_table(&scorer, 2, GraphPrior::EdgePenalty { gamma: 0.7 }, None, 1).unwrap();
        for node in 0..3 {
            for &(mask, s) in flat.node_entries(node) {
                assert_eq!(zero_gamma.log_score(node, mask).unwrap(), s);
                let k = mask.count_ones() as f64;
                assert_abs_diff_eq!(
                    penalized.log_score(node, mask).unwrap(),
                    s - 0.7 * k,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn dag_posterior_decomposability() {
        let ds = random_dataset(30, 3, 5);
        let scorer = BgeScorer::new(&ds, BgeParams::for_nodes(3)).unwrap();
        let table = build_score_table(&scorer, 2, GraphPrior::Uniform, None, 0).unwrap();

        let empty = Dag::empty(3);
        let sum_empty: f64 = (0..3).map(|v| table.log_score(v, 0).unwrap()).sum();
        assert_abs_diff_eq!(dag_log_posterior(&empty, &table).unwrap(), sum_empty, epsilon = 1e-12);

        // adding one edge changes exactly one summand
        let with_edge = Dag::from_edges(3, &[(0, 1)]).unwrap();
        let delta = dag_log_posterior(&with_edge, &table).unwrap() - sum_empty;
        let local = table.log_score(1, 1).unwrap() - table.log_score(1, 0).unwrap();
        assert_abs_diff_eq!(delta, local, epsilon = 1e-12);

        // all 25 DAGs equal brute-force local sums
        for d in crate::dag::enumerate_dags(3).unwrap() {
            let brute: f64 = (0..3)
                .map(|v| scorer.local_score(v, d.parents(v)).unwrap())
                .sum();
            assert_abs_diff_eq!(dag_log_posterior(&d, &table).unwrap(), brute, epsilon = 1e-12);
        }
    }

    #[test]
    fn uncovered_parent_set_is_explicit_error() {
        let scorer = CountingScorer { n: 4, calls: AtomicUsize::new(0) };
        let table = build_score_table(&scorer, 1, GraphPrior::Uniform, None, 1).unwrap();
        let wide = Dag::from_edges(4, &[(0, 3), (1, 3)]).unwrap();
        match dag_log_posterior(&wide, &table) {
            Err(Error::UncoveredParentSet { node: 3, parents }) => {
                assert_eq!(parents, vec![0, 1]);
            }
            other => panic!("expected uncovered error, got {other:?}"),
        }
    }

    #[test]
    fn bge_table_reproduces_exhaustive_scoring_n4() {
        let ds = random_dataset(40, 4, 9);
        let scorer = BgeScorer::new(&ds, BgeParams::for_nodes(4)).unwrap();
        let table = build_score_table(&scorer, 3, GraphPrior::Uniform, None, 0).unwrap();
        let dags = crate::dag::enumerate_dags(4).unwrap();
        assert_eq!(dags.len(), 543);
        for d in &dags {
            let direct: f64 = (0..4)
                .map(|v| scorer.local_score(v, d.parents(v)).unwrap())
                .sum();
            assert_abs_diff_eq!(dag_log_posterior(d, &table).unwrap(), direct, epsilon = 1e-10);
        }
    }

    #[test]
    fn cache_memoizes_and_persists() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.bin");

        {
            let cache = ScoreCache::open(&path).unwrap();
            let scorer = CountingScorer { n: 3, calls: AtomicUsize::new(0) };
            let v1 = cache.get_or_compute(1, &[0, 2], &scorer).unwrap();
            assert_eq!(scorer.calls.load(Ordering::SeqCst), 1);
            // second identical request performs zero compute calls
            let v2 = cache.get_or_compute(1, &[0, 2], &scorer).unwrap();
            assert_eq!(scorer.calls.load(Ordering::SeqCst), 1);
            assert_eq!(v1, v2);
        }

        // entries survive a fresh open
        {
            let cache = ScoreCache::open(&path).unwrap();
            assert_eq!(cache.len(), 1);
            let scorer = CountingScorer { n: 3, calls: AtomicUsize::new(0) };
            let v = cache.get_or_compute(1, &[0, 2], &scorer).unwrap();
            assert_eq!(scorer.calls.load(Ordering::SeqCst), 0);
            assert_eq!(v, -3.0);
        }
    }

    #[test]
    fn cache_distinguishes_kinds_and_fingerprints() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ScoreCache::open(&dir.path().join("c.bin")).unwrap();
        cache.insert(0, &[1], ScoreKind::Laplace, 7, -1.0).unwrap();
        cache.insert(0, &[1], ScoreKind::Bridge, 7, -2.0).unwrap();
        cache.insert(0, &[1], ScoreKind::Laplace, 8, -3.0).unwrap();
        assert_eq!(cache.get(0, &[1], ScoreKind::Laplace, 7), Some(-1.0));
        assert_eq!(cache.get(0, &[1], ScoreKind::Bridge, 7), Some(-2.0));
        assert_eq!(cache.get(0, &[1], ScoreKind::Laplace, 8), Some(-3.0));
        assert_eq!(cache.get(0, &[1], ScoreKind::Bge, 7), None);
    }

    #[test]
    fn cache_survives_truncated_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.bin");
        {
            let cache = ScoreCache::open(&path).unwrap();
            cache.insert(2, &[0], ScoreKind::Bge, 1, -5.5).unwrap();
        }
        // corrupt: append half a record
        {
            let mut f = std::fs::OpenOptions::new().append(true).open(&path).unwrap();
            f.write_all(&[1, 2, 3, 4, 5]).unwrap();
        }
        let cache = ScoreCache::open(&path).unwrap();
        assert_eq!(cache.get(2, &[0], ScoreKind::Bge, 1), Some(-5.5));
        // and the file is usable for further writes
        cache.insert(1, &[], ScoreKind::Bge, 1, -0.25).unwrap();
        drop(cache);
        let reopened = ScoreCache::open(&path).unwrap();
        assert_eq!(reopened.len(), 2);
    }

    #[test]
    fn subsets_enumeration_counts() {
        let c = [0usize, 1, 2, 4];
        assert_eq!(subsets_up_to(&c, 0).len(), 1);
        assert_eq!(subsets_up_to(&c, 1).len(), 5);
        assert_eq!(subsets_up_to(&c, 2).len(), 11);
        assert_eq!(subsets_up_to(&c, 4).len(), 16);
        // no duplicates
        let all = subsets_up_to(&c, 3);
        let set: std::collections::HashSet<Vec<usize>> = all.iter().cloned().collect();
        assert_eq!(set.len(), all.len());
    }

    #[test]
    fn log_sum_over_subsets_matches_bruteforce() {
        let ds = random_dataset(15, 4, 3);
        let scorer = BgeScorer::new(&ds, BgeParams::for_nodes(4)).unwrap();
        let table = build_score_table(&scorer, 2, GraphPrior::Uniform, None, 1).unwrap();
        let allowed = 0b1010u64; // nodes 1 and 3
        let direct: Vec<f64> = table
            .node_entries(0)
            .iter()
            .filter(|(m, _)| m & !allowed == 0)
            .map(|&(_, s)| s)
            .collect();
        assert_abs_diff_eq!(
            table.log_sum_over_subsets(0, allowed, 0),
            log_sum_exp(&direct),
            epsilon = 1e-12
        );
        // with a required mask
        let req = 0b1000u64;
        let with_req: Vec<f64> = table
            .node_entries(0)
            .iter()
            .filter(|(m, _)| m & !allowed == 0 && m & req != 0)
            .map(|&(_, s)| s)
            .collect();
        assert_abs_diff_eq!(
            table.log_sum_over_subsets(0, allowed, req),
            log_sum_exp(&with_req),
            epsilon = 1e-12
        );
    }
}
