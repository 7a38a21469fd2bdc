//! Pipeline commands: data generation, DAG sampling with bridge
//! re-scoring, evaluation, and exact enumeration. Every command writes a
//! manifest with its resolved configuration, so a run can be repeated
//! from its outputs alone; outputs are byte-reproducible from
//! (config, seed) on a cold cache.

use super::{ExperimentConfig, SamplerChoice, ScoreChoice};
use crate::dag::{Dag, DagKey};
use crate::error::{Error, Result};
use crate::evidence::BridgeConfig;
use crate::gp::{KernelKind, PriorSpec};
use crate::inference::{
    effective_sample_size, estimated_dag_posterior, exact_posterior_from_table, feature_posterior,
    rescore_unique, FeatureQuery, WeightedDagSample,
};
use crate::metrics::{expected_statistic, reverse_kl, tp_fp_counts, tpr_fprp, EvalReport, ReversalCost};
use crate::opt::OptConfig;
use crate::samplers::{
    order_mcmc, partition_mcmc, sample_dag_given_order, structure_mcmc, OrderOpts, PartitionOpts,
    StructureOpts,
};
use crate::score::{
    build_score_table, dag_log_posterior, BgeScorer, GpBridgeScorer, GpLaplaceScorer, LocalScorer,
    ScoreCache, ScoreTable,
};
use crate::synth::{gen_observations, load_csv, sample_ground_truth, Dataset};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

/// Manifest written next to every command's outputs.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    /// True when lambda = 0 selected the linear generating model.
    #[serde(default)]
    pub linear_mode: bool,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    write_json(path, manifest)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create output directory {dir:?}: {e}")))
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct GenerateOutputs {
    pub truth_path: PathBuf,
    pub params_path: PathBuf,
    pub data_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Draw a ground-truth network and dataset, writing the DAG in text form,
/// a JSON sidecar of the generating parameters, the dataset CSV and a
/// manifest.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<GenerateOutputs> {
    cfg.validate()?;
    let out = Path::new(&cfg.out_dir);
    ensure_dir(out)?;

    let synth_cfg = cfg.synth_config();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let dag = crate::dag::sample_erdos_renyi(cfg.n_nodes, cfg.edge_prob, &mut rng)?;
    let truth = sample_ground_truth(dag, &synth_cfg, &mut rng)?;
    let dataset = gen_observations(&truth, &synth_cfg, &mut rng)?;

    let truth_path = out.join("truth.dag");
    std::fs::write(&truth_path, truth.dag.to_string())?;
    let params_path = out.join("truth_params.json");
    write_json(&params_path, &truth)?;
    let data_path = out.join("data.csv");
    dataset.write_csv_path(&data_path)?;

    let manifest_path = out.join("manifest.json");
    let manifest = Manifest {
        command: "generate".into(),
        config: cfg.clone(),
        inputs: BTreeMap::new(),
        outputs: BTreeMap::from([
            ("truth".into(), truth_path.display().to_string()),
            ("params".into(), params_path.display().to_string()),
            ("data".into(), data_path.display().to_string()),
        ]),
        linear_mode: cfg.lambda == 0.0,
    };
    write_json(&manifest_path, &manifest)?;

    Ok(GenerateOutputs { truth_path, params_path, data_path, manifest_path })
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

/// One line of the weighted-sample JSON-lines file.
#[derive(Debug, Serialize, Deserialize)]
pub struct WeightedRecord {
    pub n: usize,
    pub dag_key: String,
    pub edges: Vec<(usize, usize)>,
    pub log_q: f64,
    pub log_p: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    pub score: ScoreChoice,
    pub sampler: SamplerChoice,
    pub acceptance_rate: f64,
    pub n_samples: usize,
    pub unique_dags: usize,
    pub effective_sample_size: f64,
    pub laplace_entries: usize,
    pub rescored_pairs: usize,
}

#[derive(Debug)]
pub struct SampleOutputs {
    pub weighted_path: PathBuf,
    pub diagnostics_path: PathBuf,
    pub manifest_path: PathBuf,
    pub diagnostics: SampleDiagnostics,
}

pub fn write_weighted_samples(path: &Path, weighted: &[WeightedDagSample]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for w in weighted {
        let rec = WeightedRecord {
            n: w.dag.n(),
            dag_key: w.dag.key().to_hex(),
            edges: w.dag.edges(),
            log_q: w.log_q,
            log_p: w.log_p,
        };
        serde_json::to_writer(&mut f, &rec)?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_weighted_samples(path: &Path) -> Result<Vec<WeightedDagSample>> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: WeightedRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Evaluation(format!("weighted samples line {}: {e}", i + 1)))?;
        let dag = Dag::from_edges(rec.n, &rec.edges)?;
        if dag.key().to_hex() != rec.dag_key {
            return Err(Error::Evaluation(format!(
                "weighted samples line {}: dag_key does not match edges",
                i + 1
            )));
        }
        out.push(WeightedDagSample { dag, log_q: rec.log_q, log_p: rec.log_p });
    }
    if out.is_empty() {
        return Err(Error::Evaluation("weighted sample file is empty".into()));
    }
    Ok(out)
}

/// Run the configured sampler against its score table, recording exactly
/// `m_samples` DAG draws.
pub fn run_sampler(
    cfg: &ExperimentConfig,
    table: &ScoreTable,
    rng: &mut ChaCha12Rng,
) -> Result<(Vec<(Dag, f64)>, f64)> {
    let burn_frac = 0.2;
    let m = cfg.m_samples;
    match cfg.sampler {
        SamplerChoice::Structure => {
            let thin = 10 * cfg.n_nodes;
            let n_iters = ((m * thin) as f64 / (1.0 - burn_frac)).ceil() as usize + thin;
            let out = structure_mcmc(
                table,
                n_iters,
                &Dag::empty(cfg.n_nodes),
                &StructureOpts::default(),
                rng,
            )?;
            let mut samples = out.samples;
            samples.truncate(m);
            Ok((samples, out.acceptance_rate))
        }
        SamplerChoice::Order => {
            let n_iters = (m as f64 / (1.0 - burn_frac)).ceil() as usize + 1;
            let out = order_mcmc(table, n_iters, &OrderOpts::default(), rng)?;
            let mut samples = Vec::with_capacity(m);
            for (order, _) in out.samples.iter().take(m) {
                let dag = sample_dag_given_order(order, table, rng)?;
                let lp = dag_log_posterior(&dag, table)?;
                samples.push((dag, lp));
            }
            Ok((samples, out.acceptance_rate))
        }
        SamplerChoice::Partition => {
            let n_iters = (m as f64 / (1.0 - burn_frac)).ceil() as usize + 1;
            let out = partition_mcmc(table, n_iters, &PartitionOpts::default(), rng)?;
            let mut samples = out.samples;
            samples.truncate(m);
            Ok((samples, out.acceptance_rate))
        }
    }
}

/// Phase 1 (sampling under the configured score) plus phase 2 (bridge
/// re-scoring and weights) in memory.
pub fn sample_weighted(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    cache: Option<&ScoreCache>,
    parallelism: usize,
) -> Result<(Vec<WeightedDagSample>, SampleDiagnostics)> {
    cfg.validate()?;
    if dataset.n_nodes() != cfg.n_nodes {
        return Err(Error::Config(format!(
            "dataset has {} nodes but config expects {}",
            dataset.n_nodes(),
            cfg.n_nodes
        )));
    }
    let prior = cfg.graph_prior();
    let priors = PriorSpec::default();
    let mut rng = ChaCha12Rng::seed_from_u64(crate::util::mix_seed(&[cfg.seed, 0x5a17]));

    let (table, scorer_for_rescore): (ScoreTable, Option<GpBridgeScorer>) = match cfg.score {
        ScoreChoice::Bge => {
            let scorer = BgeScorer::new(dataset, crate::bge::BgeParams::for_nodes(cfg.n_nodes))?;
            (build_score_table(&scorer, cfg.max_parents, prior, cache, parallelism)?, None)
        }
        ScoreChoice::Laplace => {
            let scorer = GpLaplaceScorer::new(
                dataset,
                cfg.kernel,
                priors,
                OptConfig::default(),
                cfg.seed,
            )?;
            let table = build_score_table(&scorer, cfg.max_parents, prior, cache, parallelism)?;
            let bridge = GpBridgeScorer::new(dataset, cfg.kernel, priors, cfg.bridge_config(), cfg.seed)?;
            (table, Some(bridge))
        }
        ScoreChoice::Bridge => {
            let scorer = GpBridgeScorer::new(dataset, cfg.kernel, priors, cfg.bridge_config(), cfg.seed)?;
            (build_score_table(&scorer, cfg.max_parents, prior, cache, parallelism)?, None)
        }
    };

    let (samples, acceptance_rate) = run_sampler(cfg, &table, &mut rng)?;
    let dags: Vec<Dag> = samples.iter().map(|(d, _)| d.clone()).collect();

    let (weighted, rescored_pairs) = match &scorer_for_rescore {
        Some(bridge) => {
            let before = cache.map(|c| c.len()).unwrap_or(0);
            let weighted = rescore_unique(&dags, &table, bridge, cache)?;
            let after = cache.map(|c| c.len()).unwrap_or(0);
            (weighted, after.saturating_sub(before))
        }
        None => {
            // single-phase scores: the sampling posterior is the target
            let weighted = samples
                .iter()
                .map(|(d, lp)| WeightedDagSample { dag: d.clone(), log_q: *lp, log_p: *lp })
                .collect();
            (weighted, 0)
        }
    };

    let unique: std::collections::HashSet<DagKey> = dags.iter().map(|d| d.key()).collect();
    let ess = effective_sample_size(&weighted);
    if ess < (weighted.len() as f64) / 100.0 {
        log::warn!(
            "importance weights are degenerate: ESS {ess:.1} of {} samples",
            weighted.len()
        );
    }
    let diagnostics = SampleDiagnostics {
        score: cfg.score,
        sampler: cfg.sampler,
        acceptance_rate,
        n_samples: weighted.len(),
        unique_dags: unique.len(),
        effective_sample_size: ess,
        laplace_entries: table.entry_count(),
        rescored_pairs,
    };
    Ok((weighted, diagnostics))
}

/// Full sample command: load data, sample, re-score, write outputs.
pub fn cmd_sample(
    cfg: &ExperimentConfig,
    data_path: &Path,
    cache_path: Option<&Path>,
    parallelism: usize,
) -> Result<SampleOutputs> {
    let out = Path::new(&cfg.out_dir);
    ensure_dir(out)?;
    let dataset = load_csv(data_path, true)?;
    let cache = match cache_path {
        Some(p) => Some(ScoreCache::open(p)?),
        None => None,
    };
    let (weighted, diagnostics) = sample_weighted(cfg, &dataset, cache.as_ref(), parallelism)?;

    let weighted_path = out.join("weighted.jsonl");
    write_weighted_samples(&weighted_path, &weighted)?;
    let diagnostics_path = out.join("diagnostics.json");
    write_json(&diagnostics_path, &diagnostics)?;

    let manifest_path = out.join("manifest.json");
    write_json(
        &manifest_path,
        &Manifest {
            command: "sample".into(),
            config: cfg.clone(),
            inputs: BTreeMap::from([("data".into(), data_path.display().to_string())]),
            outputs: BTreeMap::from([
                ("weighted".into(), weighted_path.display().to_string()),
                ("diagnostics".into(), diagnostics_path.display().to_string()),
            ]),
            linear_mode: cfg.lambda == 0.0,
        },
    )?;

    Ok(SampleOutputs { weighted_path, diagnostics_path, manifest_path, diagnostics })
}

// ---------------------------------------------------------------------------
// enumerate
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct ExactPosteriorEntry {
    pub dag_key: String,
    pub edges: Vec<(usize, usize)>,
    pub log_score: f64,
    pub prob: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExactPosteriorFile {
    pub n: usize,
    pub score: ScoreChoice,
    /// Log normalization constant of the unnormalized DAG scores.
    pub log_z: f64,
    pub entries: Vec<ExactPosteriorEntry>,
}

impl ExactPosteriorFile {
    pub fn probabilities(&self) -> Result<BTreeMap<DagKey, f64>> {
        self.entries
            .iter()
            .map(|e| Ok((DagKey::from_hex(&e.dag_key)?, e.prob)))
            .collect()
    }
}

#[derive(Debug)]
pub struct EnumerateOutputs {
    pub exact_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Enumerate every structure and score it directly: the reference
/// posterior for KL comparisons. Bridge scoring is bounded at n <= 4
/// (543 DAGs of per-DAG MC cost), Laplace and BGe at n <= 5.
pub fn cmd_enumerate(
    cfg: &ExperimentConfig,
    data_path: &Path,
    cache_path: Option<&Path>,
    parallelism: usize,
) -> Result<EnumerateOutputs> {
    cfg.validate()?;
    let limit = match cfg.score {
        ScoreChoice::Bridge => 4,
        ScoreChoice::Laplace | ScoreChoice::Bge => 5,
    };
    if cfg.n_nodes > limit {
        return Err(Error::NodeCountOutOfRange(cfg.n_nodes, 1, limit));
    }
    let out = Path::new(&cfg.out_dir);
    ensure_dir(out)?;
    let dataset = load_csv(data_path, true)?;
    let cache = match cache_path {
        Some(p) => Some(ScoreCache::open(p)?),
        None => None,
    };
    let exact = enumerate_exact(cfg, &dataset, cache.as_ref(), parallelism)?;
    let exact_path = out.join("exact_posterior.json");
    write_json(&exact_path, &exact)?;
    let manifest_path = out.join("manifest.json");
    write_json(
        &manifest_path,
        &Manifest {
            command: "enumerate".into(),
            config: cfg.clone(),
            inputs: BTreeMap::from([("data".into(), data_path.display().to_string())]),
            outputs: BTreeMap::from([("exact".into(), exact_path.display().to_string())]),
            linear_mode: cfg.lambda == 0.0,
        },
    )?;
    Ok(EnumerateOutputs { exact_path, manifest_path })
}

/// Exact posterior over all DAGs for the configured score, via a full
/// (max_parents = n-1) score table.
pub fn enumerate_exact(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    cache: Option<&ScoreCache>,
    parallelism: usize,
) -> Result<ExactPosteriorFile> {
    let n = cfg.n_nodes;
    if dataset.n_nodes() != n {
        return Err(Error::Config(format!(
            "dataset has {} nodes but config expects {n}",
            dataset.n_nodes()
        )));
    }
    let priors = PriorSpec::default();
    let full_parents = n - 1;
    let prior = cfg.graph_prior();
    let table = match cfg.score {
        ScoreChoice::Bge => {
            let scorer = BgeScorer::new(dataset, crate::bge::BgeParams::for_nodes(n))?;
            build_score_table(&scorer, full_parents, prior, cache, parallelism)?
        }
        ScoreChoice::Laplace => {
            let scorer = GpLaplaceScorer::new(dataset, cfg.kernel, priors, OptConfig::default(), cfg.seed)?;
            build_score_table(&scorer, full_parents, prior, cache, parallelism)?
        }
        ScoreChoice::Bridge => {
            let scorer = GpBridgeScorer::new(dataset, cfg.kernel, priors, cfg.bridge_config(), cfg.seed)?;
            build_score_table(&scorer, full_parents, prior, cache, parallelism)?
        }
    };
    let exact = exact_posterior_from_table(&table)?;
    let probs = exact.probabilities();
    let entries: Vec<ExactPosteriorEntry> = exact
        .dags
        .iter()
        .zip(&exact.log_scores)
        .map(|(d, &s)| ExactPosteriorEntry {
            dag_key: d.key().to_hex(),
            edges: d.edges(),
            log_score: s,
            prob: probs[&d.key()],
        })
        .collect();
    Ok(ExactPosteriorFile { n, score: cfg.score, log_z: exact.log_z, entries })
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureResult {
    pub query: String,
    pub posterior: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalFile {
    pub report: EvalReport,
    pub features: Vec<FeatureResult>,
    /// Convention note: "absent" path queries report 1 - P(directed path).
    pub absence_convention: String,
}

#[derive(Debug)]
pub struct EvaluateOutputs {
    pub report_path: PathBuf,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub report: EvalReport,
    pub features: Vec<FeatureResult>,
}

/// Parse one feature query: `edge:i,j`, `path:i,j`, `no-edge:i,j`,
/// `no-path:i,j`, `cpdag-edge:i,j` with node labels or indices.
pub fn parse_feature(spec: &str, labels: Option<&[String]>) -> Result<(String, FeatureQuery, bool)> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("feature {spec:?} missing `kind:`")))?;
    let (a, b) = rest
        .split_once(',')
        .ok_or_else(|| Error::InvalidArgument(format!("feature {spec:?} needs two nodes")))?;
    let resolve = |name: &str| -> Result<usize> {
        let name = name.trim();
        if let Some(labels) = labels {
            if let Some(i) = labels.iter().position(|l| l == name) {
                return Ok(i);
            }
        }
        name.parse::<usize>().map_err(|_| {
            Error::InvalidArgument(format!("node {name:?} is neither a known label nor an index"))
        })
    };
    let from = resolve(a)?;
    let to = resolve(b)?;
    let (query, negate) = match kind {
        "edge" => (FeatureQuery::Edge { from, to }, false),
        "no-edge" => (FeatureQuery::Edge { from, to }, true),
        "path" => (FeatureQuery::DirectedPath { from, to }, false),
        "no-path" => (FeatureQuery::DirectedPath { from, to }, true),
        "cpdag-edge" => (FeatureQuery::CpdagEdge { from, to }, false),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown feature kind {other:?} (edge, no-edge, path, no-path, cpdag-edge)"
            )))
        }
    };
    Ok((spec.to_string(), query, negate))
}

/// Evaluate a weighted-sample file against a ground-truth DAG and/or an
/// exact posterior, plus optional feature queries.
pub fn cmd_evaluate(
    cfg: &ExperimentConfig,
    weighted_path: &Path,
    truth_path: Option<&Path>,
    exact_path: Option<&Path>,
    feature_specs: &[String],
    reversal_cost: ReversalCost,
) -> Result<EvaluateOutputs> {
    let out = Path::new(&cfg.out_dir);
    ensure_dir(out)?;
    let weighted = read_weighted_samples(weighted_path)?;

    let truth = match truth_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let t = Dag::parse_text(&text)?;
            if t.n() != weighted[0].dag.n() {
                return Err(Error::Evaluation(format!(
                    "truth has {} nodes but samples have {}",
                    t.n(),
                    weighted[0].dag.n()
                )));
            }
            Some(t)
        }
        None => None,
    };

    let report = evaluate_weighted(&weighted, truth.as_ref(), exact_path, reversal_cost)?;

    let labels = truth.as_ref().map(|t| t.labels().to_vec());
    let mut features = Vec::new();
    for spec in feature_specs {
        let (name, query, negate) = parse_feature(spec, labels.as_deref())?;
        let p = feature_posterior(&weighted, &query)?;
        features.push(FeatureResult {
            query: name,
            posterior: if negate { 1.0 - p } else { p },
        });
    }

    let report_path = out.join("eval.json");
    write_json(
        &report_path,
        &EvalFile {
            report: report.clone(),
            features: features.clone(),
            absence_convention: "no-path = 1 - P(directed path); use no-edge for edge absence".into(),
        },
    )?;
    let csv_path = out.join("eval.csv");
    std::fs::write(&csv_path, format!("{}\n{}\n", EvalReport::CSV_HEADER, report.csv_row()))?;

    let mut inputs = BTreeMap::from([("weighted".into(), weighted_path.display().to_string())]);
    if let Some(p) = truth_path {
        inputs.insert("truth".into(), p.display().to_string());
    }
    if let Some(p) = exact_path {
        inputs.insert("exact".into(), p.display().to_string());
    }
    let manifest_path = out.join("manifest.json");
    write_json(
        &manifest_path,
        &Manifest {
            command: "evaluate".into(),
            config: cfg.clone(),
            inputs,
            outputs: BTreeMap::from([
                ("report".into(), report_path.display().to_string()),
                ("csv".into(), csv_path.display().to_string()),
            ]),
            linear_mode: cfg.lambda == 0.0,
        },
    )?;

    Ok(EvaluateOutputs { report_path, csv_path, manifest_path, report, features })
}

/// Core evaluation of weighted samples (shared with the experiments).
pub fn evaluate_weighted(
    weighted: &[WeightedDagSample],
    truth: Option<&Dag>,
    exact_path: Option<&Path>,
    reversal_cost: ReversalCost,
) -> Result<EvalReport> {
    let est = estimated_dag_posterior(weighted)?;
    let unique: BTreeMap<DagKey, &Dag> =
        weighted.iter().map(|w| (w.dag.key(), &w.dag)).collect();
    let posterior: Vec<(Dag, f64)> = unique
        .iter()
        .map(|(k, d)| ((*d).clone(), est[k]))
        .collect();

    let (e_shd, e_tp, e_fp, tpr, fprp) = match truth {
        Some(t) => {
            let e_shd = expected_statistic(&posterior, |d| {
                Ok(crate::metrics::shd(d, t, reversal_cost)? as f64)
            })?;
            let e_tp = expected_statistic(&posterior, |d| Ok(tp_fp_counts(d, t)?.0 as f64))?;
            let e_fp = expected_statistic(&posterior, |d| Ok(tp_fp_counts(d, t)?.1 as f64))?;
            // highest-scoring sampled DAG for the point metrics
            let best = weighted
                .iter()
                .max_by(|a, b| a.log_p.partial_cmp(&b.log_p).unwrap())
                .expect("nonempty");
            let (tpr, fprp) = if t.edge_count() == 0 {
                (f64::NAN, f64::NAN)
            } else {
                tpr_fprp(&best.dag, t)?
            };
            (e_shd, e_tp, e_fp, tpr, fprp)
        }
        None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN),
    };

    let rkl = match exact_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let exact: ExactPosteriorFile = serde_json::from_str(&text)?;
            if exact.n != weighted[0].dag.n() {
                return Err(Error::Evaluation(format!(
                    "exact posterior has {} nodes but samples have {}",
                    exact.n,
                    weighted[0].dag.n()
                )));
            }
            Some(reverse_kl(&est, &exact.probabilities()?)?)
        }
        None => None,
    };

    Ok(EvalReport {
        e_shd,
        e_tp,
        e_fp,
        tpr,
        fprp,
        reverse_kl: rkl,
        n_samples: weighted.len(),
        n_unique_dags: unique.len(),
        effective_sample_size: effective_sample_size(weighted),
    })
}

/// Helpers used by the experiment harness.
pub fn make_bridge_scorer(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<GpBridgeScorer> {
    GpBridgeScorer::new(dataset, cfg.kernel, PriorSpec::default(), cfg.bridge_config(), cfg.seed)
}

pub fn bridge_local_score_fn<'a>(
    scorer: &'a GpBridgeScorer,
    cache: Option<&'a ScoreCache>,
) -> impl Fn(usize, &[usize]) -> Result<f64> + 'a {
    move |node, parents| match cache {
        Some(c) => c.get_or_compute(node, parents, scorer),
        None => scorer.local_score(node, parents),
    }
}

pub fn default_kernel() -> KernelKind {
    KernelKind::Additive
}

pub fn default_bridge() -> BridgeConfig {
    BridgeConfig::default()
}
