//! Batch experiment studies, each writing one tidy CSV (a row per
//! replicate x condition) ready for external plotting. Rows for failed
//! conditions are kept with an error status so a long sweep survives
//! individual failures.

use super::commands::{enumerate_exact, evaluate_weighted, sample_weighted, Manifest};
use super::{ExperimentConfig, SamplerChoice, ScoreChoice};
use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::inference::{estimated_dag_posterior, WeightedDagSample};
use crate::metrics::{equivalence_gap, reverse_kl, ReversalCost};
use crate::score::{LocalScorer, ScoreCache};
use crate::synth::{gen_observations, sample_ground_truth, Dataset};
use crate::util::mix_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct ExperimentOutputs {
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub n_rows: usize,
}

const ESHD_LAMBDAS: [f64; 3] = [0.0, 0.5, 1.0];
const EQUIVALENCE_LAMBDAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
const KL_SAMPLE_GRID: [usize; 3] = [100, 1_000, 10_000];
const ROC_GAMMA_GRID: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];
const ROC_T_SCALE_GRID: [f64; 5] = [0.01, 0.1, 0.5, 1.0, 10.0];

/// The four sampler/score combinations compared in the sweeps.
const METHODS: [(ScoreChoice, SamplerChoice); 4] = [
    (ScoreChoice::Laplace, SamplerChoice::Partition),
    (ScoreChoice::Laplace, SamplerChoice::Order),
    (ScoreChoice::Bge, SamplerChoice::Partition),
    (ScoreChoice::Bge, SamplerChoice::Order),
];

fn method_name(score: ScoreChoice, sampler: SamplerChoice) -> String {
    let s = match score {
        ScoreChoice::Laplace => "gp",
        ScoreChoice::Bridge => "gp-bridge",
        ScoreChoice::Bge => "bge",
    };
    let k = match sampler {
        SamplerChoice::Structure => "structure",
        SamplerChoice::Order => "order",
        SamplerChoice::Partition => "partition",
    };
    format!("{s}-{k}")
}

/// Generate the ground truth and dataset for one replicate condition.
fn replicate_data(cfg: &ExperimentConfig, lambda: f64, replicate: usize) -> Result<(Dag, Dataset)> {
    let mut c = cfg.clone();
    c.lambda = lambda;
    c.seed = mix_seed(&[cfg.seed, 0xda7a, lambda.to_bits(), replicate as u64]);
    let synth = c.synth_config();
    let mut rng = ChaCha12Rng::seed_from_u64(c.seed);
    let dag = crate::dag::sample_erdos_renyi(c.n_nodes, c.edge_prob, &mut rng)?;
    let truth = sample_ground_truth(dag, &synth, &mut rng)?;
    let data = gen_observations(&truth, &synth, &mut rng)?;
    Ok((truth.dag, data))
}

fn run_study(
    name: &str,
    cfg: &ExperimentConfig,
    cache_path: Option<&Path>,
    parallelism: usize,
) -> Result<(String, Vec<String>)> {
    let cache = match cache_path {
        Some(p) => Some(ScoreCache::open(p)?),
        None => None,
    };
    let cache = cache.as_ref();
    match name {
        "eshd-sweep" => eshd_sweep(cfg, cache, parallelism),
        "kl-convergence" => kl_convergence(cfg, cache, parallelism),
        "equivalence" => equivalence_study(cfg, cache, parallelism),
        "roc-sweep" => roc_sweep(cfg, cache, parallelism),
        other => Err(Error::InvalidArgument(format!(
            "unknown experiment {other:?} (eshd-sweep, kl-convergence, equivalence, roc-sweep)"
        ))),
    }
}

/// Run a named study and write its CSV plus a manifest.
pub fn cmd_experiment(
    name: &str,
    cfg: &ExperimentConfig,
    cache_path: Option<&Path>,
    parallelism: usize,
) -> Result<ExperimentOutputs> {
    cfg.validate()?;
    let out = Path::new(&cfg.out_dir);
    std::fs::create_dir_all(out)?;
    let (header, rows) = run_study(name, cfg, cache_path, parallelism)?;
    let csv_path = out.join(format!("{name}.csv"));
    let mut body = String::with_capacity(rows.len() * 64);
    body.push_str(&header);
    body.push('\n');
    for r in &rows {
        body.push_str(r);
        body.push('\n');
    }
    std::fs::write(&csv_path, body)?;

    let manifest_path = out.join("manifest.json");
    let mut inputs = BTreeMap::new();
    if let Some(p) = cache_path {
        inputs.insert("cache".into(), p.display().to_string());
    }
    super::commands::write_manifest(
        &manifest_path,
        &Manifest {
            command: format!("experiment:{name}"),
            config: cfg.clone(),
            inputs,
            outputs: BTreeMap::from([("csv".into(), csv_path.display().to_string())]),
            linear_mode: cfg.lambda == 0.0,
        },
    )?;
    Ok(ExperimentOutputs { csv_path, manifest_path, n_rows: rows.len() })
}

/// E-SHD of each method across lambda values and replicates.
fn eshd_sweep(
    cfg: &ExperimentConfig,
    cache: Option<&ScoreCache>,
    parallelism: usize,
) -> Result<(String, Vec<String>)> {
    let conditions: Vec<(f64, usize)> = ESHD_LAMBDAS
        .iter()
        .flat_map(|&l| (0..cfg.replicates).map(move |r| (l, r)))
        .collect();

    let eval_one = |&(lambda, rep): &(f64, usize)| -> Vec<String> {
        let mut rows = Vec::new();
        let data = replicate_data(cfg, lambda, rep);
        let (truth, data) = match data {
            Ok(x) => x,
            Err(e) => {
                for (score, sampler) in METHODS {
                    rows.push(format!(
                        "eshd-sweep,{lambda},{rep},{},,,,,,\"error: {e}\"",
                        method_name(score, sampler)
                    ));
                }
                return rows;
            }
        };
        for (score, sampler) in METHODS {
            let mut c = cfg.clone();
            c.lambda = lambda;
            c.seed = mix_seed(&[cfg.seed, 0xe5d, lambda.to_bits(), rep as u64]);
            c.score = score;
            c.sampler = sampler;
            let row = sample_weighted(&c, &data, cache, 1)
                .and_then(|(weighted, diag)| {
                    let report =
                        evaluate_weighted(&weighted, Some(&truth), None, ReversalCost::One)?;
                    Ok(format!(
                        "eshd-sweep,{lambda},{rep},{},{},{},{},{},{},ok",
                        method_name(score, sampler),
                        report.e_shd,
                        report.e_tp,
                        report.e_fp,
                        diag.unique_dags,
                        report.effective_sample_size,
                    ))
                })
                .unwrap_or_else(|e| {
                    format!(
                        "eshd-sweep,{lambda},{rep},{},,,,,,\"error: {e}\"",
                        method_name(score, sampler)
                    )
                });
            rows.push(row);
        }
        rows
    };

    let rows: Vec<String> = if parallelism == 1 {
        conditions.iter().flat_map(|c| eval_one(c)).collect()
    } else {
        conditions.par_iter().map(eval_one).collect::<Vec<_>>().into_iter().flatten().collect()
    };
    Ok((
        "experiment,lambda,replicate,method,e_shd,e_tp,e_fp,unique_dags,ess,status".into(),
        rows,
    ))
}

/// Reverse KL to the enumerated bridge posterior as a function of the
/// number of recorded samples M (n <= 4).
fn kl_convergence(
    cfg: &ExperimentConfig,
    cache: Option<&ScoreCache>,
    parallelism: usize,
) -> Result<(String, Vec<String>)> {
    if cfg.n_nodes > 4 {
        return Err(Error::NodeCountOutOfRange(cfg.n_nodes, 2, 4));
    }
    let (_truth, data) = replicate_data(cfg, cfg.lambda, 0)?;

    // ground truth: enumerate every DAG under the bridge score
    let mut bridge_cfg = cfg.clone();
    bridge_cfg.score = ScoreChoice::Bridge;
    bridge_cfg.max_parents = cfg.n_nodes - 1;
    let exact = enumerate_exact(&bridge_cfg, &data, cache, parallelism)?;
    let exact_probs = exact.probabilities()?;

    let m_max = *KL_SAMPLE_GRID.iter().max().unwrap();
    let work: Vec<usize> = (0..cfg.replicates).collect();

    let eval_one = |&rep: &usize| -> Vec<String> {
        let mut rows = Vec::new();
        // GP two-phase run at the largest M; prefixes give the smaller M
        let mut gp_cfg = cfg.clone();
        gp_cfg.score = ScoreChoice::Laplace;
        gp_cfg.sampler = SamplerChoice::Partition;
        gp_cfg.max_parents = cfg.n_nodes - 1;
        gp_cfg.m_samples = m_max;
        gp_cfg.seed = mix_seed(&[cfg.seed, 0x817, rep as u64]);
        let gp_run = sample_weighted(&gp_cfg, &data, cache, 1);

        let mut bge_cfg = gp_cfg.clone();
        bge_cfg.score = ScoreChoice::Bge;
        let bge_run = sample_weighted(&bge_cfg, &data, cache, 1);

        for &m in &KL_SAMPLE_GRID {
            match &gp_run {
                Ok((weighted, _)) => {
                    let prefix = &weighted[..m.min(weighted.len())];
                    let kl_weighted = estimated_dag_posterior(prefix)
                        .and_then(|est| reverse_kl(&est, &exact_probs));
                    let flat: Vec<WeightedDagSample> = prefix
                        .iter()
                        .map(|w| WeightedDagSample { dag: w.dag.clone(), log_q: 0.0, log_p: 0.0 })
                        .collect();
                    let kl_laplace = estimated_dag_posterior(&flat)
                        .and_then(|est| reverse_kl(&est, &exact_probs));
                    rows.push(match kl_weighted {
                        Ok(v) => format!("kl-convergence,{m},{rep},gp-weighted,{v},ok"),
                        Err(e) => format!("kl-convergence,{m},{rep},gp-weighted,,\"error: {e}\""),
                    });
                    rows.push(match kl_laplace {
                        Ok(v) => format!("kl-convergence,{m},{rep},gp-laplace,{v},ok"),
                        Err(e) => format!("kl-convergence,{m},{rep},gp-laplace,,\"error: {e}\""),
                    });
                }
                Err(e) => {
                    rows.push(format!("kl-convergence,{m},{rep},gp-weighted,,\"error: {e}\""));
                    rows.push(format!("kl-convergence,{m},{rep},gp-laplace,,\"error: {e}\""));
                }
            }
            rows.push(match &bge_run {
                Ok((weighted, _)) => {
                    let prefix = &weighted[..m.min(weighted.len())];
                    match estimated_dag_posterior(prefix).and_then(|est| reverse_kl(&est, &exact_probs)) {
                        Ok(v) => format!("kl-convergence,{m},{rep},bge,{v},ok"),
                        Err(e) => format!("kl-convergence,{m},{rep},bge,,\"error: {e}\""),
                    }
                }
                Err(e) => format!("kl-convergence,{m},{rep},bge,,\"error: {e}\""),
            });
        }
        rows
    };

    let rows: Vec<String> = if parallelism == 1 {
        work.iter().flat_map(|r| eval_one(r)).collect()
    } else {
        work.par_iter().map(eval_one).collect::<Vec<_>>().into_iter().flatten().collect()
    };
    Ok(("experiment,m,replicate,method,reverse_kl,status".into(), rows))
}

/// Forward-vs-backward log-score gap on the 5-node chain across lambda.
fn equivalence_study(
    cfg: &ExperimentConfig,
    cache: Option<&ScoreCache>,
    parallelism: usize,
) -> Result<(String, Vec<String>)> {
    let conditions: Vec<(f64, usize)> = EQUIVALENCE_LAMBDAS
        .iter()
        .flat_map(|&l| (0..cfg.replicates).map(move |r| (l, r)))
        .collect();

    let eval_one = |&(lambda, rep): &(f64, usize)| -> String {
        match chain_gap(cfg, lambda, rep, cache) {
            Ok(gap) => format!("equivalence,{lambda},{rep},{gap},ok"),
            Err(e) => format!("equivalence,{lambda},{rep},,\"error: {e}\""),
        }
    };

    let rows: Vec<String> = if parallelism == 1 {
        conditions.iter().map(eval_one).collect()
    } else {
        conditions.par_iter().map(eval_one).collect()
    };
    Ok(("experiment,lambda,replicate,gap,status".into(), rows))
}

/// The gap statistic for one (lambda, seed): data from the forward
/// 5-node chain, score via the configured GP estimator.
pub fn chain_gap(
    cfg: &ExperimentConfig,
    lambda: f64,
    replicate: usize,
    cache: Option<&ScoreCache>,
) -> Result<f64> {
    let chain = Dag::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)])?;
    let mut c = cfg.clone();
    c.n_nodes = 5;
    c.lambda = lambda;
    c.seed = mix_seed(&[cfg.seed, 0xc4a1, lambda.to_bits(), replicate as u64]);
    let synth = c.synth_config();
    let mut rng = ChaCha12Rng::seed_from_u64(c.seed);
    let truth = sample_ground_truth(chain.clone(), &synth, &mut rng)?;
    let data = gen_observations(&truth, &synth, &mut rng)?;

    match c.score {
        ScoreChoice::Bge => {
            let scorer = crate::score::BgeScorer::new(&data, crate::bge::BgeParams::for_nodes(5))?;
            equivalence_gap(&chain, |v, pa| scorer.local_score(v, pa))
        }
        ScoreChoice::Laplace => {
            let scorer = crate::score::GpLaplaceScorer::new(
                &data,
                c.kernel,
                crate::gp::PriorSpec::default(),
                crate::opt::OptConfig::default(),
                c.seed,
            )?;
            equivalence_gap(&chain, |v, pa| match cache {
                Some(ca) => ca.get_or_compute(v, pa, &scorer),
                None => scorer.local_score(v, pa),
            })
        }
        ScoreChoice::Bridge => {
            let scorer = super::commands::make_bridge_scorer(&c, &data)?;
            equivalence_gap(&chain, |v, pa| match cache {
                Some(ca) => ca.get_or_compute(v, pa, &scorer),
                None => scorer.local_score(v, pa),
            })
        }
    }
}

/// TPR/FPRp trade-off: sweep the edge-penalty gamma for the GP method and
/// the prior scale t for BGe.
fn roc_sweep(
    cfg: &ExperimentConfig,
    cache: Option<&ScoreCache>,
    parallelism: usize,
) -> Result<(String, Vec<String>)> {
    #[derive(Clone, Copy)]
    enum Hyper {
        Gamma(f64),
        TScale(f64),
    }
    let mut conditions: Vec<(Hyper, usize)> = Vec::new();
    for &g in &ROC_GAMMA_GRID {
        for r in 0..cfg.replicates {
            conditions.push((Hyper::Gamma(g), r));
        }
    }
    for &t in &ROC_T_SCALE_GRID {
        for r in 0..cfg.replicates {
            conditions.push((Hyper::TScale(t), r));
        }
    }

    let eval_one = |&(hyper, rep): &(Hyper, usize)| -> String {
        let lambda = cfg.lambda;
        let (method, hyper_name, hyper_value) = match hyper {
            Hyper::Gamma(g) => ("gp-partition", "gamma", g),
            Hyper::TScale(t) => ("bge-partition", "t_scale", t),
        };
        let result = (|| -> Result<String> {
            let (truth, data) = replicate_data(cfg, lambda, rep)?;
            if truth.edge_count() == 0 {
                return Ok(format!(
                    "roc-sweep,{method},{hyper_name},{hyper_value},{lambda},{rep},,,,\"skipped: empty true graph\""
                ));
            }
            let mut c = cfg.clone();
            c.lambda = lambda;
            c.seed = mix_seed(&[cfg.seed, 0x40c, rep as u64, hyper_value.to_bits()]);
            c.sampler = SamplerChoice::Partition;
            let weighted = match hyper {
                Hyper::Gamma(g) => {
                    c.score = ScoreChoice::Laplace;
                    c.gamma = g;
                    sample_weighted(&c, &data, cache, 1)?.0
                }
                Hyper::TScale(t) => {
                    c.score = ScoreChoice::Bge;
                    let scorer =
                        crate::score::BgeScorer::new(&data, crate::bge::BgeParams::with_t_scale(c.n_nodes, t))?;
                    let table = crate::score::build_score_table(
                        &scorer,
                        c.max_parents,
                        c.graph_prior(),
                        cache,
                        1,
                    )?;
                    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(&[c.seed, 0x5a17]));
                    let (samples, _) = super::commands::run_sampler(&c, &table, &mut rng)?;
                    samples
                        .into_iter()
                        .map(|(dag, lp)| WeightedDagSample { dag, log_q: lp, log_p: lp })
                        .collect()
                }
            };
            let report = evaluate_weighted(&weighted, Some(&truth), None, ReversalCost::One)?;
            Ok(format!(
                "roc-sweep,{method},{hyper_name},{hyper_value},{lambda},{rep},{},{},{},ok",
                report.tpr, report.fprp, report.e_shd
            ))
        })();
        result.unwrap_or_else(|e| {
            format!(
                "roc-sweep,{method},{hyper_name},{hyper_value},{lambda},{rep},,,,\"error: {e}\""
            )
        })
    };

    let rows: Vec<String> = if parallelism == 1 {
        conditions.iter().map(eval_one).collect()
    } else {
        conditions.par_iter().map(eval_one).collect()
    };
    Ok((
        "experiment,method,hyper_name,hyper_value,lambda,replicate,tpr,fprp,e_shd,status".into(),
        rows,
    ))
}
