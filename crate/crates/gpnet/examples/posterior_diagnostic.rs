//! Top DAGs and per-edge posteriors of the GP-weighted vs BGe posterior
//! on one linear-data replicate; a scratch diagnostic.

use gpnet::cli::commands::sample_weighted;
use gpnet::cli::{ExperimentConfig, SamplerChoice, ScoreChoice};
use gpnet::dag::DagKey;
use gpnet::inference::{estimated_dag_posterior, feature_posterior, FeatureQuery};
use gpnet::synth::{gen_observations, sample_ground_truth, SynthConfig};
use gpnet::util::mix_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;

fn main() -> gpnet::Result<()> {
    let mut base = ExperimentConfig::load("desk-n6")?;
    base.m_samples = 2000;
    base.bridge_n1 = 150;
    base.bridge_n2 = 150;
    let lambda = 0.0;
    let rep = 0u64;
    let mut cfg = base.clone();
    cfg.lambda = lambda;
    cfg.seed = mix_seed(&[base.seed, lambda.to_bits(), rep]);
    let synth = SynthConfig {
        n_nodes: cfg.n_nodes,
        edge_prob: cfg.edge_prob,
        n_obs: cfg.n_obs,
        lambda,
        seed: cfg.seed,
        ..Default::default()
    };
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let dag = gpnet::dag::sample_erdos_renyi(cfg.n_nodes, cfg.edge_prob, &mut rng)?;
    let truth = sample_ground_truth(dag, &synth, &mut rng)?;
    let data = gen_observations(&truth, &synth, &mut rng)?;
    println!("true edges: {:?}", truth.dag.edges());

    for score in [ScoreChoice::Laplace, ScoreChoice::Bge] {
        let mut c = cfg.clone();
        c.score = score;
        c.sampler = SamplerChoice::Partition;
        let (weighted, diag) = sample_weighted(&c, &data, None, 0)?;
        let est = estimated_dag_posterior(&weighted)?;
        let mut ranked: Vec<(&DagKey, &f64)> = est.iter().map(|(k, v)| (k, v)).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(a.1).unwrap());
        let lookup: BTreeMap<DagKey, &gpnet::dag::Dag> =
            weighted.iter().map(|w| (w.dag.key(), &w.dag)).collect();
        println!(
            "\n=== {:?}: {} unique DAGs, ESS {:.0}",
            score, diag.unique_dags, diag.effective_sample_size
        );
        for (k, p) in ranked.iter().take(5) {
            println!("  p = {p:.3}  edges {:?}", lookup[*k].edges());
        }
        println!("  edge posteriors (true edges):");
        for (u, v) in truth.dag.edges() {
            let fwd = feature_posterior(&weighted, &FeatureQuery::Edge { from: u, to: v })?;
            let rev = feature_posterior(&weighted, &FeatureQuery::Edge { from: v, to: u })?;
            println!("    {u}->{v}: {fwd:.3} (reversed {rev:.3})");
        }
        // strongest false edges
        let mut false_edges = Vec::new();
        for u in 0..6 {
            for v in 0..6 {
                if u != v && !truth.dag.has_edge(u, v) && !truth.dag.has_edge(v, u) {
                    let p = feature_posterior(&weighted, &FeatureQuery::Edge { from: u, to: v })?;
                    false_edges.push(((u, v), p));
                }
            }
        }
        false_edges.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        println!("  strongest false edges:");
        for ((u, v), p) in false_edges.iter().take(5) {
            println!("    {u}->{v}: {p:.3}");
        }
    }
    Ok(())
}
