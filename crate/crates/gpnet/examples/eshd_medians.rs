//! Median E-SHD of GP vs BGe partition sampling across replicates at a
//! given lambda and edge probability; a scratch diagnostic.

use gpnet::cli::commands::{evaluate_weighted, sample_weighted};
use gpnet::cli::{ExperimentConfig, SamplerChoice, ScoreChoice};
use gpnet::metrics::ReversalCost;
use gpnet::synth::{gen_observations, sample_ground_truth, SynthConfig};
use gpnet::util::{median, mix_seed};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

fn main() -> gpnet::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let lambda: f64 = args.first().map(|a| a.parse().unwrap()).unwrap_or(0.0);
    let edge_prob: f64 = args.get(1).map(|a| a.parse().unwrap()).unwrap_or(0.2);
    let base_seed: u64 = args.get(2).map(|a| a.parse().unwrap()).unwrap_or(601);
    let gamma: f64 = args.get(3).map(|a| a.parse().unwrap()).unwrap_or(0.0);
    let t_scale: f64 = args.get(4).map(|a| a.parse().unwrap()).unwrap_or(0.0);

    let mut base = ExperimentConfig::load("desk-n6")?;
    base.m_samples = 2000;
    base.bridge_n1 = 150;
    base.bridge_n2 = 150;
    base.edge_prob = edge_prob;
    base.seed = base_seed;

    let results: Vec<(f64, f64, usize)> = (0..10usize)
        .into_par_iter()
        .map(|rep| {
            let mut cfg = base.clone();
            cfg.lambda = lambda;
            cfg.seed = mix_seed(&[base.seed, lambda.to_bits(), rep as u64]);
            let synth = SynthConfig {
                n_nodes: cfg.n_nodes,
                edge_prob: cfg.edge_prob,
                n_obs: cfg.n_obs,
                lambda,
                seed: cfg.seed,
                ..Default::default()
            };
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
            let dag = gpnet::dag::sample_erdos_renyi(cfg.n_nodes, cfg.edge_prob, &mut rng).unwrap();
            let truth = sample_ground_truth(dag, &synth, &mut rng).unwrap();
            let data = gen_observations(&truth, &synth, &mut rng).unwrap();

            let mut gp = cfg.clone();
            gp.score = ScoreChoice::Laplace;
            gp.sampler = SamplerChoice::Partition;
            gp.gamma = gamma;
            let (weighted, _) = sample_weighted(&gp, &data, None, 1).unwrap();
            let gp_eshd = evaluate_weighted(&weighted, Some(&truth.dag), None, ReversalCost::One)
                .unwrap()
                .e_shd;

            let mut bge = cfg.clone();
            bge.score = ScoreChoice::Bge;
            bge.sampler = SamplerChoice::Partition;
            let bw = if t_scale > 0.0 {
                let scorer = gpnet::score::BgeScorer::new(
                    &data,
                    gpnet::bge::BgeParams::with_t_scale(bge.n_nodes, t_scale),
                )
                .unwrap();
                let table = gpnet::score::build_score_table(
                    &scorer,
                    bge.max_parents,
                    bge.graph_prior(),
                    None,
                    1,
                )
                .unwrap();
                let mut rng2 = ChaCha12Rng::seed_from_u64(mix_seed(&[bge.seed, 0x5a17]));
                let (samples, _) = gpnet::cli::commands::run_sampler(&bge, &table, &mut rng2).unwrap();
                samples
                    .into_iter()
                    .map(|(dag, lp)| gpnet::inference::WeightedDagSample { dag, log_q: lp, log_p: lp })
                    .collect()
            } else {
                sample_weighted(&bge, &data, None, 1).unwrap().0
            };
            let bge_eshd = evaluate_weighted(&bw, Some(&truth.dag), None, ReversalCost::One)
                .unwrap()
                .e_shd;
            (gp_eshd, bge_eshd, truth.dag.edge_count())
        })
        .collect();

    let gp: Vec<f64> = results.iter().map(|r| r.0).collect();
    let bge: Vec<f64> = results.iter().map(|r| r.1).collect();
    println!("lambda = {lambda}, edge_prob = {edge_prob}, seed = {base_seed}, gamma = {gamma}, t_scale = {t_scale}");
    for (i, (g, b, e)) in results.iter().enumerate() {
        println!("  rep {i}: edges {e}, gp {g:.3}, bge {b:.3}");
    }
    println!(
        "medians: gp = {:.3}, bge = {:.3}, ratio = {:.3}",
        median(&gp),
        median(&bge),
        median(&gp) / median(&bge)
    );
    Ok(())
}
