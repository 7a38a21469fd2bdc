//! Median E-SHD of the BGe partition sampler across t_scale values; a
//! scratch tuning run mirroring the prior-scale sweep.

use gpnet::cli::commands::{evaluate_weighted, run_sampler};
use gpnet::cli::{ExperimentConfig, SamplerChoice};
use gpnet::inference::WeightedDagSample;
use gpnet::metrics::ReversalCost;
use gpnet::synth::{gen_observations, sample_ground_truth, SynthConfig};
use gpnet::util::{median, mix_seed};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() -> gpnet::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let lambda: f64 = args.first().map(|a| a.parse().unwrap()).unwrap_or(0.0);
    let mut base = ExperimentConfig::load("desk-n6")?;
    base.m_samples = 2000;
    base.edge_prob = 0.2;
    base.sampler = SamplerChoice::Partition;

    for t_scale in [0.05, 0.1, 0.5, 1.0, 2.0, 10.0] {
        let mut eshds = Vec::new();
        for rep in 0..10usize {
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
            let dag = gpnet::dag::sample_erdos_renyi(cfg.n_nodes, cfg.edge_prob, &mut rng)?;
            let truth = sample_ground_truth(dag, &synth, &mut rng)?;
            let data = gen_observations(&truth, &synth, &mut rng)?;
            let scorer = gpnet::score::BgeScorer::new(
                &data,
                gpnet::bge::BgeParams::with_t_scale(cfg.n_nodes, t_scale),
            )?;
            let table = gpnet::score::build_score_table(&scorer, cfg.max_parents, cfg.graph_prior(), None, 1)?;
            let mut rng2 = ChaCha12Rng::seed_from_u64(mix_seed(&[cfg.seed, 0x5a17]));
            let (samples, _) = run_sampler(&cfg, &table, &mut rng2)?;
            let weighted: Vec<WeightedDagSample> = samples
                .into_iter()
                .map(|(dag, lp)| WeightedDagSample { dag, log_q: lp, log_p: lp })
                .collect();
            eshds.push(
                evaluate_weighted(&weighted, Some(&truth.dag), None, ReversalCost::One)?.e_shd,
            );
        }
        println!("lambda {lambda} t_scale {t_scale}: median E-SHD {:.3}", median(&eshds));
    }
    Ok(())
}
