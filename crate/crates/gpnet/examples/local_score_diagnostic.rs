//! Per-node ranking of parent sets under BGe / GP-Laplace / GP-bridge on
//! one linear-data replicate; a scratch diagnostic.

use gpnet::cli::ExperimentConfig;
use gpnet::score::{build_score_table, BgeScorer, GpBridgeScorer, GpLaplaceScorer, GraphPrior, LocalScorer};
use gpnet::synth::{gen_observations, sample_ground_truth, SynthConfig};
use gpnet::util::mix_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() -> gpnet::Result<()> {
    let mut base = ExperimentConfig::load("desk-n6")?;
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
    println!("true DAG:\n{}", truth.dag);
    for (c, b) in truth.beta.iter().enumerate() {
        if !b.is_empty() {
            println!("beta[{}] = {:?}", c, b);
        }
    }

    let bge = BgeScorer::new(&data, gpnet::bge::BgeParams::for_nodes(6))?;
    let lap = GpLaplaceScorer::new(
        &data,
        cfg.kernel,
        gpnet::gp::PriorSpec::default(),
        gpnet::opt::OptConfig::default(),
        cfg.seed,
    )?;
    let bri = GpBridgeScorer::new(
        &data,
        cfg.kernel,
        gpnet::gp::PriorSpec::default(),
        cfg.bridge_config(),
        cfg.seed,
    )?;

    let table_bge = build_score_table(&bge, 3, GraphPrior::Uniform, None, 0)?;
    let table_lap = build_score_table(&lap, 3, GraphPrior::Uniform, None, 0)?;

    for node in 0..6usize {
        println!(
            "\nnode {} (true parents {:?}):",
            node,
            truth.dag.parents(node)
        );
        let mut ranked_lap: Vec<(u64, f64)> = table_lap.node_entries(node).to_vec();
        ranked_lap.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let mut ranked_bge: Vec<(u64, f64)> = table_bge.node_entries(node).to_vec();
        ranked_bge.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());

        let to_set = |m: u64| -> Vec<usize> { (0..6).filter(|&i| m & (1 << i) != 0).collect() };
        println!("  top Laplace: ");
        for (m, s) in ranked_lap.iter().take(3) {
            let parents = to_set(*m);
            let b = bri.local_score(node, &parents)?;
            println!("    {parents:?}: laplace {s:.2}, bridge {b:.2}");
        }
        let true_set: Vec<usize> = truth.dag.parents(node).to_vec();
        let tmask = true_set.iter().fold(0u64, |m, &p| m | (1 << p));
        if !ranked_lap.iter().take(3).any(|(m, _)| *m == tmask) {
            let s = table_lap.log_score(node, tmask)?;
            let b = bri.local_score(node, &true_set)?;
            println!("    true {true_set:?}: laplace {s:.2}, bridge {b:.2}");
        }
        println!("  top BGe: ");
        for (m, s) in ranked_bge.iter().take(3) {
            println!("    {:?}: bge {s:.2}", to_set(*m));
        }
    }
    Ok(())
}
