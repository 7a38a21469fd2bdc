//! Per-replicate breakdown of E-SHD at lambda = 0 for the GP pipeline
//! (weighted and Laplace-only) against BGe; a scratch diagnostic.

use gpnet::cli::commands::{evaluate_weighted, sample_weighted};
use gpnet::cli::{ExperimentConfig, SamplerChoice, ScoreChoice};
use gpnet::inference::WeightedDagSample;
use gpnet::metrics::ReversalCost;
use gpnet::synth::{gen_observations, sample_ground_truth, SynthConfig};
use gpnet::util::mix_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() -> gpnet::Result<()> {
    let mut base = ExperimentConfig::load("desk-n6")?;
    base.m_samples = 2000;
    base.bridge_n1 = 150;
    base.bridge_n2 = 150;
    let lambda = 0.0;

    println!(
        "{:>3} {:>6} {:>9} {:>9} {:>9} {:>8} {:>8} {:>8} {:>8} {:>7}",
        "rep", "edges", "bge", "gp-lapl", "gp-wtd", "gp-etp", "gp-efp", "bge-etp", "bge-efp", "ess"
    );
    for rep in 0..5usize {
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

        let mut gp = cfg.clone();
        gp.score = ScoreChoice::Laplace;
        gp.sampler = SamplerChoice::Partition;
        let (weighted, diag) = sample_weighted(&gp, &data, None, 0)?;
        let wtd = evaluate_weighted(&weighted, Some(&truth.dag), None, ReversalCost::One)?;
        let flat: Vec<WeightedDagSample> = weighted
            .iter()
            .map(|w| WeightedDagSample { dag: w.dag.clone(), log_q: 0.0, log_p: 0.0 })
            .collect();
        let lapl = evaluate_weighted(&flat, Some(&truth.dag), None, ReversalCost::One)?;

        let mut bge = cfg.clone();
        bge.score = ScoreChoice::Bge;
        bge.sampler = SamplerChoice::Partition;
        let (bweighted, _) = sample_weighted(&bge, &data, None, 0)?;
        let brep = evaluate_weighted(&bweighted, Some(&truth.dag), None, ReversalCost::One)?;

        println!(
            "{:>3} {:>6} {:>9.3} {:>9.3} {:>9.3} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>7.0}",
            rep,
            truth.dag.edge_count(),
            brep.e_shd,
            lapl.e_shd,
            wtd.e_shd,
            wtd.e_tp,
            wtd.e_fp,
            brep.e_tp,
            brep.e_fp,
            diag.effective_sample_size
        );
    }
    Ok(())
}
