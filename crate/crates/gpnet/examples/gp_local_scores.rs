//! The GP local score of one node given candidate parent sets: kernel
//! evaluation, marginal likelihood, MAP hyperparameters and the Laplace
//! approximation.
//!
//! ```bash
//! cargo run --example gp_local_scores
//! ```

use gpnet::dag::Dag;
use gpnet::gp::{
    gram_matrix, kernel_eval, laplace_log_score, log_marginal_likelihood, GpModel, KernelConfig,
    KernelKind, PriorSpec,
};
use gpnet::opt::OptConfig;
use gpnet::synth::{gen_observations, sample_ground_truth, SynthConfig};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() -> gpnet::Result<()> {
    // kernel basics
    let cfg = KernelConfig::additive(vec![1.0, 2.0]);
    println!("k(z, z) with two parents: {}", kernel_eval(&cfg, &[0.3, -0.1], &[0.3, -0.1])?);
    println!(
        "k at one lengthscale apart: {:.5}",
        kernel_eval(&KernelConfig::additive(vec![1.5]), &[0.0], &[1.5])?
    );

    let z = DMatrix::from_row_slice(3, 1, &[0.0, 0.5, 2.0]);
    let k = gram_matrix(&KernelConfig::additive(vec![1.0]), &z)?;
    println!("3x3 Gram matrix:\n{k:.4}");
    let y = DVector::from_vec(vec![0.1, 0.4, -0.2]);
    println!("log marginal likelihood: {:.4}", log_marginal_likelihood(&y, &k, 0.0, 0.5)?);

    // Laplace local scores on a synthetic problem: the true parent set
    // should win
    let synth = SynthConfig { n_nodes: 3, edge_prob: 1.0, n_obs: 80, lambda: 1.0, seed: 3, ..Default::default() };
    let mut rng = ChaCha12Rng::seed_from_u64(synth.seed);
    let dag = Dag::from_edges(3, &[(0, 2), (1, 2)])?;
    let truth = sample_ground_truth(dag, &synth, &mut rng)?;
    let data = gen_observations(&truth, &synth, &mut rng)?.standardized()?;

    println!("\nLaplace log scores for node X3 (true parents: X1, X2):");
    let y = DVector::from_vec(data.column(2));
    for parents in [vec![], vec![0], vec![1], vec![0, 1]] {
        let model = GpModel::new(
            y.clone(),
            data.columns(&parents),
            KernelKind::Additive,
            PriorSpec::default(),
        )?;
        let res = laplace_log_score(&model, &OptConfig::default(), &mut rng)?;
        let labels: Vec<&str> = parents.iter().map(|&p| data.labels[p].as_str()).collect();
        println!(
            "  Pa = {:<12} log S_L = {:>9.3}  (sigma-hat = {:.3}, converged = {})",
            format!("{{{}}}", labels.join(", ")),
            res.log_score,
            res.theta_map.sigma,
            res.converged
        );
    }
    Ok(())
}
