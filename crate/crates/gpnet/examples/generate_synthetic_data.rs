//! Random network and dataset generation: Erdős–Rényi structure and
//! Fourier-basis conditional means with Dirichlet weights.
//!
//! ```bash
//! cargo run --example generate_synthetic_data -- [lambda]
//! ```

use gpnet::dag::sample_erdos_renyi;
use gpnet::synth::{expected_nonlinear_mass, gen_observations, sample_ground_truth, SynthConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() -> gpnet::Result<()> {
    let lambda: f64 = std::env::args()
        .nth(1)
        .map(|a| a.parse().expect("lambda must be a number"))
        .unwrap_or(1.0);

    let cfg = SynthConfig {
        n_nodes: 10,
        edge_prob: 0.2,
        n_obs: 100,
        lambda,
        seed: 42,
        ..Default::default()
    };
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let dag = sample_erdos_renyi(cfg.n_nodes, cfg.edge_prob, &mut rng)?;
    let truth = sample_ground_truth(dag, &cfg, &mut rng)?;
    let data = gen_observations(&truth, &cfg, &mut rng)?;

    println!("lambda = {lambda}");
    if lambda > 0.0 {
        println!(
            "expected Dirichlet mass on nonlinear components: {:.4}",
            expected_nonlinear_mass(lambda)
        );
    } else {
        println!("linear mode: weights fixed to the identity basis");
    }
    println!("true DAG ({} edges):\n{}", truth.dag.edge_count(), truth.dag);
    println!("dataset: {} observations x {} nodes", data.n_obs(), data.n_nodes());

    // column summaries
    for j in 0..data.n_nodes() {
        let col = data.column(j);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
        println!(
            "  {}: mean {:+.3}, sd {:.3}{}",
            data.labels[j],
            mean,
            var.sqrt(),
            if truth.dag.parents(j).is_empty() { "  (root)" } else { "" }
        );
    }

    let path = std::env::temp_dir().join("gpnet_example_data.csv");
    data.write_csv_path(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
