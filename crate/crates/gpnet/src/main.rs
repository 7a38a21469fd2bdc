//! Thin command-line front end over the library pipeline.

use clap::{Args, Parser, Subcommand};
use gpnet::cli::commands::{cmd_enumerate, cmd_evaluate, cmd_generate, cmd_sample};
use gpnet::cli::experiments::cmd_experiment;
use gpnet::cli::ExperimentConfig;
use gpnet::metrics::ReversalCost;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gpnet",
    about = "Bayesian structure inference for Gaussian process networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config: a preset name (fixture-n3, fixture-n4, desk-n6, paper-n10)
    /// or a TOML file path.
    #[arg(long)]
    config: String,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Persistent score cache file.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl Common {
    fn config(&self) -> gpnet::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.display().to_string();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ground-truth network and synthetic dataset.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Sample DAGs, re-score and weight them; writes weighted.jsonl.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV (header row of node labels).
        #[arg(long)]
        data: PathBuf,
    },
    /// Evaluate weighted samples against a truth DAG / exact posterior.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// weighted.jsonl from `sample`.
        #[arg(long)]
        weighted: PathBuf,
        /// Ground-truth DAG in text form.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// exact_posterior.json from `enumerate`.
        #[arg(long)]
        exact: Option<PathBuf>,
        /// Feature query, repeatable: edge:A,B path:A,B no-edge:A,B
        /// no-path:A,B cpdag-edge:A,B (labels or indices).
        #[arg(long = "feature")]
        features: Vec<String>,
        /// Count a reversed edge as 2 edits instead of 1.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        reversal_cost: u8,
    },
    /// Enumerate all DAGs and compute the exact posterior (small n).
    Enumerate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
    },
    /// Run a batch study: eshd-sweep, kl-convergence, equivalence, roc-sweep.
    Experiment {
        /// Study name.
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

fn run() -> gpnet::Result<()> {
    match Cli::parse().command {
        Command::Generate { common } => {
            let cfg = common.config()?;
            let out = cmd_generate(&cfg)?;
            println!("wrote {}", out.data_path.display());
            println!("wrote {}", out.truth_path.display());
            println!("wrote {}", out.params_path.display());
            println!("wrote {}", out.manifest_path.display());
        }
        Command::Sample { common, data } => {
            let cfg = common.config()?;
            let out = cmd_sample(&cfg, &data, common.cache.as_deref(), common.threads)?;
            println!("wrote {}", out.weighted_path.display());
            println!(
                "samples: {}  unique DAGs: {}  acceptance: {:.3}  ESS: {:.1}",
                out.diagnostics.n_samples,
                out.diagnostics.unique_dags,
                out.diagnostics.acceptance_rate,
                out.diagnostics.effective_sample_size
            );
        }
        Command::Evaluate { common, weighted, truth, exact, features, reversal_cost } => {
            let cfg = common.config()?;
            let cost = if reversal_cost == 2 { ReversalCost::Two } else { ReversalCost::One };
            let out = cmd_evaluate(
                &cfg,
                &weighted,
                truth.as_deref(),
                exact.as_deref(),
                &features,
                cost,
            )?;
            println!("wrote {}", out.report_path.display());
            println!(
                "E-SHD: {:.3}  E-TP: {:.3}  E-FP: {:.3}  reverse KL: {}",
                out.report.e_shd,
                out.report.e_tp,
                out.report.e_fp,
                out.report
                    .reverse_kl
                    .map(|v| format!("{v:.4}"))
                    .unwrap_or_else(|| "-".into())
            );
            for f in &out.features {
                println!("feature {}: {:.4}", f.query, f.posterior);
            }
        }
        Command::Enumerate { common, data } => {
            let cfg = common.config()?;
            let out = cmd_enumerate(&cfg, &data, common.cache.as_deref(), common.threads)?;
            println!("wrote {}", out.exact_path.display());
        }
        Command::Experiment { name, common } => {
            let cfg = common.config()?;
            let out = cmd_experiment(&name, &cfg, common.cache.as_deref(), common.threads)?;
            println!("wrote {} ({} rows)", out.csv_path.display(), out.n_rows);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({
                "error": e.to_string(),
                "kind": format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or("Error"),
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}
