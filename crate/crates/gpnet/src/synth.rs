//! Ground-truth network and dataset generation, plus CSV ingestion.
//!
//! Observations for each node are a weighted combination of Fourier
//! components of its parents,
//!
//! `X = sum_{Z in Pa} beta * { sum_j v_j sin(jZ) + w_0 Z + sum_{j>=1} w_j cos(jZ) } + eps`
//!
//! with v, w drawn from a Dirichlet whose concentrations decay as
//! `gamma_k = exp(-k/lambda)`. Note the j = 0 cosine basis element is the
//! identity function rather than the constant 1: with that convention the
//! lambda -> 0 limit (all mass on w_0) degenerates to the linear-Gaussian
//! model `X = sum beta Z + eps`, which a constant term would not.

use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::util::{hash_f64_slice, mean_sd};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Uniform};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

/// Number of Fourier components: index j = 0..=6, seven weights per basis.
pub const N_COMPONENTS: usize = 7;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_nodes: usize,
    pub edge_prob: f64,
    pub n_obs: usize,
    /// Dirichlet decay parameter; 0 selects the linear model directly.
    pub lambda: f64,
    pub beta_range: (f64, f64),
    /// One coefficient per edge when false... see `beta_per_child`.
    pub beta_per_child: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_nodes: 10,
            edge_prob: 0.2,
            n_obs: 100,
            lambda: 1.0,
            beta_range: (0.5, 2.0),
            beta_per_child: false,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::InvalidArgument("n_nodes must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(Error::InvalidArgument("edge_prob must lie in [0,1]".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidArgument("lambda must be >= 0".into()));
        }
        if self.beta_range.0 >= self.beta_range.1 {
            return Err(Error::InvalidArgument("beta_range low must be < high".into()));
        }
        Ok(())
    }
}

/// The generating network with its edge coefficients and basis weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(with = "dag_serde")]
    pub dag: Dag,
    /// beta[(child, parent)] keyed densely: beta[child] maps parent -> coefficient.
    pub beta: Vec<Vec<(usize, f64)>>,
    /// v[node] and w[node] are the 7-vector Dirichlet weights (each sums to 1),
    /// all-zero except w_0 for the linear (lambda = 0) case.
    pub v: Vec<[f64; N_COMPONENTS]>,
    pub w: Vec<[f64; N_COMPONENTS]>,
    pub lambda: f64,
}

mod dag_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(dag: &Dag, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::dag::DagJson::from(dag).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Dag, D::Error> {
        let j = crate::dag::DagJson::deserialize(d)?;
        Dag::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// N x n matrix of continuous observations with column labels and
/// standardization metadata.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub values: DMatrix<f64>,
    pub labels: Vec<String>,
    pub standardized: bool,
    /// (mean, sd) per column recorded when standardizing.
    pub col_stats: Option<Vec<(f64, f64)>>,
}

impl Dataset {
    pub fn new(values: DMatrix<f64>, labels: Vec<String>) -> Result<Dataset> {
        if values.ncols() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} columns but {} labels",
                values.ncols(),
                labels.len()
            )));
        }
        Ok(Dataset {
            values,
            labels,
            standardized: false,
            col_stats: None,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.values.column(i).iter().cloned().collect()
    }

    /// Columns `idx` as an N x |idx| matrix.
    pub fn columns(&self, idx: &[usize]) -> DMatrix<f64> {
        let n = self.n_obs();
        let mut m = DMatrix::zeros(n, idx.len());
        for (k, &j) in idx.iter().enumerate() {
            m.set_column(k, &self.values.column(j));
        }
        m
    }

    /// Standardize every column to zero mean, unit (sample) variance.
    pub fn standardized(&self) -> Result<Dataset> {
        if self.standardized {
            return Ok(self.clone());
        }
        let mut values = self.values.clone();
        let mut stats = Vec::with_capacity(self.n_nodes());
        for j in 0..self.n_nodes() {
            let col = self.column(j);
            let (mean, sd) = mean_sd(&col);
            if sd <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "column {} ({}) is constant; cannot standardize",
                    j, self.labels[j]
                )));
            }
            for i in 0..self.n_obs() {
                values[(i, j)] = (values[(i, j)] - mean) / sd;
            }
            stats.push((mean, sd));
        }
        Ok(Dataset {
            values,
            labels: self.labels.clone(),
            standardized: true,
            col_stats: Some(stats),
        })
    }

    /// Deterministic fingerprint of the data matrix (used to key score caches).
    pub fn fingerprint(&self) -> u64 {
        let flat: Vec<f64> = self.values.iter().cloned().collect();
        hash_f64_slice(&flat)
    }

    /// Write as CSV: header row of labels, one numeric row per observation.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.labels.join(","))?;
        for i in 0..self.n_obs() {
            let row: Vec<String> = (0..self.n_nodes())
                .map(|j| format!("{}", self.values[(i, j)]))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Load a rectangular numeric CSV with a header row.
pub fn load_csv(path: &Path, standardize: bool) -> Result<Dataset> {
    let f = std::fs::File::open(path)?;
    load_csv_reader(std::io::BufReader::new(f), standardize)
}

pub fn load_csv_reader<R: BufRead>(reader: R, standardize: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let labels: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::CsvParse { row: 1, col: 0, msg: e.to_string() })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if labels.is_empty() || labels.iter().all(|l| l.is_empty()) {
        return Err(Error::CsvParse { row: 1, col: 0, msg: "empty file or header".into() });
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ridx, rec) in rdr.records().enumerate() {
        // data rows start at line 2 (1-based, after the header)
        let row_no = ridx + 2;
        let rec = rec.map_err(|e| Error::CsvParse { row: row_no, col: 0, msg: e.to_string() })?;
        if rec.len() != labels.len() {
            return Err(Error::CsvParse {
                row: row_no,
                col: 0,
                msg: format!("expected {} fields, found {}", labels.len(), rec.len()),
            });
        }
        let mut row = Vec::with_capacity(labels.len());
        for (cidx, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::CsvParse {
                row: row_no,
                col: cidx + 1,
                msg: format!("non-numeric cell {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::CsvParse {
                    row: row_no,
                    col: cidx + 1,
                    msg: format!("non-finite cell {field:?}"),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::CsvParse { row: 2, col: 0, msg: "no data rows".into() });
    }
    let values = DMatrix::from_fn(rows.len(), labels.len(), |i, j| rows[i][j]);
    let ds = Dataset::new(values, labels)?;
    if standardize {
        ds.standardized()
    } else {
        Ok(ds)
    }
}

/// Concentration vector gamma_k = exp(-k/lambda), k = 0..6.
pub fn dirichlet_concentrations(lambda: f64) -> [f64; N_COMPONENTS] {
    let mut g = [0.0; N_COMPONENTS];
    for (k, gk) in g.iter_mut().enumerate() {
        *gk = (-(k as f64) / lambda).exp();
    }
    g
}

/// Expected total Dirichlet mass on components k >= 1; strictly
/// increasing in lambda.
pub fn expected_nonlinear_mass(lambda: f64) -> f64 {
    let g = dirichlet_concentrations(lambda);
    let total: f64 = g.iter().sum();
    (total - g[0]) / total
}

fn sample_dirichlet<R: Rng + ?Sized>(conc: &[f64; N_COMPONENTS], rng: &mut R) -> [f64; N_COMPONENTS] {
    // Gamma draws normalized; concentrations that underflow to zero get
    // exactly zero mass (the correct degenerate limit). gamma_0 = 1 always,
    // so the normalizer is positive almost surely.
    let mut draws = [0.0; N_COMPONENTS];
    for (k, &a) in conc.iter().enumerate() {
        if a > 0.0 {
            let g = Gamma::new(a, 1.0)
                .expect("positive shape");
            let x: f64 = g.sample(rng);
            draws[k] = if x.is_finite() { x } else { 0.0 };
        }
    }
    let sum: f64 = draws.iter().sum();
    assert!(sum > 0.0, "degenerate Dirichlet draw (all components zero)");
    for d in &mut draws {
        *d /= sum;
    }
    draws
}

/// One pair of independent Dirichlet weight vectors (v, w).
pub fn sample_weights<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<([f64; N_COMPONENTS], [f64; N_COMPONENTS])> {
    if lambda <= 0.0 {
        return Err(Error::InvalidArgument(
            "sample_weights requires lambda > 0; lambda = 0 selects the linear model".into(),
        ));
    }
    let conc = dirichlet_concentrations(lambda);
    let v = sample_dirichlet(&conc, rng);
    let w = sample_dirichlet(&conc, rng);
    Ok((v, w))
}

/// Draw the full ground truth (structure + coefficients + weights) for a config.
pub fn sample_ground_truth<R: Rng + ?Sized>(dag: Dag, cfg: &SynthConfig, rng: &mut R) -> Result<GroundTruth> {
    cfg.validate()?;
    let n = dag.n();
    let beta_dist = Uniform::new(cfg.beta_range.0, cfg.beta_range.1)
        .map_err(|e| Error::InvalidArgument(format!("beta range: {e}")))?;
    let mut beta = vec![Vec::new(); n];
    for child in 0..n {
        let shared = beta_dist.sample(rng);
        for &parent in dag.parents(child) {
            let b = if cfg.beta_per_child { shared } else { beta_dist.sample(rng) };
            beta[child].push((parent, b));
        }
    }
    let mut v = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for _ in 0..n {
        if cfg.lambda == 0.0 {
            let mut w0 = [0.0; N_COMPONENTS];
            w0[0] = 1.0;
            v.push([0.0; N_COMPONENTS]);
            w.push(w0);
        } else {
            let (vi, wi) = sample_weights(cfg.lambda, rng)?;
            v.push(vi);
            w.push(wi);
        }
    }
    Ok(GroundTruth { dag, beta, v, w, lambda: cfg.lambda })
}

impl GroundTruth {
    /// Mean response of `node` for one row of parent values
    /// (parents in the DAG's sorted parent order).
    pub fn node_mean(&self, node: usize, parent_values: &[f64]) -> f64 {
        let parents = self.dag.parents(node);
        assert_eq!(parents.len(), parent_values.len());
        let v = &self.v[node];
        let w = &self.w[node];
        let mut total = 0.0;
        for (idx, &p) in parents.iter().enumerate() {
            let z = parent_values[idx];
            let b = self
                .beta[node]
                .iter()
                .find(|(q, _)| *q == p)
                .map(|(_, b)| *b)
                .expect("beta present for every edge");
            let mut contrib = w[0] * z; // identity basis (j = 0 cosine slot)
            for j in 1..N_COMPONENTS {
                let jf = j as f64;
                contrib += v[j] * (jf * z).sin() + w[j] * (jf * z).cos();
            }
            // j = 0 sine term is identically zero; v[0] contributes nothing
            total += b * contrib;
        }
        total
    }
}

/// Generate observations in topological order; returns the dataset and the
/// noise matrix (root-node columns are pure noise).
pub fn gen_observations_with_noise<R: Rng + ?Sized>(
    truth: &GroundTruth,
    cfg: &SynthConfig,
    rng: &mut R,
) -> Result<(Dataset, DMatrix<f64>)> {
    cfg.validate()?;
    let n = truth.dag.n();
    let n_obs = cfg.n_obs;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut values = DMatrix::zeros(n_obs, n);
    let mut noise = DMatrix::zeros(n_obs, n);
    for j in 0..n {
        for i in 0..n_obs {
            noise[(i, j)] = std_normal.sample(rng);
        }
    }
    for &node in &truth.dag.topological_order() {
        let parents = truth.dag.parents(node);
        for i in 0..n_obs {
            let x = if parents.is_empty() {
                noise[(i, node)]
            } else {
                let pv: Vec<f64> = parents.iter().map(|&p| values[(i, p)]).collect();
                truth.node_mean(node, &pv) + noise[(i, node)]
            };
            values[(i, node)] = x;
        }
    }
    let ds = Dataset::new(values, truth.dag.labels().to_vec())?;
    Ok((ds, noise))
}

pub fn gen_observations<R: Rng + ?Sized>(truth: &GroundTruth, cfg: &SynthConfig, rng: &mut R) -> Result<Dataset> {
    gen_observations_with_noise(truth, cfg, rng).map(|(d, _)| d)
}
