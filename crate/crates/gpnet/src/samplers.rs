//! MCMC samplers over DAG structures driven by a decomposable score
//! table: single-edge structure MCMC, order MCMC over permutations, and
//! partition MCMC over ordered node partitions (which gives unbiased DAG
//! posterior samples).
//!
//! All posterior arithmetic is in log space. Proposal neighborhoods
//! exclude moves that would violate `max_parents` or acyclicity, and the
//! Metropolis-Hastings ratio accounts for the differing neighborhood
//! sizes on either side of a move.

use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::score::ScoreTable;
use crate::util::log_sum_exp;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Current chain position: the sampled object, its log score and the
/// iteration counter.
#[derive(Debug, Clone)]
pub struct ChainState<T> {
    pub state: T,
    pub log_score: f64,
    pub iteration: u64,
}

/// Samples plus chain-level diagnostics.
#[derive(Debug, Clone)]
pub struct ChainOutput<T> {
    pub samples: Vec<(T, f64)>,
    pub acceptance_rate: f64,
}

fn consistency_check(label: &str, incremental: f64, recomputed: f64) -> Result<()> {
    if (incremental - recomputed).abs() > 1e-9 {
        return Err(Error::McmcDivergence(format!(
            "{label}: incremental log score {incremental} drifted from recomputed {recomputed}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Structure MCMC.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StructureOpts {
    pub burn_in_frac: f64,
    /// Record every `thin` iterations; defaults to 10 * n.
    pub thin: Option<usize>,
    pub check_every: usize,
}

impl Default for StructureOpts {
    fn default() -> Self {
        StructureOpts { burn_in_frac: 0.2, thin: None, check_every: 1000 }
    }
}

struct StructureState {
    n: usize,
    max_parents: usize,
    /// parents[v] as a bitmask.
    parents: Vec<u64>,
}

impl StructureState {
    fn from_dag(dag: &Dag, max_parents: usize) -> StructureState {
        StructureState {
            n: dag.n(),
            max_parents,
            parents: (0..dag.n()).map(|v| dag.parent_mask(v)).collect(),
        }
    }

    fn to_dag(&self, labels: &[String]) -> Dag {
        let parents: Vec<Vec<usize>> = self
            .parents
            .iter()
            .map(|&m| (0..self.n).filter(|&i| m & (1 << i) != 0).collect())
            .collect();
        Dag::from_parent_sets(labels.to_vec(), parents).expect("chain state is a valid DAG")
    }

    /// reach[u] = bitmask of nodes reachable from u.
    fn reachability(&self) -> Vec<u64> {
        let mut children: Vec<u64> = vec![0; self.n];
        for v in 0..self.n {
            let mut m = self.parents[v];
            while m != 0 {
                let u = m.trailing_zeros() as usize;
                children[u] |= 1 << v;
                m &= m - 1;
            }
        }
        let mut reach = children.clone();
        // iterate to fixpoint; depth <= n
        loop {
            let mut changed = false;
            for u in 0..self.n {
                let mut r = reach[u];
                let mut m = reach[u];
                while m != 0 {
                    let w = m.trailing_zeros() as usize;
                    r |= reach[w];
                    m &= m - 1;
                }
                if r != reach[u] {
                    reach[u] = r;
                    changed = true;
                }
            }
            if !changed {
                return reach;
            }
        }
    }

    /// All valid single-edge moves: deletions of present edges and
    /// additions that keep the graph acyclic within the parent cap.
    fn neighborhood(&self) -> Vec<(usize, usize, bool)> {
        let reach = self.reachability();
        let mut moves = Vec::new();
        for v in 0..self.n {
            for u in 0..self.n {
                if u == v {
                    continue;
                }
                if self.parents[v] & (1 << u) != 0 {
                    moves.push((u, v, false)); // deletion
                } else if (self.parents[v].count_ones() as usize) < self.max_parents
                    && reach[v] & (1 << u) == 0
                {
                    moves.push((u, v, true)); // addition keeps acyclicity
                }
            }
        }
        moves
    }
}

/// Metropolis-Hastings over DAGs with single-edge addition/deletion
/// proposals drawn uniformly from the neighborhood (self included).
pub fn structure_mcmc<R: Rng + ?Sized>(
    table: &ScoreTable,
    n_iters: usize,
    init: &Dag,
    opts: &StructureOpts,
    rng: &mut R,
) -> Result<ChainOutput<Dag>> {
    let labels = init.labels().to_vec();
    let mut state = StructureState::from_dag(init, table.max_parents);
    let mut log_post = crate::score::dag_log_posterior(init, table)?;
    let burn = (n_iters as f64 * opts.burn_in_frac) as usize;
    let thin = opts.thin.unwrap_or(10 * state.n).max(1);

    let mut samples = Vec::new();
    let mut accepts = 0usize;
    let mut proposals = 0usize;

    for it in 0..n_iters {
        let moves = state.neighborhood();
        let size_here = moves.len() + 1; // including self
        let pick = rng.random_range(0..size_here);
        if pick < moves.len() {
            let (u, v, add) = moves[pick];
            let old_mask = state.parents[v];
            let new_mask = if add { old_mask | (1 << u) } else { old_mask & !(1 << u) };
            let delta = table.log_score(v, new_mask)? - table.log_score(v, old_mask)?;

            state.parents[v] = new_mask;
            let size_there = state.neighborhood().len() + 1;
            let log_alpha = delta + (size_here as f64).ln() - (size_there as f64).ln();
            proposals += 1;
            if rng.random::<f64>().ln() < log_alpha {
                log_post += delta;
                accepts += 1;
            } else {
                state.parents[v] = old_mask;
            }
        }
        // self-move: no state change

        if (it + 1) % opts.check_every == 0 {
            let recomputed = crate::score::dag_log_posterior(&state.to_dag(&labels), table)?;
            consistency_check("structure MCMC", log_post, recomputed)?;
        }
        if it >= burn && (it - burn) % thin == 0 {
            samples.push((state.to_dag(&labels), log_post));
        }
    }

    Ok(ChainOutput {
        samples,
        acceptance_rate: if proposals == 0 { 0.0 } else { accepts as f64 / proposals as f64 },
    })
}

// ---------------------------------------------------------------------------
// Order MCMC.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OrderOpts {
    pub burn_in_frac: f64,
    /// (adjacent transposition, random transposition, single-node relocation).
    pub move_weights: (f64, f64, f64),
    pub check_every: usize,
}

impl Default for OrderOpts {
    fn default() -> Self {
        OrderOpts { burn_in_frac: 0.2, move_weights: (0.4, 0.4, 0.2), check_every: 1000 }
    }
}

/// Per-node predecessor masks of an order.
fn order_pred_masks(order: &[usize]) -> Vec<u64> {
    let mut masks = vec![0u64; order.len()];
    let mut seen = 0u64;
    for &node in order {
        masks[node] = seen;
        seen |= 1 << node;
    }
    masks
}

/// Order score: per node, the log-sum-exp of local scores over parent
/// sets consistent with the order (within the table's parent cap).
pub fn order_log_score(order: &[usize], table: &ScoreTable) -> f64 {
    order_pred_masks(order)
        .iter()
        .enumerate()
        .map(|(node, &m)| table.log_sum_over_subsets(node, m, 0))
        .sum()
}

/// MH chain over node orders; scores cache per-node partial sums and
/// refresh only nodes whose predecessor set changed.
pub fn order_mcmc<R: Rng + ?Sized>(
    table: &ScoreTable,
    n_iters: usize,
    opts: &OrderOpts,
    rng: &mut R,
) -> Result<ChainOutput<Vec<usize>>> {
    let n = table.n;
    let mut order: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    order.shuffle(rng);

    let mut masks = order_pred_masks(&order);
    let mut terms: Vec<f64> = (0..n)
        .map(|v| table.log_sum_over_subsets(v, masks[v], 0))
        .collect();
    let mut log_score: f64 = terms.iter().sum();

    let burn = (n_iters as f64 * opts.burn_in_frac) as usize;
    let (w_adj, w_rand, w_move) = opts.move_weights;
    let w_total = w_adj + w_rand + w_move;

    let mut samples = Vec::new();
    let mut accepts = 0usize;
    let mut proposed = vec![0usize; n];

    for it in 0..n_iters {
        // propose a new order (all three move types are symmetric)
        proposed.copy_from_slice(&order);
        if n >= 2 {
            let u = rng.random::<f64>() * w_total;
            if u < w_adj {
                let k = rng.random_range(0..n - 1);
                proposed.swap(k, k + 1);
            } else if u < w_adj + w_rand {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                proposed.swap(i, j);
            } else {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let node = proposed.remove(i);
                proposed.insert(j, node);
            }
        }

        let new_masks = order_pred_masks(&proposed);
        let mut new_terms = terms.clone();
        let mut new_score = log_score;
        for v in 0..n {
            if new_masks[v] != masks[v] {
                let t = table.log_sum_over_subsets(v, new_masks[v], 0);
                new_score += t - new_terms[v];
                new_terms[v] = t;
            }
        }

        if rng.random::<f64>().ln() < new_score - log_score {
            order.copy_from_slice(&proposed);
            masks = new_masks;
            terms = new_terms;
            log_score = new_score;
            accepts += 1;
        }

        if (it + 1) % opts.check_every == 0 {
            consistency_check("order MCMC", log_score, order_log_score(&order, table))?;
        }
        if it >= burn {
            samples.push((order.clone(), log_score));
        }
    }

    Ok(ChainOutput {
        samples,
        acceptance_rate: accepts as f64 / n_iters as f64,
    })
}

/// Draw one parent set for `node` proportional to exp(local score) among
/// the table entries contained in `allowed` (and intersecting `required`
/// when nonzero); returns the chosen mask.
fn sample_parent_set<R: Rng + ?Sized>(
    table: &ScoreTable,
    node: usize,
    allowed: u64,
    required: u64,
    rng: &mut R,
) -> Result<u64> {
    let entries: Vec<(u64, f64)> = table
        .node_entries(node)
        .iter()
        .filter(|(m, _)| m & !allowed == 0 && (required == 0 || m & required != 0))
        .cloned()
        .collect();
    if entries.is_empty() {
        return Err(Error::UncoveredParentSet { node, parents: vec![] });
    }
    let lse = log_sum_exp(&entries.iter().map(|&(_, s)| s).collect::<Vec<_>>());
    let u = rng.random::<f64>();
    let mut cum = 0.0;
    for &(m, s) in &entries {
        cum += (s - lse).exp();
        if u < cum {
            return Ok(m);
        }
    }
    Ok(entries.last().unwrap().0) // rounding fell through
}

/// Materialize a DAG from an order: per node, a parent set drawn among
/// order-consistent sets proportional to exp(local score).
pub fn sample_dag_given_order<R: Rng + ?Sized>(
    order: &[usize],
    table: &ScoreTable,
    rng: &mut R,
) -> Result<Dag> {
    let n = table.n;
    if order.len() != n {
        return Err(Error::DimensionMismatch("order must cover all nodes".into()));
    }
    let masks = order_pred_masks(order);
    let mut parents = vec![Vec::new(); n];
    for v in 0..n {
        let mask = sample_parent_set(table, v, masks[v], 0, rng)?;
        parents[v] = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
    }
    Dag::from_parent_sets(crate::dag::default_labels(n), parents)
}

// ---------------------------------------------------------------------------
// Partition MCMC.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PartitionOpts {
    pub burn_in_frac: f64,
    /// (split element, join adjacent elements, move one node).
    pub move_weights: (f64, f64, f64),
    pub check_every: usize,
}

impl Default for PartitionOpts {
    fn default() -> Self {
        PartitionOpts { burn_in_frac: 0.2, move_weights: (0.3, 0.3, 0.4), check_every: 1000 }
    }
}

/// An ordered partition of the node set. A DAG is compatible with it when
/// every node in the first element has no parents, and every node in a
/// later element has at least one parent in the immediately preceding
/// element and the rest in earlier elements. Each DAG is compatible with
/// exactly one partition (its layer decomposition), which makes the DAG
/// marginal of the chain unbiased.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedPartition {
    pub elements: Vec<Vec<usize>>,
}

impl OrderedPartition {
    pub fn single(n: usize) -> OrderedPartition {
        OrderedPartition { elements: vec![(0..n).collect()] }
    }

    /// The canonical partition of a DAG: peel off parentless layers.
    pub fn of_dag(dag: &Dag) -> OrderedPartition {
        let n = dag.n();
        let mut assigned = vec![usize::MAX; n];
        let mut placed = 0usize;
        let mut level = 0usize;
        let mut prev_mask = 0u64;
        let mut earlier_mask = 0u64;
        let mut elements = Vec::new();
        while placed < n {
            let mut layer = Vec::new();
            for v in 0..n {
                if assigned[v] != usize::MAX {
                    continue;
                }
                let pm = dag.parent_mask(v);
                let ok = if level == 0 {
                    pm == 0
                } else {
                    pm & !earlier_mask == 0 && pm & prev_mask != 0
                };
                if ok {
                    layer.push(v);
                }
            }
            assert!(!layer.is_empty(), "layer decomposition must make progress");
            let mut layer_mask = 0u64;
            for &v in &layer {
                assigned[v] = level;
                layer_mask |= 1 << v;
                placed += 1;
            }
            earlier_mask |= layer_mask;
            prev_mask = layer_mask;
            elements.push(layer);
            level += 1;
        }
        OrderedPartition { elements }
    }

    pub fn m(&self) -> usize {
        self.elements.len()
    }

    fn element_mask(&self, k: usize) -> u64 {
        self.elements[k].iter().fold(0u64, |m, &v| m | (1 << v))
    }

    /// (allowed, required) parent masks per node.
    fn node_masks(&self, n: usize) -> Vec<(u64, u64)> {
        let mut out = vec![(0u64, 0u64); n];
        let mut earlier = 0u64;
        let mut prev = 0u64;
        for k in 0..self.m() {
            for &v in &self.elements[k] {
                out[v] = (earlier, prev);
            }
            let mask = self.element_mask(k);
            earlier |= mask;
            prev = mask;
        }
        out
    }

    /// Candidate counts for the node-move proposal: see `count_moves`.
    fn normalized(mut self) -> OrderedPartition {
        for e in &mut self.elements {
            e.sort_unstable();
        }
        self
    }
}

/// Partition score: per node, log-sum-exp of local scores over parent
/// sets permitted by the partition constraint.
pub fn partition_log_score(p: &OrderedPartition, table: &ScoreTable) -> f64 {
    p.node_masks(table.n)
        .iter()
        .enumerate()
        .map(|(v, &(allowed, required))| table.log_sum_over_subsets(v, allowed, required))
        .sum()
}

fn count_splits(p: &OrderedPartition) -> u64 {
    p.elements
        .iter()
        .map(|e| if e.len() >= 2 { (1u64 << e.len()) - 2 } else { 0 })
        .sum()
}

/// Number of single-node relocation proposals, with split-, join- and
/// no-op-equivalent targets excluded (those are reachable through the
/// other move types, keeping proposal routes unique).
fn count_moves(p: &OrderedPartition) -> u64 {
    let m = p.m() as i64;
    let mut total = 0i64;
    for (k, e) in p.elements.iter().enumerate() {
        let s = e.len() as i64;
        if s >= 2 {
            // source survives: other elements + non-adjacent new gaps
            total += s * (2 * (m - 1));
        } else {
            // singleton source: element deleted on removal
            let n_adj = if m == 1 {
                0
            } else if k == 0 || k + 1 == p.m() {
                1
            } else {
                2
            };
            total += 2 * (m - 1) - n_adj;
        }
    }
    total.max(0) as u64
}

/// Materialize the `idx`-th node-move candidate (0-based, in the fixed
/// enumeration order used by `count_moves`).
fn apply_move(p: &OrderedPartition, idx: u64) -> OrderedPartition {
    let m = p.m();
    let mut rem = idx as i64;
    for (k, e) in p.elements.iter().enumerate() {
        let s = e.len() as i64;
        let per_node: i64 = if s >= 2 {
            2 * (m as i64 - 1)
        } else {
            let n_adj = if m == 1 {
                0
            } else if k == 0 || k + 1 == m {
                1
            } else {
                2
            };
            2 * (m as i64 - 1) - n_adj
        };
        if per_node <= 0 {
            continue;
        }
        for (pos, &v) in e.iter().enumerate() {
            if rem >= per_node {
                rem -= per_node;
                continue;
            }
            // build the intermediate partition without v
            let mut inter: Vec<Vec<usize>> = Vec::with_capacity(m);
            let mut source_survives = false;
            let mut deletion_site = 0usize; // gap index in `inter` where the source stood
            let mut source_idx_inter = usize::MAX;
            for (kk, ee) in p.elements.iter().enumerate() {
                if kk == k {
                    if ee.len() >= 2 {
                        let mut copy = ee.clone();
                        copy.remove(pos);
                        source_survives = true;
                        source_idx_inter = inter.len();
                        inter.push(copy);
                    } else {
                        deletion_site = inter.len();
                    }
                } else {
                    inter.push(ee.clone());
                }
            }
            let mi = inter.len();

            // enumerate targets: existing elements first, then new gaps
            let existing: Vec<usize> = (0..mi)
                .filter(|&j| {
                    if source_survives {
                        j != source_idx_inter
                    } else {
                        // exclude join-equivalent neighbors flanking the
                        // deletion site
                        !(deletion_site > 0 && j == deletion_site - 1) && j != deletion_site
                    }
                })
                .collect();
            let gaps: Vec<usize> = (0..=mi)
                .filter(|&g| {
                    if source_survives {
                        // exclude the two gaps adjacent to the source element
                        g != source_idx_inter && g != source_idx_inter + 1
                    } else {
                        // exclude the no-op gap at the deletion site
                        g != deletion_site
                    }
                })
                .collect();

            let rem_u = rem as usize;
            let result = if rem_u < existing.len() {
                let j = existing[rem_u];
                let mut out = inter;
                out[j].push(v);
                OrderedPartition { elements: out }
            } else {
                let g = gaps[rem_u - existing.len()];
                let mut out = inter;
                out.insert(g, vec![v]);
                OrderedPartition { elements: out }
            };
            return result.normalized();
        }
    }
    unreachable!("move index {idx} out of range");
}

/// One MH chain over ordered partitions; each recorded state emits one
/// DAG drawn from the partition's permitted parent sets.
pub fn partition_mcmc<R: Rng + ?Sized>(
    table: &ScoreTable,
    n_iters: usize,
    opts: &PartitionOpts,
    rng: &mut R,
) -> Result<ChainOutput<Dag>> {
    let n = table.n;
    let mut part = OrderedPartition::single(n);
    let mut log_score = partition_log_score(&part, table);
    let burn = (n_iters as f64 * opts.burn_in_frac) as usize;
    let (w_split, w_join, w_move) = opts.move_weights;
    let w_total = w_split + w_join + w_move;

    let mut samples = Vec::new();
    let mut accepts = 0usize;
    let mut proposals = 0usize;

    for it in 0..n_iters {
        let u = rng.random::<f64>() * w_total;
        let mut candidate: Option<(OrderedPartition, f64, f64)> = None; // (state, log q fwd, log q rev)

        if u < w_split {
            let n_splits = count_splits(&part);
            if n_splits > 0 {
                // choose an element weighted by its split count, then a
                // proper ordered bipartition uniformly
                let mut pick = rng.random_range(0..n_splits);
                for (k, e) in part.elements.iter().enumerate() {
                    let s = e.len();
                    let c = if s >= 2 { (1u64 << s) - 2 } else { 0 };
                    if pick < c {
                        // subset code in 1..(2^s - 1): members of the code go left
                        let code = pick + 1;
                        let mut left = Vec::new();
                        let mut right = Vec::new();
                        for (bit, &v) in e.iter().enumerate() {
                            if code & (1 << bit) != 0 {
                                left.push(v);
                            } else {
                                right.push(v);
                            }
                        }
                        let mut elements = part.elements.clone();
                        elements.splice(k..=k, [left, right]);
                        let next = OrderedPartition { elements }.normalized();
                        // forward: split; reverse: the specific join at k
                        let q_fwd = w_split.ln() - (n_splits as f64).ln();
                        let q_rev = w_join.ln() - ((next.m() - 1) as f64).ln();
                        candidate = Some((next, q_fwd, q_rev));
                        break;
                    }
                    pick -= c;
                }
            }
        } else if u < w_split + w_join {
            let m = part.m();
            if m >= 2 {
                let k = rng.random_range(0..m - 1);
                let mut elements = part.elements.clone();
                let right = elements.remove(k + 1);
                elements[k].extend(right);
                let next = OrderedPartition { elements }.normalized();
                let q_fwd = w_join.ln() - ((m - 1) as f64).ln();
                let q_rev = w_split.ln() - (count_splits(&next) as f64).ln();
                candidate = Some((next, q_fwd, q_rev));
            }
        } else {
            let n_moves = count_moves(&part);
            if n_moves > 0 {
                let idx = rng.random_range(0..n_moves);
                let next = apply_move(&part, idx);
                let q_fwd = w_move.ln() - (n_moves as f64).ln();
                let q_rev = w_move.ln() - (count_moves(&next) as f64).ln();
                candidate = Some((next, q_fwd, q_rev));
            }
        }

        if let Some((next, q_fwd, q_rev)) = candidate {
            proposals += 1;
            let next_score = partition_log_score(&next, table);
            let log_alpha = next_score - log_score + q_rev - q_fwd;
            if rng.random::<f64>().ln() < log_alpha {
                part = next;
                log_score = next_score;
                accepts += 1;
            }
        }

        if (it + 1) % opts.check_every == 0 {
            consistency_check("partition MCMC", log_score, partition_log_score(&part, table))?;
        }
        if it >= burn {
            let dag = sample_dag_given_partition(&part, table, rng)?;
            let lp = crate::score::dag_log_posterior(&dag, table)?;
            samples.push((dag, lp));
        }
    }

    Ok(ChainOutput {
        samples,
        acceptance_rate: if proposals == 0 { 0.0 } else { accepts as f64 / proposals as f64 },
    })
}

/// Draw one DAG compatible with the partition, per-node proportional to
/// exp(local score) among permitted parent sets.
pub fn sample_dag_given_partition<R: Rng + ?Sized>(
    p: &OrderedPartition,
    table: &ScoreTable,
    rng: &mut R,
) -> Result<Dag> {
    let n = table.n;
    let masks = p.node_masks(n);
    let mut parents = vec![Vec::new(); n];
    for v in 0..n {
        let (allowed, required) = masks[v];
        let mask = sample_parent_set(table, v, allowed, required, rng)?;
        parents[v] = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
    }
    Dag::from_parent_sets(crate::dag::default_labels(n), parents)
}
