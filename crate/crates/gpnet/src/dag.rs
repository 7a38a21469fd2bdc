//! Labeled DAGs, their equivalence-class representatives (CPDAGs),
//! exhaustive enumeration for small node counts, and random generation.
//!
//! Parent lists are the source of truth (scoring reads parents far more
//! often than it needs matrix form); adjacency matrices and bitmasks are
//! derived on demand. `Dag` and `Cpdag` are immutable after construction.

use crate::error::{Error, Result};
use crate::util::mix_seed;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Upper bound on nodes for exhaustive DAG enumeration.
pub const MAX_ENUM_NODES: usize = 5;

/// A labeled directed acyclic graph over `n` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    labels: Vec<String>,
    /// parents[i] = sorted list of j with edge j -> i
    parents: Vec<Vec<usize>>,
}

/// Canonical byte encoding of a DAG's adjacency matrix: bit `i*n + j` is
/// set iff the edge i -> j is present, packed row-major, MSB first.
/// Two DAGs are equal iff their keys are byte-identical.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DagKey(pub Vec<u8>);

impl DagKey {
    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Result<DagKey> {
        if s.len() % 2 != 0 {
            return Err(Error::InvalidArgument(format!("odd-length hex key {s:?}")));
        }
        let bytes = (0..s.len() / 2)
            .map(|i| {
                u8::from_str_radix(&s[2 * i..2 * i + 2], 16)
                    .map_err(|e| Error::InvalidArgument(format!("bad hex key {s:?}: {e}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(DagKey(bytes))
    }
}

/// Default node labels X1..Xn.
pub fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("X{i}")).collect()
}

/// True iff the directed graph given as an edge list admits a topological
/// order. Self-loops are rejected as malformed input rather than reported
/// as cycles.
pub fn is_acyclic(n: usize, edges: &[(usize, usize)]) -> Result<bool> {
    if n == 0 {
        return Err(Error::InvalidGraph("graph must have at least one node".into()));
    }
    let mut indegree = vec![0usize; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in edges {
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
        }
        if u >= n || v >= n {
            return Err(Error::InvalidGraph(format!("edge ({u},{v}) out of range for n={n}")));
        }
        indegree[v] += 1;
        children[u].push(v);
    }
    // Kahn's algorithm
    let mut queue: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut seen = 0usize;
    while let Some(u) = queue.pop() {
        seen += 1;
        for &v in &children[u] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                queue.push(v);
            }
        }
    }
    Ok(seen == n)
}

impl Dag {
    /// Build a DAG from an edge list, validating acyclicity, self-loops
    /// and duplicates.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Dag> {
        Dag::from_edges_labeled(default_labels(n), edges)
    }

    pub fn from_edges_labeled(labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Dag> {
        let n = labels.len();
        if !is_acyclic(n, edges)? {
            return Err(Error::InvalidGraph("graph contains a directed cycle".into()));
        }
        let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if !seen.insert((u, v)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u},{v})")));
            }
            parents[v].push(u);
        }
        for p in &mut parents {
            p.sort_unstable();
        }
        Ok(Dag { labels, parents })
    }

    /// Reconstruct from per-node parent lists (used by the samplers,
    /// which build parent sets acyclic by construction).
    pub fn from_parent_sets(labels: Vec<String>, parents: Vec<Vec<usize>>) -> Result<Dag> {
        let edges: Vec<(usize, usize)> = parents
            .iter()
            .enumerate()
            .flat_map(|(v, ps)| ps.iter().map(move |&u| (u, v)))
            .collect();
        Dag::from_edges_labeled(labels, &edges)
    }

    pub fn empty(n: usize) -> Dag {
        Dag {
            labels: default_labels(n),
            parents: vec![Vec::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Sorted parent list of node `i`.
    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    /// Parent set of node `i` as a bitmask (requires n <= 64).
    pub fn parent_mask(&self, i: usize) -> u64 {
        self.parents[i].iter().fold(0u64, |m, &p| m | (1 << p))
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.parents[v].binary_search(&u).is_ok()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(v, ps)| ps.iter().map(move |&u| (u, v)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(|p| p.len()).sum()
    }

    pub fn children(&self, u: usize) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.has_edge(u, v)).collect()
    }

    /// A topological order (parents before children).
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.n();
        let mut indegree: Vec<usize> = (0..n).map(|i| self.parents[i].len()).collect();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (u, v) in self.edges() {
            children[u].push(v);
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = queue.pop() {
            order.push(u);
            for &v in &children[u] {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    queue.push(v);
                }
            }
        }
        debug_assert_eq!(order.len(), n);
        order
    }

    /// reach[u] bitmask of nodes reachable from u by directed paths
    /// (excluding u itself unless on a cycle, which cannot happen here).
    pub fn reachability(&self) -> Vec<u64> {
        let n = self.n();
        let mut reach = vec![0u64; n];
        // process in reverse topological order so children are done first
        let order = self.topological_order();
        for &u in order.iter().rev() {
            let mut r = 0u64;
            for v in 0..n {
                if self.has_edge(u, v) {
                    r |= 1 << v;
                    r |= reach[v];
                }
            }
            reach[u] = r;
        }
        reach
    }

    pub fn has_directed_path(&self, u: usize, v: usize) -> bool {
        self.reachability()[u] & (1 << v) != 0
    }

    /// Canonical key; total order on DAGs of equal size.
    pub fn key(&self) -> DagKey {
        let n = self.n();
        let nbits = n * n;
        let mut bytes = vec![0u8; nbits.div_ceil(8)];
        for (u, v) in self.edges() {
            let bit = u * n + v;
            bytes[bit / 8] |= 1 << (7 - (bit % 8));
        }
        DagKey(bytes)
    }

    /// The DAG with every edge reversed (always acyclic).
    pub fn reversed(&self) -> Dag {
        let edges: Vec<(usize, usize)> = self.edges().iter().map(|&(u, v)| (v, u)).collect();
        Dag::from_edges_labeled(self.labels.clone(), &edges).expect("reversal preserves acyclicity")
    }
}

/// Completed partially directed graph of a Markov equivalence class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cpdag {
    n: usize,
    /// compelled edges u -> v
    directed: BTreeSet<(usize, usize)>,
    /// reversible edges, stored with u < v
    undirected: BTreeSet<(usize, usize)>,
}

impl Cpdag {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.directed.iter().copied()
    }

    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.undirected.iter().copied()
    }

    pub fn has_directed(&self, u: usize, v: usize) -> bool {
        self.directed.contains(&(u, v))
    }

    pub fn has_undirected(&self, u: usize, v: usize) -> bool {
        let key = if u < v { (u, v) } else { (v, u) };
        self.undirected.contains(&key)
    }

    pub fn edge_count(&self) -> usize {
        self.directed.len() + self.undirected.len()
    }
}

/// Enumerate every labeled DAG on `n` nodes exactly once (1 <= n <= 5).
///
/// Brute force over all assignments of the n(n-1) off-diagonal adjacency
/// bits, keeping the acyclic ones; at n = 5 this scans 2^20 digraphs.
pub fn enumerate_dags(n: usize) -> Result<Vec<Dag>> {
    if n < 1 || n > MAX_ENUM_NODES {
        return Err(Error::NodeCountOutOfRange(n, 1, MAX_ENUM_NODES));
    }
    // off-diagonal positions in fixed row-major order
    let slots: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let nbits = slots.len();
    let labels = default_labels(n);
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << nbits) {
        let edges: Vec<(usize, usize)> = (0..nbits)
            .filter(|&b| mask & (1 << b) != 0)
            .map(|b| slots[b])
            .collect();
        if is_acyclic(n, &edges)? {
            out.push(Dag::from_edges_labeled(labels.clone(), &edges)?);
        }
    }
    Ok(out)
}

/// Draw a random DAG: a uniformly random node order, then each pair
/// (earlier, later) receives an edge independently with `p_edge`.
pub fn sample_erdos_renyi<R: Rng + ?Sized>(n: usize, p_edge: f64, rng: &mut R) -> Result<Dag> {
    if n == 0 {
        return Err(Error::InvalidGraph("graph must have at least one node".into()));
    }
    if !(0.0..=1.0).contains(&p_edge) {
        return Err(Error::InvalidArgument(format!("p_edge {p_edge} outside [0,1]")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random::<f64>() < p_edge {
                edges.push((order[a], order[b]));
            }
        }
    }
    Dag::from_edges(n, &edges)
}

/// Seed helper: derive a child seed for node/replicate streams.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut words = vec![master];
    words.extend_from_slice(tags);
    mix_seed(&words)
}

// ---------------------------------------------------------------------------
// CPDAG construction: skeleton + v-structures, closed under Meek rules.
// ---------------------------------------------------------------------------

/// Working partially directed graph for the Meek closure.
struct Pdag {
    n: usize,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>, // stored u < v
}

impl Pdag {
    fn adjacent(&self, u: usize, v: usize) -> bool {
        self.directed.contains(&(u, v))
            || self.directed.contains(&(v, u))
            || self.undirected.contains(&(u.min(v), u.max(v)))
    }

    fn orient(&mut self, u: usize, v: usize) {
        self.undirected.remove(&(u.min(v), u.max(v)));
        self.directed.insert((u, v));
    }

    fn parents(&self, v: usize) -> Vec<usize> {
        self.directed
            .iter()
            .filter(|&&(_, b)| b == v)
            .map(|&(a, _)| a)
            .collect()
    }

    fn undirected_neighbors(&self, v: usize) -> Vec<usize> {
        self.undirected
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Directed path u ~> v using only directed edges.
    fn has_dir_path(&self, u: usize, v: usize) -> bool {
        let mut stack = vec![u];
        let mut seen = vec![false; self.n];
        while let Some(a) = stack.pop() {
            if a == v {
                return true;
            }
            if seen[a] {
                continue;
            }
            seen[a] = true;
            for &(x, y) in &self.directed {
                if x == a && !seen[y] {
                    stack.push(y);
                }
            }
        }
        false
    }

    /// Apply Meek rules R1-R4 until no rule fires.
    fn meek_closure(&mut self) {
        loop {
            let mut oriented = Vec::new();

            // R1: u -> v, v -- w, u not adjacent to w  =>  v -> w
            for &(u, v) in &self.directed {
                for w in self.undirected_neighbors(v) {
                    if w != u && !self.adjacent(u, w) {
                        oriented.push((v, w));
                    }
                }
            }
            // R2 (generalized): u -- v with a directed path u ~> v  =>  u -> v.
            // Orienting v -> u would close a directed cycle in every
            // consistent extension; the length-2 case is Meek's R2, and
            // R1-R3 are complete for DAG patterns.
            for &(a, b) in &self.undirected {
                for (u, v) in [(a, b), (b, a)] {
                    if self.has_dir_path(u, v) {
                        oriented.push((u, v));
                    }
                }
            }
            // R3: u -- v, u -- w, u -- x, w -> v, x -> v, w not adjacent x => u -> v
            for &(a, b) in &self.undirected {
                for (u, v) in [(a, b), (b, a)] {
                    let pv = self.parents(v);
                    let nu = self.undirected_neighbors(u);
                    let mut fired = false;
                    for (i, &w) in pv.iter().enumerate() {
                        for &x in &pv[i + 1..] {
                            if !self.adjacent(w, x) && nu.contains(&w) && nu.contains(&x) {
                                fired = true;
                            }
                        }
                    }
                    if fired {
                        oriented.push((u, v));
                    }
                }
            }

            let mut changed = false;
            for (u, v) in oriented {
                if self.undirected.contains(&(u.min(v), u.max(v))) {
                    self.orient(u, v);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
}

/// Skeleton and v-structures of a DAG; the invariant pair defining its
/// Markov equivalence class.
pub fn skeleton_and_v_structures(dag: &Dag) -> (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize, usize)>) {
    let mut skeleton = BTreeSet::new();
    for (u, v) in dag.edges() {
        skeleton.insert((u.min(v), u.max(v)));
    }
    let mut v_structs = BTreeSet::new();
    for c in 0..dag.n() {
        let ps = dag.parents(c);
        for (i, &a) in ps.iter().enumerate() {
            for &b in &ps[i + 1..] {
                if !skeleton.contains(&(a.min(b), a.max(b))) {
                    v_structs.insert((a.min(b), a.max(b), c));
                }
            }
        }
    }
    (skeleton, v_structs)
}

/// The CPDAG of `dag`'s Markov equivalence class: skeleton plus
/// v-structures, closed under the Meek rules.
pub fn to_cpdag(dag: &Dag) -> Cpdag {
    let n = dag.n();
    let (skeleton, v_structs) = skeleton_and_v_structures(dag);

    let mut pdag = Pdag {
        n,
        directed: BTreeSet::new(),
        undirected: skeleton.clone(),
    };
    for &(a, b, c) in &v_structs {
        // orient both collider edges toward c as in the original DAG
        let (u1, u2) = if dag.has_edge(a, c) { (a, b) } else { (b, a) };
        debug_assert!(dag.has_edge(u1, c) && dag.has_edge(u2, c));
        pdag.orient(u1, c);
        pdag.orient(u2, c);
    }
    pdag.meek_closure();

    Cpdag {
        n,
        directed: pdag.directed,
        undirected: pdag.undirected,
    }
}

// ---------------------------------------------------------------------------
// External formats: text and JSON.
// ---------------------------------------------------------------------------

impl fmt::Display for Dag {
    /// Text format: header `nodes: <comma-separated labels>` then one
    /// line `<from> -> <to>` per edge, using node labels.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes: {}", self.labels.join(","))?;
        for (u, v) in self.edges() {
            writeln!(f, "{} -> {}", self.labels[u], self.labels[v])?;
        }
        Ok(())
    }
}

impl Dag {
    /// Parse the text format emitted by `Display`.
    pub fn parse_text(text: &str) -> Result<Dag> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty DAG text".into()))?;
        let labels_part = header
            .strip_prefix("nodes:")
            .ok_or_else(|| Error::InvalidArgument(format!("expected `nodes:` header, got {header:?}")))?;
        let labels: Vec<String> = labels_part
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if labels.is_empty() {
            return Err(Error::InvalidArgument("no node labels in header".into()));
        }
        let find = |name: &str| -> Result<usize> {
            labels
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown node label {name:?}")))
        };
        let mut edges = Vec::new();
        for line in lines {
            let parts: Vec<&str> = line.split("->").collect();
            if parts.len() != 2 {
                return Err(Error::InvalidArgument(format!("malformed edge line {line:?}")));
            }
            edges.push((find(parts[0].trim())?, find(parts[1].trim())?));
        }
        Dag::from_edges_labeled(labels, &edges)
    }
}

/// JSON adjacency-list form used by the CLI.
#[derive(Debug, Serialize, Deserialize)]
pub struct DagJson {
    pub nodes: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

impl From<&Dag> for DagJson {
    fn from(d: &Dag) -> DagJson {
        DagJson {
            nodes: d.labels.to_vec(),
            edges: d.edges(),
        }
    }
}

impl TryFrom<DagJson> for Dag {
    type Error = Error;
    fn try_from(j: DagJson) -> Result<Dag> {
        Dag::from_edges_labeled(j.nodes, &j.edges)
    }
}
