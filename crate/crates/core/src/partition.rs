//! Multi-constraint k-way partitioning of a dependency graph.
//!
//! Every level holding at least `k` operations becomes one balance
//! dimension; its operations carry a one-hot weight in that dimension, so a
//! balanced partition spreads each wide level across the cores. The
//! partitioner itself is multilevel: heavy-edge matching coarsening, greedy
//! region growing on the coarsest graph, and balance-preserving single-node
//! refinement on the way back up.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::qmdg::Qmdg;

pub const DEFAULT_TOLERANCE: f64 = 1.5;

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("part count must be at least 1")]
    NoParts,
    #[error("balance tolerance must be at least 1.0, got {0}")]
    BadTolerance(f64),
    #[error("could not balance dimension {dim}: load {load} exceeds limit {limit}")]
    InfeasibleBalance { dim: usize, load: u64, limit: u64 },
}

/// One-hot level weights.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightAssignment {
    /// Levels (1-based) with at least `k` operations, ascending. Dimension
    /// `j` belongs to `levels[j]`.
    pub levels: Vec<u32>,
    /// `vectors[id - 1]` has length `n_con`.
    pub vectors: Vec<Vec<u32>>,
}

impl WeightAssignment {
    pub fn n_con(&self) -> usize {
        self.levels.len()
    }

    pub fn vector(&self, id: usize) -> &[u32] {
        &self.vectors[id - 1]
    }
}

/// Assigns weight vectors. Module calls are never weighted and do not count
/// toward a level's width.
pub fn assign_weights(g: &Qmdg, k: usize) -> WeightAssignment {
    let mut width = vec![0usize; g.level_count() as usize];
    for node in g.nodes.iter().filter(|n| !n.is_call()) {
        width[g.level(node.id) as usize - 1] += 1;
    }
    let levels: Vec<u32> = width
        .iter()
        .enumerate()
        .filter(|(_, &n)| n >= k.max(1))
        .map(|(i, _)| i as u32 + 1)
        .collect();
    let vectors = g
        .nodes
        .iter()
        .map(|node| {
            let mut v = vec![0u32; levels.len()];
            if !node.is_call() {
                if let Some(j) = levels.iter().position(|&l| l == g.level(node.id)) {
                    v[j] = 1;
                }
            }
            v
        })
        .collect();
    WeightAssignment { levels, vectors }
}

/// Weight rows actually balanced: the one-hot vectors, or, when there are
/// no wide levels, a single dimension counting operations.
pub fn balance_weights(g: &Qmdg, w: &WeightAssignment) -> Vec<Vec<u64>> {
    if w.n_con() > 0 {
        w.vectors.iter().map(|v| v.iter().map(|&x| u64::from(x)).collect()).collect()
    } else {
        g.nodes.iter().map(|n| vec![u64::from(!n.is_call())]).collect()
    }
}

/// Per-dimension load cap: `max(⌈S/k⌉, ⌊tolerance · S/k⌋)` for column sum `S`.
pub fn balance_limits(weights: &[Vec<u64>], k: usize, tolerance: f64) -> Vec<u64> {
    let dims = weights.first().map_or(0, Vec::len);
    (0..dims)
        .map(|j| {
            let sum: u64 = weights.iter().map(|w| w[j]).sum();
            let even = sum.div_ceil(k as u64);
            let loose = (tolerance * sum as f64 / k as f64).floor() as u64;
            even.max(loose)
        })
        .collect()
}

/// Load of each part in each dimension.
pub fn part_loads(weights: &[Vec<u64>], part_of: &[usize], k: usize) -> Vec<Vec<u64>> {
    let dims = weights.first().map_or(0, Vec::len);
    let mut loads = vec![vec![0u64; dims]; k];
    for (w, &p) in weights.iter().zip(part_of) {
        for (l, x) in loads[p].iter_mut().zip(w) {
            *l += x;
        }
    }
    loads
}

pub fn is_balanced(loads: &[Vec<u64>], limits: &[u64]) -> bool {
    loads.iter().all(|row| row.iter().zip(limits).all(|(l, cap)| l <= cap))
}

/// Σ |shared qubits| over edges whose endpoints lie in different parts.
pub fn cut_weight(g: &Qmdg, part_of: &[usize]) -> u64 {
    g.edges
        .iter()
        .filter(|e| part_of[e.from - 1] != part_of[e.to - 1])
        .map(|e| e.weight())
        .sum()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionResult {
    pub k: usize,
    /// `part_of[id - 1]` is the part of node `id`.
    pub part_of: Vec<usize>,
    pub edge_cut: u64,
    /// `loads[part][dim]` over the balanced weight rows.
    pub loads: Vec<Vec<u64>>,
    pub limits: Vec<u64>,
}

impl PartitionResult {
    /// Node ids of each part.
    pub fn parts(&self) -> Vec<Vec<usize>> {
        let mut parts = vec![Vec::new(); self.k];
        for (i, &p) in self.part_of.iter().enumerate() {
            parts[p].push(i + 1);
        }
        parts
    }

    pub fn part(&self, id: usize) -> usize {
        self.part_of[id - 1]
    }

    /// `part_index: node ids`, one line per part.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (p, ids) in self.parts().iter().enumerate() {
            let ids: Vec<String> = ids.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "{p}: {}", ids.join(" "));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionConfig {
    pub k: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl PartitionConfig {
    pub fn new(k: usize) -> Self {
        PartitionConfig { k, tolerance: DEFAULT_TOLERANCE, seed: 0 }
    }
}

/// Replaceable partitioning back end.
pub trait Partitioner: Sync {
    fn partition(&self, g: &Qmdg, w: &WeightAssignment, cfg: &PartitionConfig) -> Result<PartitionResult, PartitionError>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Multilevel;

impl Partitioner for Multilevel {
    fn partition(&self, g: &Qmdg, w: &WeightAssignment, cfg: &PartitionConfig) -> Result<PartitionResult, PartitionError> {
        partition(g, w, cfg)
    }
}

/// Undirected weighted graph used at every coarsening level.
#[derive(Clone, Debug)]
struct Level {
    vwgt: Vec<Vec<u64>>,
    /// Sorted by neighbour index.
    adj: Vec<Vec<(usize, u64)>>,
    /// Fine node → coarse node of the next level (filled when coarsened).
    cmap: Vec<usize>,
}

impl Level {
    fn len(&self) -> usize {
        self.vwgt.len()
    }
}

fn fits(load: &[u64], add: &[u64], limits: &[u64]) -> bool {
    load.iter().zip(add).zip(limits).all(|((l, a), cap)| *a == 0 || l + a <= *cap)
}

fn compatible(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x == 0 || *y == 0)
}

fn coarsen(level: &mut Level, limits: &[u64], rng: &mut ChaCha8Rng) -> Level {
    let n = level.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut mate: Vec<Option<usize>> = vec![None; n];
    for &u in &order {
        if mate[u].is_some() {
            continue;
        }
        let mut best: Option<(u64, usize)> = None;
        for &(v, ew) in &level.adj[u] {
            if v == u || mate[v].is_some() || !compatible(&level.vwgt[u], &level.vwgt[v]) {
                continue;
            }
            let merged: Vec<u64> = level.vwgt[u].iter().zip(&level.vwgt[v]).map(|(a, b)| a + b).collect();
            if merged.iter().zip(limits).any(|(m, cap)| m > cap) {
                continue;
            }
            if best.is_none_or(|(bw, bv)| ew > bw || (ew == bw && v < bv)) {
                best = Some((ew, v));
            }
        }
        match best {
            Some((_, v)) => {
                mate[u] = Some(v);
                mate[v] = Some(u);
            }
            None => mate[u] = Some(u),
        }
    }

    let mut cmap = vec![usize::MAX; n];
    let mut count = 0;
    for u in 0..n {
        if cmap[u] != usize::MAX {
            continue;
        }
        cmap[u] = count;
        if let Some(v) = mate[u] {
            cmap[v] = count;
        }
        count += 1;
    }
    let dims = limits.len();
    let mut vwgt = vec![vec![0u64; dims]; count];
    let mut adj_acc: Vec<std::collections::BTreeMap<usize, u64>> = vec![Default::default(); count];
    for u in 0..n {
        let cu = cmap[u];
        for (acc, x) in vwgt[cu].iter_mut().zip(&level.vwgt[u]) {
            *acc += x;
        }
        for &(v, ew) in &level.adj[u] {
            let cv = cmap[v];
            if cv != cu {
                *adj_acc[cu].entry(cv).or_default() += ew;
            }
        }
    }
    level.cmap = cmap;
    Level { vwgt, adj: adj_acc.into_iter().map(|m| m.into_iter().collect()).collect(), cmap: Vec::new() }
}

/// Greedy region growing: part `p` absorbs the most strongly connected
/// admissible node until it holds its share of nodes; the last part takes the rest.
fn initial_partition(level: &Level, k: usize, limits: &[u64]) -> Vec<usize> {
    let n = level.len();
    let mut part_of = vec![usize::MAX; n];
    let mut loads = vec![vec![0u64; limits.len()]; k];
    let mut remaining = n;
    for p in 0..k.saturating_sub(1) {
        let target = remaining.div_ceil(k - p);
        let mut size = 0;
        let mut conn = vec![0u64; n];
        while size < target {
            let pick = (0..n)
                .filter(|&u| part_of[u] == usize::MAX && fits(&loads[p], &level.vwgt[u], limits))
                .max_by(|&a, &b| conn[a].cmp(&conn[b]).then(b.cmp(&a)));
            let Some(u) = pick else { break };
            part_of[u] = p;
            for (l, x) in loads[p].iter_mut().zip(&level.vwgt[u]) {
                *l += x;
            }
            for &(v, ew) in &level.adj[u] {
                conn[v] += ew;
            }
            size += 1;
            remaining -= 1;
        }
    }
    for slot in part_of.iter_mut().filter(|p| **p == usize::MAX) {
        *slot = k - 1;
    }
    part_of
}

struct Refiner<'a> {
    level: &'a Level,
    k: usize,
    limits: &'a [u64],
    part_of: Vec<usize>,
    loads: Vec<Vec<u64>>,
    /// `conn[u][p]`: edge weight from `u` into part `p`.
    conn: Vec<Vec<u64>>,
}

impl<'a> Refiner<'a> {
    fn new(level: &'a Level, k: usize, limits: &'a [u64], part_of: Vec<usize>) -> Self {
        let mut loads = vec![vec![0u64; limits.len()]; k];
        let mut conn = vec![vec![0u64; k]; level.len()];
        for u in 0..level.len() {
            for (l, x) in loads[part_of[u]].iter_mut().zip(&level.vwgt[u]) {
                *l += x;
            }
            for &(v, ew) in &level.adj[u] {
                conn[u][part_of[v]] += ew;
            }
        }
        Refiner { level, k, limits, part_of, loads, conn }
    }

    fn gain(&self, u: usize, to: usize) -> i64 {
        self.conn[u][to] as i64 - self.conn[u][self.part_of[u]] as i64
    }

    fn apply(&mut self, u: usize, to: usize) {
        let from = self.part_of[u];
        for (j, x) in self.level.vwgt[u].iter().enumerate() {
            self.loads[from][j] -= x;
            self.loads[to][j] += x;
        }
        for &(v, ew) in &self.level.adj[u] {
            self.conn[v][from] -= ew;
            self.conn[v][to] += ew;
        }
        self.part_of[u] = to;
    }

    fn overloaded(&self) -> Option<(usize, usize)> {
        for p in 0..self.k {
            for (j, cap) in self.limits.iter().enumerate() {
                if self.loads[p][j] > *cap {
                    return Some((p, j));
                }
            }
        }
        None
    }

    /// Moves weight out of overloaded parts. Returns false when stuck.
    fn rebalance(&mut self) -> bool {
        let mut guard = self.level.len() * self.k + 1;
        while let Some((p, j)) = self.overloaded() {
            if guard == 0 {
                return false;
            }
            guard -= 1;
            let mut best: Option<(i64, usize, usize)> = None;
            for u in 0..self.level.len() {
                if self.part_of[u] != p || self.level.vwgt[u][j] == 0 {
                    continue;
                }
                for q in 0..self.k {
                    if q == p || !fits(&self.loads[q], &self.level.vwgt[u], self.limits) {
                        continue;
                    }
                    let g = self.gain(u, q);
                    if best.is_none_or(|(bg, bu, bq)| g > bg || (g == bg && (u, q) < (bu, bq))) {
                        best = Some((g, u, q));
                    }
                }
            }
            match best {
                Some((_, u, q)) => self.apply(u, q),
                None => return false,
            }
        }
        true
    }

    /// Applies the best admissible positive-gain move until none is left.
    fn refine(&mut self) {
        loop {
            let mut best: Option<(i64, usize, usize)> = None;
            for u in 0..self.level.len() {
                let from = self.part_of[u];
                for q in 0..self.k {
                    if q == from {
                        continue;
                    }
                    let g = self.gain(u, q);
                    if g <= 0 || !fits(&self.loads[q], &self.level.vwgt[u], self.limits) {
                        continue;
                    }
                    if best.is_none_or(|(bg, _, _)| g > bg) {
                        best = Some((g, u, q));
                    }
                }
            }
            match best {
                Some((_, u, q)) => self.apply(u, q),
                None => return,
            }
        }
    }
}

/// Partitions `g` into `cfg.k` parts. Deterministic for a fixed
/// `(graph, weights, k, tolerance, seed)`.
pub fn partition(g: &Qmdg, w: &WeightAssignment, cfg: &PartitionConfig) -> Result<PartitionResult, PartitionError> {
    let k = cfg.k;
    if k == 0 {
        return Err(PartitionError::NoParts);
    }
    if cfg.tolerance.is_nan() || cfg.tolerance < 1.0 {
        return Err(PartitionError::BadTolerance(cfg.tolerance));
    }
    let weights = balance_weights(g, w);
    let limits = balance_limits(&weights, k, cfg.tolerance);
    let n = g.len();

    let part_of = if k == 1 || n == 0 {
        vec![0; n]
    } else {
        let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
        for e in &g.edges {
            adj[e.from - 1].push((e.to - 1, e.weight()));
            adj[e.to - 1].push((e.from - 1, e.weight()));
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        let mut levels = vec![Level { vwgt: weights.clone(), adj, cmap: Vec::new() }];
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let floor = (8 * k).max(16);
        loop {
            let current = levels.last_mut().expect("at least one level");
            if current.len() <= floor {
                break;
            }
            let coarse = coarsen(current, &limits, &mut rng);
            if coarse.len() * 20 > current.len() * 19 {
                current.cmap.clear();
                break;
            }
            levels.push(coarse);
        }

        let coarsest = levels.last().expect("at least one level");
        let mut part_of = initial_partition(coarsest, k, &limits);
        for depth in (0..levels.len()).rev() {
            let level = &levels[depth];
            if depth + 1 < levels.len() {
                part_of = level.cmap.iter().map(|&c| part_of[c]).collect();
            }
            let mut refiner = Refiner::new(level, k, &limits, part_of);
            refiner.rebalance();
            refiner.refine();
            part_of = refiner.part_of;
        }
        part_of
    };

    let loads = part_loads(&weights, &part_of, k);
    for (dim, cap) in limits.iter().enumerate() {
        if let Some(load) = loads.iter().map(|row| row[dim]).find(|l| l > cap) {
            return Err(PartitionError::InfeasibleBalance { dim, load, limit: *cap });
        }
    }
    Ok(PartitionResult { k, edge_cut: cut_weight(g, &part_of), part_of, loads, limits })
}
