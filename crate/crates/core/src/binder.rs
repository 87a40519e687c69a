//! Part-to-core binding as an exact 0-1 quadratic assignment.
//!
//! Minimises `Σ_{m≠x} w[m][x] · d[a(m)][a(x)]` over all bijections `a` from
//! parts to cores by depth-first branch-and-bound. Intra-part traffic is left
//! out: its cost is the same for every assignment.

use std::fmt::Write;
use std::time::{Duration, Instant};

use num_integer::Integer;
use num_rational::Ratio;
use serde::Serialize;

use crate::partition::PartitionResult;
use crate::qmdg::Qmdg;
use crate::requp::RoutingMatrix;
use crate::time::Micros;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// `w[m][x]`: qubits flowing from part `m` to part `x`. The diagonal is zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrafficMatrix {
    pub w: Vec<Vec<u64>>,
}

impl TrafficMatrix {
    pub fn k(&self) -> usize {
        self.w.len()
    }
}

pub fn traffic_matrix(g: &Qmdg, parts: &PartitionResult) -> TrafficMatrix {
    let mut w = vec![vec![0u64; parts.k]; parts.k];
    for e in &g.edges {
        let (m, x) = (parts.part(e.from), parts.part(e.to));
        if m != x {
            w[m][x] += e.weight();
        }
    }
    TrafficMatrix { w }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Binding {
    /// `assignment[part] = core`.
    pub assignment: Vec<usize>,
    pub objective: Micros,
    pub proven_optimal: bool,
}

/// Objective of a given assignment, summed directly.
pub fn objective(w: &TrafficMatrix, d: &RoutingMatrix, assignment: &[usize]) -> Micros {
    let mut total = Micros::ZERO;
    for (m, row) in w.w.iter().enumerate() {
        for (x, &flow) in row.iter().enumerate() {
            if m != x && flow > 0 {
                total += d.delay(assignment[m], assignment[x]).scale(flow);
            }
        }
    }
    total
}

/// Text form of an instance: `k`, then `k` rows of `w`, then `k` rows of `d`.
pub fn dump_instance(w: &TrafficMatrix, d: &RoutingMatrix) -> String {
    let mut out = format!("{}\n", w.k());
    for row in &w.w {
        let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    for row in &d.delays {
        let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

struct Search<'a> {
    k: usize,
    w: &'a [Vec<u64>],
    /// Delays scaled to integers by a common denominator.
    d: Vec<Vec<i128>>,
    part_order: Vec<usize>,
    core_order: Vec<usize>,
    assignment: Vec<Option<usize>>,
    core_used: Vec<bool>,
    best: Vec<usize>,
    best_cost: i128,
    deadline: Instant,
    expanded: u64,
    timed_out: bool,
}

impl Search<'_> {
    fn placement_cost(&self, part: usize, core: usize) -> i128 {
        let mut cost = 0;
        for m in 0..self.k {
            if let Some(c) = self.assignment[m] {
                cost += i128::from(self.w[m][part]) * self.d[c][core] + i128::from(self.w[part][m]) * self.d[core][c];
            }
        }
        cost
    }

    /// Lower bound on the cost still to come from pairs touching an
    /// unassigned part.
    fn remaining_bound(&self) -> i128 {
        let free: Vec<usize> = (0..self.k).filter(|&c| !self.core_used[c]).collect();
        let min_free_pair = free
            .iter()
            .flat_map(|&a| free.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
            .map(|(a, b)| self.d[a][b])
            .min()
            .unwrap_or(0);
        let mut bound = 0;
        for m in 0..self.k {
            for x in 0..self.k {
                let flow = i128::from(self.w[m][x]);
                if m == x || flow == 0 {
                    continue;
                }
                let cheapest = match (self.assignment[m], self.assignment[x]) {
                    (Some(_), Some(_)) => continue,
                    (Some(c), None) => free.iter().map(|&f| self.d[c][f]).min().unwrap_or(0),
                    (None, Some(c)) => free.iter().map(|&f| self.d[f][c]).min().unwrap_or(0),
                    (None, None) => min_free_pair,
                };
                bound += flow * cheapest;
            }
        }
        bound
    }

    fn dfs(&mut self, depth: usize, cost: i128) {
        if self.timed_out {
            return;
        }
        self.expanded += 1;
        if self.expanded.is_multiple_of(1024) && Instant::now() >= self.deadline {
            self.timed_out = true;
            return;
        }
        if depth == self.k {
            let candidate: Vec<usize> = self.assignment.iter().map(|c| c.expect("complete")).collect();
            if cost < self.best_cost || (cost == self.best_cost && candidate < self.best) {
                self.best_cost = cost;
                self.best = candidate;
            }
            return;
        }
        if cost + self.remaining_bound() > self.best_cost {
            return;
        }
        let part = self.part_order[depth];
        for i in 0..self.k {
            let core = self.core_order[i];
            if self.core_used[core] {
                continue;
            }
            let step = self.placement_cost(part, core);
            self.assignment[part] = Some(core);
            self.core_used[core] = true;
            self.dfs(depth + 1, cost + step);
            self.assignment[part] = None;
            self.core_used[core] = false;
        }
    }
}

/// Solves the binding. When the search finishes before `timeout` the result
/// is optimal; among equal-cost optima the lexicographically smallest
/// assignment is returned. Otherwise the best assignment found so far is
/// returned with `proven_optimal = false`.
pub fn bind(w: &TrafficMatrix, d: &RoutingMatrix, timeout: Duration) -> Binding {
    let k = w.k();
    assert_eq!(k, d.k(), "traffic and delay matrices must have the same size");
    if k <= 1 {
        return Binding { assignment: (0..k).collect(), objective: Micros::ZERO, proven_optimal: true };
    }

    let scale: i128 = d.delays.iter().flatten().fold(1, |acc, m| acc.lcm(m.ratio().denom()));
    let scaled: Vec<Vec<i128>> = d
        .delays
        .iter()
        .map(|row| row.iter().map(|m| (m.ratio() * Ratio::from_integer(scale)).to_integer()).collect())
        .collect();

    let traffic = |p: usize| -> u64 { (0..k).map(|x| w.w[p][x] + w.w[x][p]).sum() };
    let mut part_order: Vec<usize> = (0..k).collect();
    part_order.sort_by_key(|&p| (std::cmp::Reverse(traffic(p)), p));
    let core_total = |c: usize| -> i128 { (0..k).filter(|&y| y != c).map(|y| scaled[c][y] + scaled[y][c]).sum() };
    let mut core_order: Vec<usize> = (0..k).collect();
    core_order.sort_by_key(|&c| (core_total(c), c));

    let identity: Vec<usize> = (0..k).collect();
    let mut search = Search {
        k,
        w: &w.w,
        d: scaled,
        part_order,
        core_order,
        assignment: vec![None; k],
        core_used: vec![false; k],
        best: identity.clone(),
        best_cost: 0,
        deadline: Instant::now() + timeout,
        expanded: 0,
        timed_out: false,
    };
    search.best_cost = identity_cost(&search, &identity);
    search.dfs(0, 0);

    let objective = objective(w, d, &search.best);
    debug_assert_eq!(
        objective.ratio() * Ratio::from_integer(scale),
        Ratio::from_integer(search.best_cost)
    );
    Binding { assignment: search.best, objective, proven_optimal: !search.timed_out }
}

fn identity_cost(search: &Search<'_>, assignment: &[usize]) -> i128 {
    let mut cost = 0;
    for m in 0..search.k {
        for x in 0..search.k {
            if m != x {
                cost += i128::from(search.w[m][x]) * search.d[assignment[m]][assignment[x]];
            }
        }
    }
    cost
}
