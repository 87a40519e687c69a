//! Resource-constrained list scheduling of a bound dependency graph.
//!
//! Time is continuous (µs). Operations run on their bound core and hold
//! their physical ancilla for their whole duration; a core never holds more
//! than its capacity. Module calls are global: while one runs nothing else
//! does. An edge `x → y` forces `S_y ≥ S_x + T_x + T'_{x,y}`.

use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::binder::Binding;
use crate::partition::PartitionResult;
use crate::qmdg::{Qmdg, QmdgEdge};
use crate::requp::RoutingMatrix;
use crate::time::Micros;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Placement {
    Core(usize),
    Global,
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placement::Core(c) => write!(f, "{c}"),
            Placement::Global => f.write_str("global"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("node {id} needs {ancilla} physical ancilla but a core holds only {capacity}")]
    OverCapacity { id: usize, ancilla: u32, capacity: u64 },
    #[error("problem is malformed: {0}")]
    Malformed(String),
}

/// Everything the scheduler needs: the graph, where each node runs, and the
/// delay charged on each edge (aligned with `graph.edges`).
#[derive(Clone, Debug)]
pub struct ScheduleProblem<'a> {
    pub graph: &'a Qmdg,
    pub placement: Vec<Placement>,
    pub edge_delays: Vec<Micros>,
    /// Physical ancilla available on each core at any instant.
    pub core_capacity: u64,
    pub k: usize,
}

impl<'a> ScheduleProblem<'a> {
    /// Operations run on the core their part is bound to; module calls are
    /// global. Operation-to-operation edges cost the routing delay between
    /// the two cores (the intra-core load delay when they coincide); edges
    /// touching a module call cost `boundary(edge)`.
    pub fn from_mapping(
        graph: &'a Qmdg,
        parts: &PartitionResult,
        binding: &Binding,
        d: &RoutingMatrix,
        boundary: impl Fn(&QmdgEdge) -> Micros,
        core_capacity: u64,
    ) -> Self {
        let placement: Vec<Placement> = graph
            .nodes
            .iter()
            .map(|n| if n.is_call() { Placement::Global } else { Placement::Core(binding.assignment[parts.part(n.id)]) })
            .collect();
        let edge_delays = graph
            .edges
            .iter()
            .map(|e| match (placement[e.from - 1], placement[e.to - 1]) {
                (Placement::Core(a), Placement::Core(b)) => d.delay(a, b),
                _ => boundary(e),
            })
            .collect();
        ScheduleProblem { graph, placement, edge_delays, core_capacity, k: binding.assignment.len() }
    }

    fn check(&self) -> Result<(), ScheduleError> {
        if self.placement.len() != self.graph.len() || self.edge_delays.len() != self.graph.edges.len() {
            return Err(ScheduleError::Malformed("placement or delay vector has the wrong length".into()));
        }
        for (node, place) in self.graph.nodes.iter().zip(&self.placement) {
            match place {
                Placement::Core(c) if *c >= self.k => {
                    return Err(ScheduleError::Malformed(format!("node {} placed on missing core {c}", node.id)));
                }
                Placement::Core(_) if u64::from(node.ancilla) > self.core_capacity => {
                    return Err(ScheduleError::OverCapacity { id: node.id, ancilla: node.ancilla, capacity: self.core_capacity });
                }
                _ => {}
            }
        }
        if self.edge_delays.iter().any(|d| *d < Micros::ZERO) {
            return Err(ScheduleError::Malformed("negative edge delay".into()));
        }
        Ok(())
    }

    /// Serial upper bound: every duration and every edge delay back to back.
    pub fn initial_bound(&self) -> Micros {
        self.graph.nodes.iter().map(|n| n.duration).sum::<Micros>() + self.edge_delays.iter().copied().sum()
    }

    /// Longest path using the edge delays of this problem.
    pub fn critical_path(&self) -> Micros {
        crate::qmdg::critical_path(self.graph, |e| self.edge_delay(e))
    }

    fn edge_delay(&self, e: &QmdgEdge) -> Micros {
        let idx = self
            .graph
            .edges
            .binary_search_by_key(&(e.from, e.to), |x| (x.from, x.to))
            .expect("edge belongs to the graph");
        self.edge_delays[idx]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScheduleEntry {
    pub id: usize,
    pub start: Micros,
    pub duration: Micros,
    pub placement: Placement,
}

impl ScheduleEntry {
    pub fn end(&self) -> Micros {
        self.start + self.duration
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Schedule {
    /// Indexed by node id − 1.
    pub entries: Vec<ScheduleEntry>,
    pub makespan: Micros,
    /// Serial upper bound the makespan never exceeds.
    pub initial_bound: Micros,
}

impl Schedule {
    pub fn entry(&self, id: usize) -> &ScheduleEntry {
        &self.entries[id - 1]
    }

    /// `id kind core start duration`, sorted by start then id.
    pub fn dump(&self, g: &Qmdg) -> String {
        let mut rows: Vec<&ScheduleEntry> = self.entries.iter().collect();
        rows.sort_by_key(|e| (e.start, e.id));
        let mut out = String::new();
        for e in rows {
            let _ = writeln!(out, "{} {} {} {} {}", e.id, g.node(e.id).kind, e.placement, e.start, e.duration);
        }
        out
    }
}

/// Longest delay-weighted path from each node to any sink, including the
/// node itself. `priority[id - 1]`.
pub fn priority(problem: &ScheduleProblem<'_>) -> Vec<Micros> {
    let g = problem.graph;
    let mut tail = vec![Micros::ZERO; g.len()];
    for node in g.nodes.iter().rev() {
        let below = g
            .out_edge_indices(node.id)
            .iter()
            .map(|&e| problem.edge_delays[e] + tail[g.edges[e].to - 1])
            .max()
            .unwrap_or(Micros::ZERO);
        tail[node.id - 1] = node.duration + below;
    }
    tail
}

/// Node ids by descending priority, ties by ascending id.
pub fn priority_order(problem: &ScheduleProblem<'_>) -> Vec<usize> {
    let prio = priority(problem);
    let mut ids: Vec<usize> = (1..=problem.graph.len()).collect();
    ids.sort_by_key(|&id| (Reverse(prio[id - 1]), id));
    ids
}

/// Event-driven list scheduling. At every event the highest-priority ready
/// nodes start if their core has room; a module call starts only when
/// nothing is running.
pub fn schedule(problem: &ScheduleProblem<'_>) -> Result<Schedule, ScheduleError> {
    problem.check()?;
    let g = problem.graph;
    let n = g.len();
    let order = priority_order(problem);
    let rank: Vec<usize> = {
        let mut r = vec![0; n];
        for (pos, &id) in order.iter().enumerate() {
            r[id - 1] = pos;
        }
        r
    };

    let mut start: Vec<Option<Micros>> = vec![None; n];
    let mut pending_preds: Vec<usize> = (1..=n).map(|id| g.in_edge_indices(id).len()).collect();
    let mut ready_at: Vec<Micros> = vec![Micros::ZERO; n];
    // Ready-to-release nodes keyed by priority rank.
    let mut released: BTreeMap<usize, usize> = (1..=n).filter(|&id| pending_preds[id - 1] == 0).map(|id| (rank[id - 1], id)).collect();
    // (end, id) of running nodes.
    let mut running: Vec<(Micros, usize)> = Vec::new();
    let mut core_load = vec![0u64; problem.k];
    let mut call_running = false;
    let mut now = Micros::ZERO;
    let mut remaining = n;

    while remaining > 0 {
        running.retain(|&(end, id)| {
            if end > now {
                return true;
            }
            match problem.placement[id - 1] {
                Placement::Core(c) => core_load[c] -= u64::from(g.node(id).ancilla),
                Placement::Global => call_running = false,
            }
            false
        });

        let candidates: Vec<(usize, usize)> = released
            .iter()
            .filter(|(_, &id)| ready_at[id - 1] <= now)
            .map(|(&r, &id)| (r, id))
            .collect();
        for (r, id) in candidates {
            let node = g.node(id);
            let can_start = match problem.placement[id - 1] {
                Placement::Global => running.is_empty(),
                Placement::Core(c) => !call_running && core_load[c] + u64::from(node.ancilla) <= problem.core_capacity,
            };
            if !can_start {
                continue;
            }
            released.remove(&r);
            start[id - 1] = Some(now);
            remaining -= 1;
            let end = now + node.duration;
            running.push((end, id));
            match problem.placement[id - 1] {
                Placement::Core(c) => core_load[c] += u64::from(node.ancilla),
                Placement::Global => call_running = true,
            }
            for &e in g.out_edge_indices(id) {
                let edge = &g.edges[e];
                let succ = edge.to - 1;
                ready_at[succ] = ready_at[succ].max(end + problem.edge_delays[e]);
                pending_preds[succ] -= 1;
                if pending_preds[succ] == 0 {
                    released.insert(rank[succ], edge.to);
                }
            }
        }

        if remaining == 0 {
            break;
        }
        let next_finish = running.iter().map(|&(end, _)| end).min();
        let next_ready = released.values().map(|&id| ready_at[id - 1]).filter(|&t| t > now).min();
        now = match (next_finish, next_ready) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => {
                return Err(ScheduleError::Malformed("no runnable node and nothing running".into()));
            }
        };
    }

    let entries: Vec<ScheduleEntry> = g
        .nodes
        .iter()
        .map(|node| ScheduleEntry {
            id: node.id,
            start: start[node.id - 1].expect("every node is scheduled"),
            duration: node.duration,
            placement: problem.placement[node.id - 1],
        })
        .collect();
    let makespan = entries.iter().map(ScheduleEntry::end).max().unwrap_or(Micros::ZERO);
    Ok(Schedule { entries, makespan, initial_bound: problem.initial_bound() })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    WrongEntryCount { expected: usize, got: usize },
    EntryMismatch { id: usize },
    NegativeStart { id: usize },
    PrecedenceViolated { from: usize, to: usize, earliest: Micros, start: Micros },
    CapacityExceeded { core: usize, at: Micros, load: u64, capacity: u64 },
    ModuleOverlap { call: usize, other: usize },
    MakespanMismatch { reported: Micros, actual: Micros },
    ExceedsInitialBound { makespan: Micros, bound: Micros },
}

/// Re-derives feasibility of `schedule` from scratch. Empty means feasible.
pub fn verify(schedule: &Schedule, problem: &ScheduleProblem<'_>) -> Vec<Violation> {
    let g = problem.graph;
    let mut out = Vec::new();
    if schedule.entries.len() != g.len() {
        out.push(Violation::WrongEntryCount { expected: g.len(), got: schedule.entries.len() });
        return out;
    }
    for (i, e) in schedule.entries.iter().enumerate() {
        let node = &g.nodes[i];
        if e.id != node.id || e.duration != node.duration || e.placement != problem.placement[i] {
            out.push(Violation::EntryMismatch { id: node.id });
        }
        if e.start < Micros::ZERO {
            out.push(Violation::NegativeStart { id: e.id });
        }
    }

    for (edge, delay) in g.edges.iter().zip(&problem.edge_delays) {
        let earliest = schedule.entries[edge.from - 1].end() + *delay;
        let start = schedule.entries[edge.to - 1].start;
        if start < earliest {
            out.push(Violation::PrecedenceViolated { from: edge.from, to: edge.to, earliest, start });
        }
    }

    // Load only rises at start instants, so checking those suffices.
    for core in 0..problem.k {
        let on_core: Vec<&ScheduleEntry> =
            schedule.entries.iter().filter(|e| e.placement == Placement::Core(core)).collect();
        for probe in &on_core {
            let at = probe.start;
            let load: u64 = on_core
                .iter()
                .filter(|e| e.start <= at && at < e.end())
                .map(|e| u64::from(g.node(e.id).ancilla))
                .sum();
            if load > problem.core_capacity {
                out.push(Violation::CapacityExceeded { core, at, load, capacity: problem.core_capacity });
                break;
            }
        }
    }

    for call in schedule.entries.iter().filter(|e| e.placement == Placement::Global) {
        for other in &schedule.entries {
            if other.id != call.id && other.start < call.end() && call.start < other.end() {
                if other.placement == Placement::Global && other.id < call.id {
                    continue;
                }
                out.push(Violation::ModuleOverlap { call: call.id, other: other.id });
            }
        }
    }

    let actual = schedule.entries.iter().map(ScheduleEntry::end).max().unwrap_or(Micros::ZERO);
    if actual != schedule.makespan {
        out.push(Violation::MakespanMismatch { reported: schedule.makespan, actual });
    }
    let bound = problem.initial_bound();
    if schedule.makespan > bound {
        out.push(Violation::ExceedsInitialBound { makespan: schedule.makespan, bound });
    }
    out
}
