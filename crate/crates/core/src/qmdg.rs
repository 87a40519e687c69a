//! Module call DAG and per-module dependency graphs.
//!
//! A node depends on another when they share a qubit and it is the first
//! later statement touching that qubit. Levels are ASAP (sources at level 1).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::hfqasm::{ArrayExtents, GateKind, ModuleDef, ProgramAst, QubitRef, Stmt, MAIN};
use crate::latency::LatencyTable;
use crate::requp::QecProfile;
use crate::time::Micros;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QmdgError {
    #[error("no ancilla count for gate `{gate}` in the QEC profile")]
    MissingAncilla { gate: GateKind },
    #[error("no latency for gate `{gate}` in the latency table")]
    MissingLatency { gate: GateKind },
    #[error("module `{callee}` has not been mapped yet")]
    UnmappedCallee { callee: String },
}

/// A logical qubit as seen from inside one module.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct QubitId {
    pub name: String,
    pub index: Option<u32>,
}

impl QubitId {
    pub fn new(name: impl Into<String>, index: Option<u32>) -> Self {
        QubitId { name: name.into(), index }
    }
}

impl From<&QubitRef> for QubitId {
    fn from(r: &QubitRef) -> Self {
        QubitId { name: r.name.clone(), index: r.index }
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{}]", self.name, i),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum NodeKind {
    Operation(GateKind),
    ModuleCall(String),
}

impl NodeKind {
    pub fn is_call(&self) -> bool {
        matches!(self, NodeKind::ModuleCall(_))
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Operation(g) => write!(f, "{g}"),
            NodeKind::ModuleCall(m) => write!(f, "call:{m}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QmdgNode {
    /// 1-based, in statement order.
    pub id: usize,
    pub kind: NodeKind,
    /// Distinct qubits in first-use order. Whole-array call arguments are
    /// expanded element by element.
    pub operands: Vec<QubitId>,
    /// Physical ancilla needed while running; zero for module calls.
    pub ancilla: u32,
    pub duration: Micros,
}

impl QmdgNode {
    pub fn is_call(&self) -> bool {
        self.kind.is_call()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QmdgEdge {
    pub from: usize,
    pub to: usize,
    pub shared: Vec<QubitId>,
}

impl QmdgEdge {
    pub fn weight(&self) -> u64 {
        self.shared.len() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Qmdg {
    pub module_name: String,
    pub nodes: Vec<QmdgNode>,
    /// Sorted by `(from, to)`.
    pub edges: Vec<QmdgEdge>,
    /// `levels[i]` is the ASAP level of node `i + 1`.
    pub levels: Vec<u32>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
}

impl Qmdg {
    /// Builds a graph from explicit nodes and edges (ids must be `1..=n`,
    /// edges must point forward). Used by generators and tests.
    pub fn from_parts(module_name: impl Into<String>, nodes: Vec<QmdgNode>, mut edges: Vec<QmdgEdge>) -> Self {
        edges.sort_by_key(|e| (e.from, e.to));
        let n = nodes.len();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            assert!(e.from < e.to && e.to <= n, "edges must point forward between existing nodes");
            succs[e.from - 1].push(i);
            preds[e.to - 1].push(i);
        }
        let mut g = Qmdg { module_name: module_name.into(), nodes, edges, levels: Vec::new(), preds, succs };
        g.levels = levelize(&g);
        g
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &QmdgNode {
        &self.nodes[id - 1]
    }

    pub fn level(&self, id: usize) -> u32 {
        self.levels[id - 1]
    }

    pub fn level_count(&self) -> u32 {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    /// Edges entering node `id`.
    pub fn in_edges(&self, id: usize) -> impl Iterator<Item = &QmdgEdge> + '_ {
        self.preds[id - 1].iter().map(|&e| &self.edges[e])
    }

    /// Edges leaving node `id`.
    pub fn out_edges(&self, id: usize) -> impl Iterator<Item = &QmdgEdge> + '_ {
        self.succs[id - 1].iter().map(|&e| &self.edges[e])
    }

    /// Indices into `edges` of the edges leaving node `id`.
    pub fn out_edge_indices(&self, id: usize) -> &[usize] {
        &self.succs[id - 1]
    }

    /// Indices into `edges` of the edges entering node `id`.
    pub fn in_edge_indices(&self, id: usize) -> &[usize] {
        &self.preds[id - 1]
    }

    /// Node ids grouped by level, ascending.
    pub fn level_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.level_count() as usize];
        for (i, &l) in self.levels.iter().enumerate() {
            sets[l as usize - 1].push(i + 1);
        }
        sets
    }

    /// Line-oriented dump: `node <id> <kind> level=<l>` then
    /// `edge <from> <to> <q1,q2,...>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let _ = writeln!(out, "node {} {} level={}", n.id, n.kind, self.level(n.id));
        }
        for e in &self.edges {
            let shared: Vec<String> = e.shared.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "edge {} {} {}", e.from, e.to, shared.join(","));
        }
        out
    }
}

/// Qubits referenced by `arg`, expanding whole arrays.
pub fn expand_arg(module: &ModuleDef, extents: &ArrayExtents, arg: &QubitRef) -> Vec<QubitId> {
    if arg.index.is_some() {
        return vec![QubitId::from(arg)];
    }
    let size = if let Some(decl) = module.local(&arg.name) {
        decl.size
    } else if module.param(&arg.name).is_some_and(|p| p.is_array) {
        Some(extents.get(&(module.name.clone(), arg.name.clone())).copied().unwrap_or(1))
    } else {
        None
    };
    match size {
        Some(n) => (0..n).map(|i| QubitId::new(arg.name.clone(), Some(i))).collect(),
        None => vec![QubitId::from(arg)],
    }
}

/// Builds the dependency graph of one module. Module-call durations come
/// from `callee_makespans`.
pub fn build_qmdg(
    module: &ModuleDef,
    extents: &ArrayExtents,
    qec: &QecProfile,
    latencies: &LatencyTable,
    callee_makespans: &HashMap<String, Micros>,
) -> Result<Qmdg, QmdgError> {
    let mut nodes = Vec::with_capacity(module.body.len());
    for (i, stmt) in module.body.iter().enumerate() {
        let mut operands: Vec<QubitId> = Vec::new();
        for arg in stmt.args() {
            for q in expand_arg(module, extents, arg) {
                if !operands.contains(&q) {
                    operands.push(q);
                }
            }
        }
        let node = match stmt {
            Stmt::Gate { kind, .. } => QmdgNode {
                id: i + 1,
                kind: NodeKind::Operation(*kind),
                operands,
                ancilla: qec.ancilla(*kind).ok_or(QmdgError::MissingAncilla { gate: *kind })?,
                duration: latencies.get(*kind).ok_or(QmdgError::MissingLatency { gate: *kind })?,
            },
            Stmt::Call { callee, .. } => QmdgNode {
                id: i + 1,
                kind: NodeKind::ModuleCall(callee.clone()),
                operands,
                ancilla: 0,
                duration: *callee_makespans
                    .get(callee)
                    .ok_or_else(|| QmdgError::UnmappedCallee { callee: callee.clone() })?,
            },
        };
        nodes.push(node);
    }
    let edges = first_use_edges(&nodes);
    Ok(Qmdg::from_parts(module.name.clone(), nodes, edges))
}

/// For every qubit, links each user to the next user of that qubit.
pub fn first_use_edges(nodes: &[QmdgNode]) -> Vec<QmdgEdge> {
    let mut last_user: HashMap<&QubitId, usize> = HashMap::new();
    let mut shared: BTreeMap<(usize, usize), Vec<QubitId>> = BTreeMap::new();
    for node in nodes {
        for q in &node.operands {
            if let Some(prev) = last_user.insert(q, node.id) {
                shared.entry((prev, node.id)).or_default().push(q.clone());
            }
        }
    }
    shared.into_iter().map(|((from, to), shared)| QmdgEdge { from, to, shared }).collect()
}

/// ASAP levels: 1 for sources, otherwise one more than the deepest predecessor.
pub fn levelize(g: &Qmdg) -> Vec<u32> {
    let mut levels = vec![1u32; g.nodes.len()];
    // Edges point forward in id order, so one pass in id order suffices.
    for id in 1..=g.nodes.len() {
        let level = g.in_edges(id).map(|e| levels[e.from - 1] + 1).max().unwrap_or(1);
        levels[id - 1] = level;
    }
    levels
}

/// Longest path weight: Σ node durations + Σ edge delays along the heaviest
/// source-to-sink path.
pub fn critical_path(g: &Qmdg, delay: impl Fn(&QmdgEdge) -> Micros) -> Micros {
    let mut finish = vec![Micros::ZERO; g.nodes.len()];
    for node in &g.nodes {
        let start = g.in_edges(node.id).map(|e| finish[e.from - 1] + delay(e)).max().unwrap_or(Micros::ZERO);
        finish[node.id - 1] = start + node.duration;
    }
    finish.into_iter().max().unwrap_or(Micros::ZERO)
}

/// Modules reachable from `main`, children before parents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModuleCallDag {
    /// Post-order; the last entry is `main`.
    pub post_order: Vec<String>,
    /// Direct-call relations `(caller, callee)`, deduplicated.
    pub edges: Vec<(String, String)>,
    /// Defined modules that `main` never reaches.
    pub unreachable: Vec<String>,
}

pub fn build_call_dag(ast: &ProgramAst) -> ModuleCallDag {
    fn visit<'a>(ast: &'a ProgramAst, name: &'a str, seen: &mut HashSet<&'a str>, order: &mut Vec<String>, edges: &mut Vec<(String, String)>) {
        if !seen.insert(name) {
            return;
        }
        let Some(module) = ast.module(name) else { return };
        for callee in module.callees() {
            edges.push((name.to_string(), callee.to_string()));
            visit(ast, callee, seen, order, edges);
        }
        order.push(name.to_string());
    }

    let mut seen = HashSet::new();
    let mut post_order = Vec::new();
    let mut edges = Vec::new();
    visit(ast, MAIN, &mut seen, &mut post_order, &mut edges);
    let unreachable = ast
        .modules
        .iter()
        .filter(|m| !seen.contains(m.name.as_str()))
        .map(|m| m.name.clone())
        .collect();
    ModuleCallDag { post_order, edges, unreachable }
}
