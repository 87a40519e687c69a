//! Hierarchical mapping: each module is mapped once, children first, and
//! callers treat a call as a single node lasting the callee's makespan.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::binder::{bind, traffic_matrix, Binding, DEFAULT_TIMEOUT};
use crate::hfqasm::{array_extents, validate, ArrayExtents, Diagnostic, GateKind, ModuleDef, ProgramAst, Stmt, MAIN};
use crate::latency::LatencyTable;
use crate::partition::{assign_weights, Multilevel, PartitionConfig, PartitionError, PartitionResult, Partitioner, DEFAULT_TOLERANCE};
use crate::qmdg::{build_call_dag, build_qmdg, NodeKind, Qmdg, QmdgEdge, QmdgError, QubitId};
use crate::requp::{
    characterize, check_budget, routing_matrix, total_ancilla, ArchGeometry, ArchParams, HalfPerimeterReconfig,
    ModuleResourceProfile, QecProfile, ReconfigPolicy, RequpError, RoutingMatrix,
};
use crate::scheduler::{schedule, verify, Placement, Schedule, ScheduleError, ScheduleProblem, Violation};
use crate::templates::{GateTemplateTable, TemplateError};
use crate::time::Micros;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("program has {} diagnostic(s)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Budget(#[from] RequpError),
    #[error(transparent)]
    Graph(#[from] QmdgError),
    #[error("module {module}: {source}")]
    Partition { module: String, source: PartitionError },
    #[error("module {module}: {source}")]
    Schedule { module: String, source: ScheduleError },
    #[error("module {module}: schedule failed verification: {violations:?}")]
    Verification { module: String, violations: Vec<Violation> },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("inconsistent expansion: records end at {records} but main's makespan is {makespan}")]
    Inconsistent { records: Micros, makespan: Micros },
}

impl DriverError {
    /// True for failures caused by the architecture configuration rather than
    /// the program or an internal fault.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, DriverError::Budget(RequpError::BudgetTooSmall { .. }))
    }

    /// True for failures that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, DriverError::Verification { .. } | DriverError::Inconsistent { .. } | DriverError::Schedule { .. })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MapConfig {
    pub tolerance: f64,
    pub seed: u64,
    pub timeout: Duration,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig { tolerance: DEFAULT_TOLERANCE, seed: 0, timeout: DEFAULT_TIMEOUT }
    }
}

/// Everything computed for one module.
#[derive(Clone, Debug)]
pub struct MappingResult {
    pub module: String,
    pub graph: Qmdg,
    pub profile: ModuleResourceProfile,
    pub geometry: ArchGeometry,
    pub partition: PartitionResult,
    pub routing: RoutingMatrix,
    pub binding: Binding,
    /// Delay charged on each edge of `graph`, aligned with `graph.edges`.
    pub edge_delays: Vec<Micros>,
    pub schedule: Schedule,
    pub makespan: Micros,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MemoStats {
    pub modules_mapped: usize,
    pub call_sites: usize,
    pub memo_hits: usize,
}

/// Mapping of a whole program: one result per reachable module.
#[derive(Clone, Debug)]
pub struct ProgramMapping {
    pub ast: ProgramAst,
    pub extents: ArrayExtents,
    /// Children before parents; `main` last.
    pub order: Vec<String>,
    pub results: BTreeMap<String, MappingResult>,
    pub stats: MemoStats,
}

impl ProgramMapping {
    pub fn main(&self) -> &MappingResult {
        &self.results[MAIN]
    }

    pub fn latency(&self) -> Micros {
        self.main().makespan
    }

    pub fn result(&self, module: &str) -> Option<&MappingResult> {
        self.results.get(module)
    }
}

/// Logical ancilla a module declares.
pub fn declared_qubits(module: &ModuleDef) -> u32 {
    module.locals.iter().map(|d| d.width()).sum()
}

/// Pluggable mapping pipeline.
pub struct Mapper<'a> {
    pub params: &'a ArchParams,
    pub qec: &'a QecProfile,
    pub latencies: &'a LatencyTable,
    pub config: MapConfig,
    pub partitioner: &'a dyn Partitioner,
    pub reconfig: &'a dyn ReconfigPolicy,
}

impl<'a> Mapper<'a> {
    pub fn new(params: &'a ArchParams, qec: &'a QecProfile, latencies: &'a LatencyTable, config: MapConfig) -> Self {
        Mapper { params, qec, latencies, config, partitioner: &Multilevel, reconfig: &HalfPerimeterReconfig }
    }

    pub fn map(&self, ast: &ProgramAst) -> Result<ProgramMapping, DriverError> {
        let diagnostics = validate(ast);
        if !diagnostics.is_empty() {
            return Err(DriverError::Invalid(diagnostics));
        }
        self.params.validate()?;
        check_budget(self.params, self.qec)?;

        let extents = array_extents(ast);
        let dag = build_call_dag(ast);
        let data_total = declared_qubits(ast.main());
        let ancilla_max = dag
            .post_order
            .iter()
            .filter(|m| m.as_str() != MAIN)
            .filter_map(|m| ast.module(m))
            .map(declared_qubits)
            .max()
            .unwrap_or(0);

        let mut results: BTreeMap<String, MappingResult> = BTreeMap::new();
        let mut makespans: HashMap<String, Micros> = HashMap::new();
        let mut stats = MemoStats::default();
        let mut seen_callees: HashSet<String> = HashSet::new();

        for name in &dag.post_order {
            let module = ast.module(name).expect("call DAG only lists defined modules");
            for stmt in &module.body {
                if let Stmt::Call { callee, .. } = stmt {
                    stats.call_sites += 1;
                    if !seen_callees.insert(callee.clone()) {
                        stats.memo_hits += 1;
                    }
                }
            }
            let result = self.map_module(module, &extents, &makespans, &results, data_total, ancilla_max)?;
            makespans.insert(name.clone(), result.makespan);
            results.insert(name.clone(), result);
            stats.modules_mapped += 1;
        }

        Ok(ProgramMapping { ast: ast.clone(), extents, order: dag.post_order, results, stats })
    }

    fn map_module(
        &self,
        module: &ModuleDef,
        extents: &ArrayExtents,
        makespans: &HashMap<String, Micros>,
        done: &BTreeMap<String, MappingResult>,
        data_total: u32,
        ancilla_max: u32,
    ) -> Result<MappingResult, DriverError> {
        let k = self.params.k as usize;
        let graph = build_qmdg(module, extents, self.qec, self.latencies, makespans)?;
        let weights = assign_weights(&graph, k);
        let cfg = PartitionConfig { k, tolerance: self.config.tolerance, seed: self.config.seed };
        let partition = self
            .partitioner
            .partition(&graph, &weights, &cfg)
            .map_err(|source| DriverError::Partition { module: module.name.clone(), source })?;
        let profile = resource_profile(module, &graph, &partition, data_total, ancilla_max);
        let geometry = characterize(&profile, self.params, self.qec);
        let routing = routing_matrix(&geometry, self.params);
        let binding = bind(&traffic_matrix(&graph, &partition), &routing, self.config.timeout);

        let callee_of = |id: usize| -> Option<&MappingResult> {
            match &graph.node(id).kind {
                NodeKind::ModuleCall(c) => Some(&done[c]),
                NodeKind::Operation(_) => None,
            }
        };
        let boundary = |e: &QmdgEdge| -> Micros {
            let (from, to, delta) = match (callee_of(e.from), callee_of(e.to)) {
                (None, Some(c)) => (&geometry, &c.geometry, c.profile.ancilla_logical),
                (Some(c), None) => (&c.geometry, &geometry, profile.ancilla_logical),
                (Some(a), Some(b)) => (&a.geometry, &b.geometry, b.profile.ancilla_logical),
                (None, None) => unreachable!("operation edges use the routing matrix"),
            };
            self.reconfig.delay(from, to, delta, self.params)
        };
        let problem =
            ScheduleProblem::from_mapping(&graph, &partition, &binding, &routing, boundary, self.params.core_capacity());
        let sched = schedule(&problem).map_err(|source| DriverError::Schedule { module: module.name.clone(), source })?;
        let violations = verify(&sched, &problem);
        if !violations.is_empty() {
            return Err(DriverError::Verification { module: module.name.clone(), violations });
        }
        let edge_delays = problem.edge_delays;
        let makespan = sched.makespan;
        Ok(MappingResult {
            module: module.name.clone(),
            graph,
            profile,
            geometry,
            partition,
            routing,
            binding,
            edge_delays,
            schedule: sched,
            makespan,
        })
    }
}

/// Maps `ast` with the default partitioner and reconfiguration model.
pub fn map_program(
    ast: &ProgramAst,
    params: &ArchParams,
    qec: &QecProfile,
    latencies: &LatencyTable,
    config: MapConfig,
) -> Result<ProgramMapping, DriverError> {
    Mapper::new(params, qec, latencies, config).map(ast)
}

/// Logical resource counts of one module once it is partitioned. `main`
/// holds the program's data qubits and no ancilla; any other module's data
/// are the parameter qubits it touches and its locals are ancilla.
pub fn resource_profile(
    module: &ModuleDef,
    graph: &Qmdg,
    partition: &PartitionResult,
    data_total: u32,
    ancilla_max: u32,
) -> ModuleResourceProfile {
    let (data_logical, ancilla_logical) = if module.is_main() {
        (data_total, 0)
    } else {
        let params: HashSet<&QubitId> =
            graph.nodes.iter().flat_map(|n| &n.operands).filter(|q| module.param(&q.name).is_some()).collect();
        (params.len() as u32, declared_qubits(module))
    };
    let l_max = partition
        .parts()
        .iter()
        .map(|ids| {
            ids.iter()
                .filter(|&&id| !graph.node(id).is_call())
                .flat_map(|&id| &graph.node(id).operands)
                .collect::<HashSet<_>>()
                .len() as u32
        })
        .max()
        .unwrap_or(0);
    ModuleResourceProfile { data_logical, ancilla_logical, l_max, data_total, ancilla_max }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum RecordKind {
    Gate(GateKind),
    /// Qubits travelling between cores, or from cache to compute region.
    Move,
    /// Processor reshaping and ancilla loading around a module call.
    Reconfig,
}

impl std::fmt::Display for RecordKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RecordKind::Gate(g) => write!(f, "{g}"),
            RecordKind::Move => f.write_str("move"),
            RecordKind::Reconfig => f.write_str("reconfig"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FinalRecord {
    pub start: Micros,
    pub duration: Micros,
    pub core: Placement,
    pub kind: RecordKind,
    pub qubits: Vec<String>,
    /// Template body; gates only.
    pub mcl: Option<String>,
}

impl FinalRecord {
    pub fn end(&self) -> Micros {
        self.start + self.duration
    }
}

/// The fully inlined program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FinalProgram {
    pub records: Vec<FinalRecord>,
    pub total_latency: Micros,
}

impl FinalProgram {
    /// Latest end time over all records.
    pub fn makespan(&self) -> Micros {
        self.records.iter().map(FinalRecord::end).max().unwrap_or(Micros::ZERO)
    }

    pub fn gate_count(&self) -> usize {
        self.records.iter().filter(|r| matches!(r.kind, RecordKind::Gate(_))).count()
    }

    /// `seq kind core start duration qubits`, one line per record.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (seq, r) in self.records.iter().enumerate() {
            let _ = writeln!(out, "{seq} {} {} {} {} {}", r.kind, r.core, r.start, r.duration, r.qubits.join(","));
        }
        out
    }

    /// MCL bodies keyed by record sequence number.
    pub fn mcl_sidecar(&self) -> String {
        let mut out = String::new();
        for (seq, r) in self.records.iter().enumerate() {
            if let Some(body) = &r.mcl {
                let _ = writeln!(out, "@{seq} {}", r.kind);
                if !body.is_empty() {
                    let _ = writeln!(out, "{body}");
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
enum ArgBinding {
    Scalar(String),
    Array(String),
}

struct Expander<'a> {
    mapping: &'a ProgramMapping,
    templates: &'a GateTemplateTable,
    /// Records tagged with their generation order for stable sorting.
    out: Vec<FinalRecord>,
}

impl Expander<'_> {
    fn resolve(&self, module: &ModuleDef, env: &HashMap<String, ArgBinding>, prefix: &str, q: &QubitId) -> String {
        match env.get(&q.name) {
            Some(ArgBinding::Scalar(s)) => s.clone(),
            Some(ArgBinding::Array(base)) => format!("{base}[{}]", q.index.unwrap_or(0)),
            None => {
                debug_assert!(module.local(&q.name).is_some(), "{} is neither parameter nor local", q.name);
                format!("{prefix}{q}")
            }
        }
    }

    fn expand(&mut self, name: &str, env: &HashMap<String, ArgBinding>, prefix: &str, offset: Micros) -> Result<(), DriverError> {
        let mapping = self.mapping;
        let result = &mapping.results[name];
        let module = mapping.ast.module(name).expect("mapped module exists");
        for node in &result.graph.nodes {
            let entry = result.schedule.entry(node.id);
            let start = offset + entry.start;
            match &node.kind {
                NodeKind::Operation(gate) => {
                    let template = self.templates.get(*gate)?;
                    let qubits = node.operands.iter().map(|q| self.resolve(module, env, prefix, q)).collect();
                    self.out.push(FinalRecord {
                        start,
                        duration: entry.duration,
                        core: entry.placement,
                        kind: RecordKind::Gate(*gate),
                        qubits,
                        mcl: Some(template.body.clone()),
                    });
                }
                NodeKind::ModuleCall(callee) => {
                    let Stmt::Call { args, .. } = &module.body[node.id - 1] else {
                        unreachable!("call node comes from a call statement")
                    };
                    let callee_def = mapping.ast.module(callee).expect("callee exists");
                    let mut inner = HashMap::new();
                    for (param, arg) in callee_def.params.iter().zip(args) {
                        let whole_array = arg.index.is_none()
                            && (module.param(&arg.name).is_some_and(|p| p.is_array)
                                || module.local(&arg.name).is_some_and(|d| d.size.is_some()));
                        let binding = if whole_array {
                            match env.get(&arg.name) {
                                Some(ArgBinding::Array(base)) => ArgBinding::Array(base.clone()),
                                _ => ArgBinding::Array(format!("{prefix}{}", arg.name)),
                            }
                        } else {
                            ArgBinding::Scalar(self.resolve(module, env, prefix, &QubitId::from(arg)))
                        };
                        inner.insert(param.name.clone(), binding);
                    }
                    let inner_prefix = format!("{prefix}{callee}@{}/", node.id);
                    self.expand(callee, &inner, &inner_prefix, start)?;
                }
            }
        }
        for (edge, delay) in result.graph.edges.iter().zip(&result.edge_delays) {
            if delay.is_zero() {
                continue;
            }
            let from = result.schedule.entry(edge.from);
            let to = result.schedule.entry(edge.to);
            let kind = match (from.placement, to.placement) {
                (Placement::Core(_), Placement::Core(_)) => RecordKind::Move,
                _ => RecordKind::Reconfig,
            };
            let core = if kind == RecordKind::Move { to.placement } else { Placement::Global };
            self.out.push(FinalRecord {
                start: offset + from.end(),
                duration: *delay,
                core,
                kind,
                qubits: edge.shared.iter().map(|q| self.resolve(module, env, prefix, q)).collect(),
                mcl: None,
            });
        }
        Ok(())
    }
}

/// Inlines every module call, shifting callee schedules by the call's
/// start, and attaches each gate's template body.
pub fn expand_final(mapping: &ProgramMapping, templates: &GateTemplateTable) -> Result<FinalProgram, DriverError> {
    let mut expander = Expander { mapping, templates, out: Vec::new() };
    expander.expand(MAIN, &HashMap::new(), "", Micros::ZERO)?;
    let mut indexed: Vec<(usize, FinalRecord)> = expander.out.into_iter().enumerate().collect();
    indexed.sort_by_key(|(i, r)| (r.start, r.core, *i));
    let program = FinalProgram { records: indexed.into_iter().map(|(_, r)| r).collect(), total_latency: mapping.latency() };
    let records = program.makespan();
    if records != program.total_latency {
        return Err(DriverError::Inconsistent { records, makespan: program.total_latency });
    }
    Ok(program)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModuleReport {
    pub name: String,
    pub makespan_us: Micros,
    pub nodes: usize,
    pub edges: usize,
    pub edge_cut: u64,
    pub binding: Vec<usize>,
    pub binding_objective_us: Micros,
    pub proven_optimal: bool,
    pub profile: ModuleResourceProfile,
    pub geometry: ArchGeometry,
}

/// Summary of a mapping. Wall-clock time is deliberately absent so that
/// identical runs serialise identically.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub total_latency_us: Micros,
    /// Exact latency as a decimal or fraction.
    pub total_latency_exact: String,
    pub total_physical_ancilla: u64,
    pub k: u32,
    pub b_qrcr: u64,
    pub alpha_int: u32,
    pub beta_pmd_us: Micros,
    pub gamma_l2: String,
    pub qec: String,
    pub memo: MemoStats,
    pub modules: Vec<ModuleReport>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialises");
        text.push('\n');
        text
    }
}

pub fn report(mapping: &ProgramMapping, params: &ArchParams, qec: &QecProfile) -> Report {
    let modules = mapping
        .order
        .iter()
        .map(|name| {
            let r = &mapping.results[name];
            ModuleReport {
                name: name.clone(),
                makespan_us: r.makespan,
                nodes: r.graph.len(),
                edges: r.graph.edges.len(),
                edge_cut: r.partition.edge_cut,
                binding: r.binding.assignment.clone(),
                binding_objective_us: r.binding.objective,
                proven_optimal: r.binding.proven_optimal,
                profile: r.profile,
                geometry: r.geometry,
            }
        })
        .collect();
    Report {
        total_latency_us: mapping.latency(),
        total_latency_exact: mapping.latency().to_string(),
        total_physical_ancilla: total_ancilla(mapping.results.values().map(|r| &r.profile), params, qec),
        k: params.k,
        b_qrcr: params.b_qrcr,
        alpha_int: params.alpha_int,
        beta_pmd_us: params.beta_pmd,
        gamma_l2: crate::time::format_rational(&params.gamma_l2),
        qec: qec.name.clone(),
        memo: mapping.stats,
        modules,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hfqasm::{parse, FREDKIN_LISTING};

    fn unit() -> LatencyTable {
        LatencyTable::uniform(Micros::from_int(1))
    }

    #[test]
    fn single_gate_program() {
        let ast = parse("module main(){ qbit q; H (q); }").unwrap();
        let params = ArchParams::new(1, 100);
        let qec = QecProfile::steane();
        let lat = LatencyTable::placeholder();
        let m = map_program(&ast, &params, &qec, &lat, MapConfig::default()).unwrap();
        assert_eq!(m.latency(), Micros::from_int(31));
        let fin = expand_final(&m, &GateTemplateTable::from_latencies(&lat)).unwrap();
        assert_eq!(fin.records.len(), 1);
        assert_eq!(fin.records[0].start, Micros::ZERO);
        assert_eq!(fin.records[0].qubits, vec!["q".to_string()]);
    }

    #[test]
    fn fredkin_maps_toffoli_once() {
        let ast = parse(FREDKIN_LISTING).unwrap();
        let params = ArchParams::new(1, 100);
        let qec = QecProfile::steane();
        let m = map_program(&ast, &params, &qec, &unit(), MapConfig::default()).unwrap();
        assert_eq!(m.order, vec!["Toffoli".to_string(), MAIN.to_string()]);
        assert_eq!(m.stats, MemoStats { modules_mapped: 2, call_sites: 3, memo_hits: 2 });
        let toffoli = m.result("Toffoli").unwrap().makespan;
        for node in &m.main().graph.nodes {
            assert_eq!(node.duration, toffoli);
        }
        let fin = expand_final(&m, &GateTemplateTable::from_latencies(&unit())).unwrap();
        assert_eq!(fin.gate_count(), 45);
        assert_eq!(fin.makespan(), m.latency());
        // Second call is Toffoli(a[0], a[1], a[2]): its first gate is H on a[2].
        let first_h_of_second = fin
            .records
            .iter()
            .filter(|r| r.kind == RecordKind::Gate(GateKind::H))
            .nth(2)
            .unwrap();
        assert_eq!(first_h_of_second.qubits, vec!["a[2]".to_string()]);
    }

    #[test]
    fn nested_shifts_add_up() {
        let text = "module Leaf(qbit x){ qbit t; H (x); CNOT (x, t); }
module Mid(qbit *r){ X (r[1]); Leaf(r[0]); Leaf(r[1]); }
module main(){ qbit a[2]; H (a[0]); Mid(a); }";
        let ast = parse(text).unwrap();
        let params = ArchParams::new(1, 100);
        let qec = QecProfile::steane();
        let m = map_program(&ast, &params, &qec, &unit(), MapConfig::default()).unwrap();
        let fin = expand_final(&m, &GateTemplateTable::from_latencies(&unit())).unwrap();
        assert_eq!(fin.makespan(), m.latency());
        let main_call = m.main().schedule.entry(2).start;
        let mid_call = m.result("Mid").unwrap().schedule.entry(3).start;
        let leaf_cnot = m.result("Leaf").unwrap().schedule.entry(2).start;
        let rec = fin
            .records
            .iter()
            .find(|r| r.kind == RecordKind::Gate(GateKind::Cnot) && r.qubits[0] == "a[1]")
            .unwrap();
        assert_eq!(rec.start, main_call + mid_call + leaf_cnot);
        assert_eq!(rec.qubits[1], "Mid@2/Leaf@3/t");
    }

    #[test]
    fn infeasible_budget_is_reported() {
        let ast = parse(FREDKIN_LISTING).unwrap();
        let err = map_program(&ast, &ArchParams::new(4, 300), &QecProfile::steane(), &unit(), MapConfig::default())
            .unwrap_err();
        assert!(err.is_infeasible());
    }

    #[test]
    fn missing_template() {
        let ast = parse("module main(){ qbit q; T (q); }").unwrap();
        let m = map_program(&ast, &ArchParams::new(1, 100), &QecProfile::steane(), &unit(), MapConfig::default()).unwrap();
        let err = expand_final(&m, &GateTemplateTable::new()).unwrap_err();
        assert!(matches!(err, DriverError::Template(TemplateError::MissingTemplate { gate: GateKind::T })));
    }

    #[test]
    fn report_is_stable() {
        let ast = parse(FREDKIN_LISTING).unwrap();
        let params = ArchParams::new(2, 400);
        let qec = QecProfile::steane();
        let a = report(&map_program(&ast, &params, &qec, &unit(), MapConfig::default()).unwrap(), &params, &qec);
        let b = report(&map_program(&ast, &params, &qec, &unit(), MapConfig::default()).unwrap(), &params, &qec);
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.modules.len(), 2);
    }
}
