use qmap_core::bench::{fredkin, modular_synthetic, toffoli_chain, SyntheticSpec};
use qmap_core::driver::{expand_final, map_program, report, MapConfig, RecordKind};
use qmap_core::hfqasm::{parse, ProgramAst, Stmt};
use qmap_core::latency::LatencyTable;
use qmap_core::requp::{ArchParams, QecProfile};
use qmap_core::templates::GateTemplateTable;
use qmap_core::time::Micros;

fn unit() -> LatencyTable {
    LatencyTable::uniform(Micros::from_int(1))
}

fn call_count(ast: &ProgramAst) -> usize {
    ast.modules.iter().flat_map(|m| &m.body).filter(|s| matches!(s, Stmt::Call { .. })).count()
}

#[test]
fn main_only_program_takes_one_gate_latency() {
    let ast = parse("module main(){ qbit q; H (q); }").unwrap();
    let lat = LatencyTable::placeholder();
    let params = ArchParams::new(1, 100);
    let qec = QecProfile::steane();
    let m = map_program(&ast, &params, &qec, &lat, MapConfig::default()).unwrap();
    assert_eq!(m.latency(), Micros::from_int(31));
    let r = report(&m, &params, &qec);
    assert_eq!(r.total_latency_us, Micros::from_int(31));
    // No ancilla anywhere; one data qubit sits in cache: ⌈1/8⌉ blocks of 7.
    assert_eq!(r.total_physical_ancilla, 100 + 7);
}

#[test]
fn expansion_matches_hierarchical_makespan() {
    let qec = QecProfile::steane();
    let lat = LatencyTable::placeholder();
    let templates = GateTemplateTable::from_latencies(&lat);
    let mut programs = vec![fredkin(), toffoli_chain(4)];
    for seed in 0..25 {
        programs.push(modular_synthetic(SyntheticSpec {
            modules: 1 + (seed % 5) as u32,
            gates_per_module: 6 + (seed % 7) as u32,
            data_qubits: 2 + (seed % 4) as u32,
            ancilla_per_module: (seed % 3) as u32,
            seed,
        }));
    }
    for (i, text) in programs.iter().enumerate() {
        let ast = parse(text).unwrap();
        for (k, b) in [(1, 100), (2, 400), (4, 800)] {
            let params = ArchParams::new(k, b);
            let m = map_program(&ast, &params, &qec, &lat, MapConfig::default()).unwrap();
            let fin = expand_final(&m, &templates).unwrap();
            assert_eq!(fin.makespan(), m.latency(), "program {i}, k={k}");
            assert_eq!(m.stats.call_sites, call_count(&ast));
            assert_eq!(m.stats.memo_hits, m.stats.call_sites - (m.stats.modules_mapped - 1));
            assert!(fin.records.windows(2).all(|w| (w[0].start, w[0].core) <= (w[1].start, w[1].core)));
        }
    }
}

#[test]
fn fredkin_expands_to_45_gates() {
    let ast = parse(&fredkin()).unwrap();
    let m = map_program(&ast, &ArchParams::new(2, 400), &QecProfile::steane(), &unit(), MapConfig::default()).unwrap();
    let fin = expand_final(&m, &GateTemplateTable::from_latencies(&unit())).unwrap();
    assert_eq!(fin.gate_count(), 45);
    assert!(fin.records.iter().all(|r| matches!(r.kind, RecordKind::Gate(_) | RecordKind::Move | RecordKind::Reconfig)));
    for r in fin.records.iter().filter(|r| matches!(r.kind, RecordKind::Gate(_))) {
        assert!(r.qubits.iter().all(|q| q.starts_with("a[")), "{:?}", r.qubits);
    }
}

#[test]
fn copies_of_a_module_map_like_repeated_calls() {
    let shared = "module Body(qbit x, qbit y){ qbit t; H (x); CNOT (x, t); T (y); CNOT (t, y); }
module main(){ qbit a[3]; Body(a[0], a[1]); Body(a[1], a[2]); H (a[0]); Body(a[2], a[0]); }";
    let copies = "module BodyA(qbit x, qbit y){ qbit t; H (x); CNOT (x, t); T (y); CNOT (t, y); }
module BodyB(qbit x, qbit y){ qbit t; H (x); CNOT (x, t); T (y); CNOT (t, y); }
module BodyC(qbit x, qbit y){ qbit t; H (x); CNOT (x, t); T (y); CNOT (t, y); }
module main(){ qbit a[3]; BodyA(a[0], a[1]); BodyB(a[1], a[2]); H (a[0]); BodyC(a[2], a[0]); }";
    let qec = QecProfile::steane();
    let lat = LatencyTable::placeholder();
    for (k, b) in [(1, 100), (2, 200), (3, 300), (4, 400)] {
        let params = ArchParams::new(k, b);
        let one = map_program(&parse(shared).unwrap(), &params, &qec, &lat, MapConfig::default()).unwrap();
        let many = map_program(&parse(copies).unwrap(), &params, &qec, &lat, MapConfig::default()).unwrap();
        assert_eq!(one.latency(), many.latency(), "k={k}");
        assert_eq!(one.stats.modules_mapped, 2);
        assert_eq!(one.stats.memo_hits, 2);
        assert_eq!(many.stats.modules_mapped, 4);
        assert_eq!(many.stats.memo_hits, 0);
    }
}

#[test]
fn raising_the_budget_keeps_programs_feasible() {
    let ast = parse(&modular_synthetic(SyntheticSpec { modules: 3, gates_per_module: 10, data_qubits: 4, ancilla_per_module: 1, seed: 5 })).unwrap();
    let qec = QecProfile::steane();
    for k in [1u32, 2, 3, 4] {
        let mut was_feasible = false;
        for b in (50..=1000).step_by(50) {
            let ok = map_program(&ast, &ArchParams::new(k, b), &qec, &unit(), MapConfig::default()).is_ok();
            assert!(ok || !was_feasible, "k={k} b={b} became infeasible");
            was_feasible |= ok;
            assert_eq!(ok, u64::from(k) * 100 <= b, "k={k} b={b}");
        }
    }
}

#[test]
fn mapping_is_deterministic() {
    let ast = parse(&modular_synthetic(SyntheticSpec { modules: 4, gates_per_module: 20, data_qubits: 6, ancilla_per_module: 2, seed: 11 })).unwrap();
    let params = ArchParams::new(4, 800);
    let qec = QecProfile::bacon_shor();
    let params = ArchParams { b_qrcr: 4 * 309, ..params };
    let cfg = MapConfig { seed: 3, ..MapConfig::default() };
    let a = report(&map_program(&ast, &params, &qec, &unit(), cfg).unwrap(), &params, &qec).to_json();
    let b = report(&map_program(&ast, &params, &qec, &unit(), cfg).unwrap(), &params, &qec).to_json();
    assert_eq!(a, b);
}

#[test]
fn more_cores_than_operations() {
    let ast = parse("module main(){ qbit q[2]; CNOT (q[0], q[1]); }").unwrap();
    let m = map_program(&ast, &ArchParams::new(9, 900), &QecProfile::steane(), &unit(), MapConfig::default()).unwrap();
    assert_eq!(m.latency(), Micros::from_int(1));
}
