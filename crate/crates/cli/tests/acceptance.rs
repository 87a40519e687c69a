//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qmap_core::bench::{fredkin, modular_synthetic, SyntheticSpec};
use qmap_core::binder::{bind, traffic_matrix, TrafficMatrix, DEFAULT_TIMEOUT};
use qmap_core::driver::{expand_final, map_program, MapConfig};
use qmap_core::hfqasm::{array_extents, parse, pretty_print, validate, GateKind, ProgramAst, Stmt, FREDKIN_LISTING};
use qmap_core::latency::LatencyTable;
use qmap_core::partition::{assign_weights, balance_weights, balance_limits, is_balanced, part_loads, partition, PartitionConfig};
use qmap_core::qmdg::{build_qmdg, first_use_edges, NodeKind, Qmdg, QmdgNode, QubitId};
use qmap_core::requp::{
    cache_widths, core_width, manhattan, memory_qubits, memory_width, qrcr_width, routing_matrix, total_ancilla,
    ArchGeometry, ArchParams, ModuleResourceProfile, QecProfile, RoutingMatrix,
};
use qmap_core::scheduler::{schedule, verify, Placement, ScheduleProblem};
use qmap_core::templates::GateTemplateTable;
use qmap_core::time::Micros;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(started: Instant, limit: Duration) -> Outcome {
    let took = started.elapsed();
    ensure!(took <= limit, "took {took:?}, limit {limit:?}");
    Ok(())
}

fn unit() -> LatencyTable {
    LatencyTable::uniform(Micros::from_int(1))
}

fn toffoli() -> Qmdg {
    let ast = parse(FREDKIN_LISTING).unwrap();
    build_qmdg(&ast.modules[0], &array_extents(&ast), &QecProfile::steane(), &unit(), &HashMap::new()).unwrap()
}

fn grammar_golden() -> Outcome {
    let started = Instant::now();
    let ast = parse(FREDKIN_LISTING).map_err(|e| e.render("fredkin"))?;
    ensure!(validate(&ast).is_empty(), "diagnostics: {:?}", validate(&ast));
    ensure!(ast.modules.len() == 2 && ast.modules[0].body.len() == 15 && ast.main().body.len() == 3, "unexpected shape");
    let again = parse(&pretty_print(&ast)).map_err(|e| e.render("printed"))?;
    ensure!(again.without_spans() == ast.without_spans(), "pretty-print does not reparse to the same tree");
    within(started, Duration::from_secs(1))
}

/// Consecutive users of each Toffoli qubit, read off the listing by hand.
const TOFFOLI_EDGES: [(usize, usize); 18] = [
    (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 10), (10, 12),
    (2, 6), (6, 9), (9, 11), (11, 14), (14, 15),
    (4, 8), (8, 11), (11, 13), (13, 15),
];

fn qmdg_golden() -> Outcome {
    let started = Instant::now();
    let g = toffoli();
    ensure!(g.len() == 15, "{} nodes", g.len());
    let actual: BTreeSet<(usize, usize)> = g.edges.iter().map(|e| (e.from, e.to)).collect();
    let expected: BTreeSet<(usize, usize)> = TOFFOLI_EDGES.into_iter().collect();
    ensure!(g.edges.len() == 18 && actual == expected, "edges {actual:?}");
    let sets = g.level_sets();
    ensure!(sets[6] == vec![7, 9], "L7 = {:?}", sets[6]);
    ensure!(sets[8] == vec![10, 11], "L9 = {:?}", sets[8]);
    ensure!(sets[9] == vec![12, 13, 14], "L10 = {:?}", sets[9]);
    let w = assign_weights(&g, 2);
    ensure!(w.n_con() == 3, "n_con = {}", w.n_con());
    within(started, Duration::from_secs(1))
}

fn weight_golden() -> Outcome {
    let g = toffoli();
    let w = assign_weights(&g, 2);
    for id in 1..=15 {
        let expected: Vec<u32> = match id {
            7 | 9 => vec![1, 0, 0],
            10 | 11 => vec![0, 1, 0],
            12..=14 => vec![0, 0, 1],
            _ => vec![0, 0, 0],
        };
        ensure!(w.vector(id) == expected.as_slice(), "node {id}: {:?}", w.vector(id));
    }
    Ok(())
}

fn partition_golden() -> Outcome {
    let g = toffoli();
    let w = assign_weights(&g, 2);
    let result = partition(&g, &w, &PartitionConfig { k: 2, tolerance: 1.5, seed: 0 }).map_err(|e| e.to_string())?;
    let mut loads = result.loads.clone();
    loads.sort();
    ensure!(loads == vec![vec![1, 1, 1], vec![1, 1, 2]], "loads {:?}", result.loads);
    let weights = balance_weights(&g, &w);
    let limits = balance_limits(&weights, 2, 1.5);
    let horizontal: Vec<usize> = (1..=15).map(|id| usize::from(id > 8)).collect();
    let cut_loads = part_loads(&weights, &horizontal, 2);
    ensure!(cut_loads == vec![vec![1, 0, 0], vec![1, 2, 3]], "horizontal loads {cut_loads:?}");
    ensure!(!is_balanced(&cut_loads, &limits), "horizontal cut accepted with limits {limits:?}");
    Ok(())
}

fn equation_golden() -> Outcome {
    let started = Instant::now();
    let q = QecProfile::steane();
    let p = ArchParams::new(4, 400);
    ensure!(qrcr_width(&p, &q) == 12, "alpha_qrcr = {}", qrcr_width(&p, &q));
    ensure!(core_width(8, 12, &p, &q) == 13, "alpha_core = {}", core_width(8, 12, &p, &q));
    ensure!(cache_widths(12, 24) == (5, 1), "caches = {:?}", cache_widths(12, 24));
    let geom = ArchGeometry { alpha_qrcr: 12, alpha_core: 24, alpha_cache_l1: 5, alpha_cache_l2: 1, alpha_mem: 2, alpha_requp: 78, q_mem: 105 };
    let d = routing_matrix(&geom, &p);
    ensure!(manhattan(0, 3, 4) == 2, "mesh distance");
    ensure!(d.delay(0, 3) == Micros::from_int(540), "d[0][3] = {}", d.delay(0, 3));
    ensure!((0..4).all(|x| d.delay(x, x) == Micros::from_int(86)), "d[x][x] = {}", d.delay(0, 0));
    let profile = ModuleResourceProfile { data_logical: 12, ancilla_logical: 4, l_max: 8, data_total: 20, ancilla_max: 10 };
    ensure!(memory_qubits(&profile, &q) == 105, "Q_mem = {}", memory_qubits(&profile, &q));
    ensure!(memory_width(78, 105) == 2, "alpha_mem = {}", memory_width(78, 105));
    let whole = ModuleResourceProfile { data_logical: 20, ancilla_logical: 10, l_max: 0, data_total: 20, ancilla_max: 10 };
    ensure!(total_ancilla([&whole], &p, &q) == 428, "B_P = {}", total_ancilla([&whole], &p, &q));
    within(started, Duration::from_secs(1))
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(k - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, k - 1);
            out.push(p);
        }
    }
    out
}

fn exhaustive(w: &TrafficMatrix, d: &RoutingMatrix) -> Ratio<i128> {
    let k = w.k();
    permutations(k)
        .into_iter()
        .map(|a| {
            let mut total = Ratio::from_integer(0);
            for m in 0..k {
                for x in (0..k).filter(|&x| x != m) {
                    total += d.delays[a[m]][a[x]].ratio() * Ratio::from_integer(w.w[m][x] as i128);
                }
            }
            total
        })
        .min()
        .unwrap()
}

fn binder_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..500 {
        let k = rng.gen_range(2..=5);
        let w = TrafficMatrix {
            w: (0..k).map(|m| (0..k).map(|x| if m == x { 0 } else { rng.gen_range(0..12) }).collect()).collect(),
        };
        let d = RoutingMatrix::from_delays(
            (0..k).map(|_| (0..k).map(|_| Micros::from_ratio(Ratio::new(rng.gen_range(0..700), rng.gen_range(1..4)))).collect()).collect(),
        );
        let b = bind(&w, &d, DEFAULT_TIMEOUT);
        let best = exhaustive(&w, &d);
        ensure!(b.proven_optimal && b.objective.ratio() == best, "case {case}: {} vs {best}", b.objective);
    }
    let w = TrafficMatrix { w: vec![vec![0, 5, 0], vec![0, 0, 2], vec![0, 0, 0]] };
    let hop = |a: usize, b: usize| if a == b { Micros::ZERO } else { Micros::from_int(i64::from(manhattan(a, b, 3))) };
    let d = RoutingMatrix::from_delays((0..3).map(|a| (0..3).map(|b| hop(a, b)).collect()).collect());
    let b = bind(&w, &d, DEFAULT_TIMEOUT);
    ensure!(b.objective == Micros::from_int(7), "worked example objective {}", b.objective);
    within(started, Duration::from_secs(30))
}

const SINGLE: [GateKind; 8] =
    [GateKind::H, GateKind::X, GateKind::Y, GateKind::Z, GateKind::S, GateKind::Sdag, GateKind::T, GateKind::Tdag];

fn random_dag(rng: &mut ChaCha8Rng, n: usize, qubits: u32) -> Qmdg {
    let qec = QecProfile::steane();
    let nodes = (1..=n)
        .map(|id| {
            let a = rng.gen_range(0..qubits);
            let b = (a + rng.gen_range(1..qubits.max(2))) % qubits;
            let two = qubits > 1 && rng.gen_bool(0.4);
            let operands = if two { vec![QubitId::new("q", Some(a)), QubitId::new("q", Some(b))] } else { vec![QubitId::new("q", Some(a))] };
            let duration = Micros::from_ratio(Ratio::new(rng.gen_range(1..60), rng.gen_range(1..3)));
            if rng.gen_bool(0.07) {
                QmdgNode { id, kind: NodeKind::ModuleCall("M".into()), operands, ancilla: 0, duration }
            } else {
                let gate = if two { GateKind::Cnot } else { SINGLE[rng.gen_range(0..SINGLE.len())] };
                QmdgNode { id, kind: NodeKind::Operation(gate), operands, ancilla: qec.ancilla(gate).unwrap(), duration }
            }
        })
        .collect::<Vec<_>>();
    let edges = first_use_edges(&nodes);
    Qmdg::from_parts("random", nodes, edges)
}

fn longest_path(g: &Qmdg, delays: &[Micros]) -> Micros {
    let mut finish: Vec<Micros> = g.nodes.iter().map(|v| v.duration).collect();
    loop {
        let mut changed = false;
        for (e, d) in g.edges.iter().zip(delays) {
            let c = finish[e.from - 1] + *d + g.nodes[e.to - 1].duration;
            if c > finish[e.to - 1] {
                finish[e.to - 1] = c;
                changed = true;
            }
        }
        if !changed {
            return finish.into_iter().max().unwrap_or(Micros::ZERO);
        }
    }
}

fn scheduler_feasibility() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..1000 {
        let n = rng.gen_range(1..=80);
        let qubits = rng.gen_range(1..12);
        let g = random_dag(&mut rng, n, qubits);
        let k = rng.gen_range(1..=4);
        let parts = partition(&g, &assign_weights(&g, k), &PartitionConfig { k, tolerance: 1.5, seed: case })
            .map_err(|e| format!("case {case}: {e}"))?;
        let d = RoutingMatrix::from_delays(
            (0..k).map(|_| (0..k).map(|_| Micros::from_int(rng.gen_range(0..600))).collect()).collect(),
        );
        let binding = bind(&traffic_matrix(&g, &parts), &d, DEFAULT_TIMEOUT);
        let boundary = Micros::from_int(rng.gen_range(0..200));
        let capacity = rng.gen_range(100..=400);
        let problem = ScheduleProblem::from_mapping(&g, &parts, &binding, &d, |_| boundary, capacity);
        let s = schedule(&problem).map_err(|e| format!("case {case}: {e}"))?;
        let violations = verify(&s, &problem);
        ensure!(violations.is_empty(), "case {case}: {violations:?}");
        let lower = longest_path(&g, &problem.edge_delays);
        ensure!(lower <= s.makespan && s.makespan <= s.initial_bound, "case {case}: {lower} <= {} <= {}", s.makespan, s.initial_bound);
    }

    let t_t = Micros::from_int(10);
    let nodes = vec![
        QmdgNode { id: 1, kind: NodeKind::Operation(GateKind::T), operands: vec![QubitId::new("a", None)], ancilla: 100, duration: t_t },
        QmdgNode { id: 2, kind: NodeKind::Operation(GateKind::T), operands: vec![QubitId::new("b", None)], ancilla: 100, duration: t_t },
    ];
    let g = Qmdg::from_parts("pair", nodes, Vec::new());
    let problem = ScheduleProblem { graph: &g, placement: vec![Placement::Core(0); 2], edge_delays: Vec::new(), core_capacity: 100, k: 1 };
    let s = schedule(&problem).map_err(|e| e.to_string())?;
    ensure!(s.makespan == t_t + t_t, "two-T makespan {}", s.makespan);
    within(started, Duration::from_secs(60))
}

fn distinct_callees(ast: &ProgramAst) -> (usize, usize) {
    let mut calls = 0;
    let mut callees = BTreeSet::new();
    for m in &ast.modules {
        for s in &m.body {
            if let Stmt::Call { callee, .. } = s {
                calls += 1;
                callees.insert(callee.clone());
            }
        }
    }
    (calls, callees.len())
}

fn hierarchy_consistency() -> Outcome {
    let qec = QecProfile::steane();
    let lat = LatencyTable::placeholder();
    let templates = GateTemplateTable::from_latencies(&lat);
    let mut programs = vec![fredkin()];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..100 {
        programs.push(modular_synthetic(SyntheticSpec {
            modules: rng.gen_range(1..=6),
            gates_per_module: rng.gen_range(3..=15),
            data_qubits: rng.gen_range(1..=6),
            ancilla_per_module: rng.gen_range(0..=2),
            seed,
        }));
    }
    for (i, text) in programs.iter().enumerate() {
        let ast = parse(text).map_err(|e| e.render("generated"))?;
        let k = [1, 2, 3, 4][i % 4];
        let params = ArchParams::new(k, 100 * u64::from(k) + 50 * (i as u64 % 3));
        let m = map_program(&ast, &params, &qec, &lat, MapConfig::default()).map_err(|e| format!("program {i}: {e}"))?;
        let fin = expand_final(&m, &templates).map_err(|e| format!("program {i}: {e}"))?;
        ensure!(fin.makespan() == m.latency(), "program {i}: expanded {} vs {}", fin.makespan(), m.latency());
        let (calls, distinct) = distinct_callees(&ast);
        ensure!(m.stats.call_sites == calls, "program {i}: {} call sites, expected {calls}", m.stats.call_sites);
        ensure!(m.stats.memo_hits == calls - distinct, "program {i}: {} memo hits, expected {}", m.stats.memo_hits, calls - distinct);
        ensure!(m.stats.modules_mapped == distinct + 1, "program {i}: {} modules mapped", m.stats.modules_mapped);
    }
    Ok(())
}

fn qmap() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qmap"))
}

fn scratch_dir() -> PathBuf {
    std::env::temp_dir().join(format!("qmap-acceptance-{}", std::process::id()))
}

fn scratch(name: &str) -> PathBuf {
    let dir = scratch_dir();
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(cmd: &mut Command) -> Result<std::process::Output, String> {
    let out = cmd.output().map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "{:?} failed: {}", cmd, String::from_utf8_lossy(&out.stderr));
    Ok(out)
}

fn end_to_end_determinism() -> Outcome {
    let input = scratch("fredkin.qasm");
    std::fs::write(&input, FREDKIN_LISTING).unwrap();
    let latency = scratch("unit.lat");
    std::fs::write(&latency, unit().to_text()).unwrap();
    let mut outputs = Vec::new();
    for run_no in 0..2 {
        let out = scratch(&format!("report{run_no}.json"));
        run(qmap()
            .args(["map", "--k", "2", "--budget", "400", "--qec", "steane-713", "--seed", "5"])
            .arg("--latency-table")
            .arg(&latency)
            .arg("--out")
            .arg(&out)
            .arg(&input))?;
        outputs.push(std::fs::read(&out).unwrap());
    }
    ensure!(!outputs[0].is_empty() && outputs[0] == outputs[1], "reports differ");
    Ok(())
}

fn sweep_sanity() -> Outcome {
    let started = Instant::now();
    let input = scratch("synthetic.qasm");
    run(qmap()
        .args(["gen", "modular-synthetic", "--modules", "5", "--gates", "20", "--qubits", "6", "--ancilla", "2", "--seed", "3"])
        .arg("--out")
        .arg(&input))?;
    let out = scratch("sweep.csv");
    run(qmap().args(["sweep", "--k", "1,2,4", "--budget", "200,400,800", "--format", "csv"]).arg("--out").arg(&out).arg(&input))?;
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    ensure!(lines.next() == Some("k,b_qrcr,feasible,latency_us,total_physical_ancilla,runtime_ms"), "bad header");
    let a_max = u64::from(QecProfile::steane().a_max());
    let mut rows: BTreeMap<(u32, u64), Option<Ratio<i128>>> = BTreeMap::new();
    let mut summary = None;
    for line in lines {
        if let Some(rest) = line.strip_prefix("# best: ") {
            summary = Some(rest.to_string());
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let k: u32 = cells[0].parse().unwrap();
        let b: u64 = cells[1].parse().unwrap();
        let feasible = cells[2] == "true";
        ensure!(feasible == (u64::from(k) * a_max <= b), "row ({k}, {b}) flagged {feasible}");
        let latency = feasible.then(|| Micros::from_ratio(qmap_core::time::parse_decimal(cells[3]).unwrap()).ratio());
        rows.insert((k, b), latency);
    }
    ensure!(rows.len() == 9, "{} rows", rows.len());
    let min = rows.values().flatten().min().copied().ok_or("no feasible row")?;
    let summary = summary.ok_or("missing summary line")?;
    let best_latency = summary.rsplit("latency_us=").next().and_then(qmap_core::time::parse_decimal).ok_or("bad summary")?;
    ensure!(best_latency == min, "argmin {best_latency} vs minimum {min}");
    within(started, Duration::from_secs(120))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("grammar golden", grammar_golden),
        ("dependency graph golden", qmdg_golden),
        ("weight vector golden", weight_golden),
        ("partition quality", partition_golden),
        ("equation values", equation_golden),
        ("binder oracle", binder_oracle),
        ("scheduler feasibility", scheduler_feasibility),
        ("hierarchy consistency", hierarchy_consistency),
        ("end-to-end determinism", end_to_end_determinism),
        ("sweep sanity", sweep_sanity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let ms = started.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(()) => println!("criterion {:>2} {name}: PASS ({ms:.0} ms)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({ms:.0} ms): {why}", i + 1);
            }
        }
    }
    let _ = std::fs::remove_dir_all(scratch_dir());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
