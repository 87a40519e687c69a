//! Benchmark program generators.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hfqasm::{parse, pretty_print, GateKind, FREDKIN_LISTING};

/// The Fredkin example in canonical layout.
pub fn fredkin() -> String {
    pretty_print(&parse(FREDKIN_LISTING).expect("reference listing parses"))
}

fn toffoli_module() -> String {
    let text = fredkin();
    let end = text.find("module main").expect("listing has a main module");
    text[..end].to_string()
}

/// `n` Toffoli calls sliding along a register of `n + 2` qubits.
pub fn toffoli_chain(n: u32) -> String {
    let mut out = toffoli_module();
    let _ = writeln!(out, "module main(){{");
    let _ = writeln!(out, "  qbit a[{}];", n.max(1) + 2);
    for i in 0..n {
        let _ = writeln!(out, "  Toffoli(a[{}], a[{}], a[{}]);", i, i + 1, i + 2);
    }
    if n == 0 {
        let _ = writeln!(out, "  H (a[0]);");
    }
    let _ = writeln!(out, "}}");
    out
}

/// Shape of a modular synthetic program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SyntheticSpec {
    /// Non-main modules.
    pub modules: u32,
    /// Statements per module body.
    pub gates_per_module: u32,
    /// Data qubits declared in main.
    pub data_qubits: u32,
    /// Local (ancilla) qubits per non-main module.
    pub ancilla_per_module: u32,
    pub seed: u64,
}

const SINGLE: [GateKind; 8] =
    [GateKind::H, GateKind::X, GateKind::Y, GateKind::Z, GateKind::S, GateKind::Sdag, GateKind::T, GateKind::Tdag];

/// Random modular program. Module `Mi` takes the whole data register and
/// may call any `Mj` with `j < i`; main calls every module at least once,
/// so all of them are reachable.
pub fn modular_synthetic(spec: SyntheticSpec) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let q = spec.data_qubits.max(1);
    let a = spec.ancilla_per_module;
    let g = spec.gates_per_module.max(1);
    let mut out = String::new();

    for i in 1..=spec.modules {
        let _ = writeln!(out, "module M{i}(qbit *d){{");
        if a > 0 {
            let _ = writeln!(out, "  qbit t[{a}];");
        }
        let mut pool: Vec<String> = (0..q).map(|j| format!("d[{j}]")).collect();
        pool.extend((0..a).map(|j| format!("t[{j}]")));
        // Pin the parameter extent to the full register.
        let _ = writeln!(out, "  {} (d[{}]);", SINGLE[rng.gen_range(0..SINGLE.len())], q - 1);
        for _ in 1..g {
            if i > 1 && rng.gen_bool(0.15) {
                let _ = writeln!(out, "  M{}(d);", rng.gen_range(1..i));
            } else {
                out.push_str(&random_gate(&mut rng, &pool));
            }
        }
        let _ = writeln!(out, "}}");
    }

    let _ = writeln!(out, "module main(){{");
    let _ = writeln!(out, "  qbit d[{q}];");
    let pool: Vec<String> = (0..q).map(|j| format!("d[{j}]")).collect();
    let mut stmts: Vec<String> = (1..=spec.modules).map(|i| format!("  M{i}(d);\n")).collect();
    for _ in 0..g {
        if spec.modules > 0 && rng.gen_bool(0.3) {
            stmts.push(format!("  M{}(d);\n", rng.gen_range(1..=spec.modules)));
        } else {
            stmts.push(random_gate(&mut rng, &pool));
        }
    }
    stmts.shuffle(&mut rng);
    for s in stmts {
        out.push_str(&s);
    }
    let _ = writeln!(out, "}}");
    out
}

fn random_gate(rng: &mut ChaCha8Rng, pool: &[String]) -> String {
    if pool.len() >= 2 && rng.gen_bool(0.35) {
        let picked: Vec<&String> = pool.choose_multiple(rng, 2).collect();
        format!("  CNOT ({}, {});\n", picked[0], picked[1])
    } else {
        let gate = SINGLE[rng.gen_range(0..SINGLE.len())];
        format!("  {gate} ({});\n", pool.choose(rng).expect("pool is non-empty"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hfqasm::validate;

    fn valid(text: &str) {
        let ast = parse(text).unwrap_or_else(|e| panic!("{e:?}\n{text}"));
        assert!(validate(&ast).is_empty(), "{:?}\n{text}", validate(&ast));
    }

    #[test]
    fn fredkin_matches_listing() {
        let expected: String = FREDKIN_LISTING.lines().filter(|l| !l.trim_start().starts_with('#')).map(|l| format!("{l}\n")).collect();
        assert_eq!(fredkin(), expected);
    }

    #[test]
    fn toffoli_chain_one() {
        let text = toffoli_chain(1);
        valid(&text);
        let ast = parse(&text).unwrap();
        assert_eq!(ast.main().body.len(), 1);
        valid(&toffoli_chain(0));
        valid(&toffoli_chain(7));
    }

    #[test]
    fn synthetic_is_valid_and_deterministic() {
        for seed in 0..20 {
            let spec = SyntheticSpec { modules: 5, gates_per_module: 12, data_qubits: 4, ancilla_per_module: 2, seed };
            let text = modular_synthetic(spec);
            valid(&text);
            assert_eq!(text, modular_synthetic(spec));
        }
        valid(&modular_synthetic(SyntheticSpec { modules: 0, gates_per_module: 3, data_qubits: 1, ancilla_per_module: 0, seed: 1 }));
        valid(&modular_synthetic(SyntheticSpec { modules: 35, gates_per_module: 8, data_qubits: 6, ancilla_per_module: 0, seed: 2 }));
    }
}
