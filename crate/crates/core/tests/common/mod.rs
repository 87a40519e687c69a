#![allow(dead_code)]

use num_rational::Ratio;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use qmap_core::hfqasm::GateKind;
use qmap_core::qmdg::{first_use_edges, NodeKind, Qmdg, QmdgNode, QubitId};
use qmap_core::time::Micros;

pub const SINGLE: [GateKind; 8] =
    [GateKind::H, GateKind::X, GateKind::Y, GateKind::Z, GateKind::S, GateKind::Sdag, GateKind::T, GateKind::Tdag];

pub fn steane_ancilla(g: GateKind) -> u32 {
    match g {
        GateKind::Cnot => 56,
        GateKind::T | GateKind::Tdag => 100,
        _ => 28,
    }
}

/// Random gate sequence over `qubits` qubits with `n` statements; roughly
/// `call_rate` of them are module calls.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, qubits: u32, call_rate: f64) -> Qmdg {
    let mut nodes = Vec::with_capacity(n);
    for id in 1..=n {
        let q = |i: u32| QubitId::new("q", Some(i));
        let a = rng.gen_range(0..qubits);
        let two = qubits > 1 && rng.gen_bool(0.4);
        let mut operands = vec![q(a)];
        if two {
            let mut b = rng.gen_range(0..qubits - 1);
            if b >= a {
                b += 1;
            }
            operands.push(q(b));
        }
        let duration = Micros::from_ratio(Ratio::new(rng.gen_range(1..40), rng.gen_range(1..4)));
        let node = if rng.gen_bool(call_rate) {
            QmdgNode { id, kind: NodeKind::ModuleCall("M".into()), operands, ancilla: 0, duration }
        } else {
            let gate = if two { GateKind::Cnot } else { SINGLE[rng.gen_range(0..SINGLE.len())] };
            QmdgNode { id, kind: NodeKind::Operation(gate), operands, ancilla: steane_ancilla(gate), duration }
        };
        nodes.push(node);
    }
    let edges = first_use_edges(&nodes);
    Qmdg::from_parts("random", nodes, edges)
}

/// Longest path computed by relaxing every edge repeatedly (Bellman-Ford
/// style), independent of any topological ordering.
pub fn longest_path(g: &Qmdg, delays: &[Micros]) -> Micros {
    let n = g.nodes.len();
    let mut finish: Vec<Micros> = g.nodes.iter().map(|v| v.duration).collect();
    for _ in 0..n {
        let mut changed = false;
        for (e, d) in g.edges.iter().zip(delays) {
            let candidate = finish[e.from - 1] + *d + g.nodes[e.to - 1].duration;
            if candidate > finish[e.to - 1] {
                finish[e.to - 1] = candidate;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    finish.into_iter().max().unwrap_or(Micros::ZERO)
}

/// All permutations of `0..k`, lexicographic.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                prefix.push(c);
                rec(prefix, used, out);
                prefix.pop();
                used[c] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}
