//! Reconfigurable multi-core processor model.
//!
//! Holds the QEC ancilla profiles, the architecture parameters, and the
//! closed-form sizing of every region of a core (compute region, L1/L2
//! caches, surrounding memory) for one module. All widths are computed with
//! exact integer/rational arithmetic before the outer ceilings.

use std::collections::BTreeMap;

use num_integer::Roots;
use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::hfqasm::GateKind;
use crate::kv::{parse_pairs, KvError};
use crate::time::{Micros, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RequpError {
    #[error("QRCR budget {budget} is too small for {k} core(s): at least {required} physical ancilla are required")]
    BudgetTooSmall { budget: u64, k: u32, required: u64 },
    #[error("invalid architecture parameters: {0}")]
    InvalidParams(String),
    #[error("invalid QEC profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Syntax(#[from] KvError),
}

/// Physical ancilla demand of each fault-tolerant gate under one QEC code.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QecProfile {
    pub name: String,
    /// Physical data qubits per logical qubit.
    pub l_code: u32,
    pub ancilla_per_op: BTreeMap<GateKind, u32>,
}

const PREP_AND_MEASURE: [GateKind; 4] = [GateKind::Prep0, GateKind::MeasX, GateKind::MeasY, GateKind::MeasZ];

impl QecProfile {
    fn with_defaults(name: &str, l_code: u32, entries: &[(&[GateKind], u32)]) -> Self {
        let mut ancilla_per_op = BTreeMap::new();
        for (gates, count) in entries {
            for g in *gates {
                ancilla_per_op.insert(*g, *count);
            }
        }
        let mut profile = QecProfile { name: name.to_string(), l_code, ancilla_per_op };
        profile.fill_prep_measure();
        profile
    }

    /// [[7,1,3]] Steane code.
    pub fn steane() -> Self {
        use GateKind::*;
        Self::with_defaults("steane-713", 7, &[(&[X, Y, Z, H, S, Sdag], 28), (&[Cnot], 56), (&[T, Tdag], 100)])
    }

    /// [[9,1,3]] Bacon-Shor code.
    pub fn bacon_shor() -> Self {
        use GateKind::*;
        Self::with_defaults("bacon-shor-913", 9, &[(&[X, Y, Z, H], 18), (&[Cnot], 36), (&[S, Sdag], 58), (&[T, Tdag], 309)])
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "steane-713" | "steane" => Some(Self::steane()),
            "bacon-shor-913" | "bacon-shor" => Some(Self::bacon_shor()),
            _ => None,
        }
    }

    /// Preparation and measurement default to the single-qubit transversal
    /// cost (the `X` entry) unless given explicitly.
    fn fill_prep_measure(&mut self) {
        if let Some(&x) = self.ancilla_per_op.get(&GateKind::X) {
            for g in PREP_AND_MEASURE {
                self.ancilla_per_op.entry(g).or_insert(x);
            }
        }
    }

    /// Parses `name = ...`, `l_code = ...` and `GATE = count` lines.
    pub fn parse(text: &str) -> Result<Self, RequpError> {
        let mut name = None;
        let mut l_code = None;
        let mut ancilla_per_op = BTreeMap::new();
        for (line, key, value) in parse_pairs(text)? {
            let bad = |what: &str| RequpError::InvalidProfile(format!("line {line}: {what}"));
            match key.as_str() {
                "name" => name = Some(value),
                "l_code" => {
                    let n: u32 = value.parse().map_err(|_| bad("l_code must be a positive integer"))?;
                    l_code = Some(n);
                }
                gate => {
                    let kind = GateKind::from_keyword(gate).ok_or_else(|| bad(&format!("unknown gate `{gate}`")))?;
                    let n: u32 = value.parse().map_err(|_| bad(&format!("ancilla count for `{gate}` must be an integer")))?;
                    ancilla_per_op.insert(kind, n);
                }
            }
        }
        let mut profile = QecProfile {
            name: name.ok_or_else(|| RequpError::InvalidProfile("missing `name`".into()))?,
            l_code: l_code.ok_or_else(|| RequpError::InvalidProfile("missing `l_code`".into()))?,
            ancilla_per_op,
        };
        profile.fill_prep_measure();
        profile.check()?;
        Ok(profile)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("name = {}\nl_code = {}\n", self.name, self.l_code);
        for (g, n) in &self.ancilla_per_op {
            out.push_str(&format!("{g} = {n}\n"));
        }
        out
    }

    fn check(&self) -> Result<(), RequpError> {
        if self.l_code == 0 {
            return Err(RequpError::InvalidProfile("l_code must be positive".into()));
        }
        if self.ancilla_per_op.is_empty() {
            return Err(RequpError::InvalidProfile("no gate entries".into()));
        }
        if let Some((g, _)) = self.ancilla_per_op.iter().find(|(_, n)| **n == 0) {
            return Err(RequpError::InvalidProfile(format!("ancilla count for `{g}` must be positive")));
        }
        Ok(())
    }

    pub fn ancilla(&self, gate: GateKind) -> Option<u32> {
        self.ancilla_per_op.get(&gate).copied()
    }

    pub fn a_min(&self) -> u32 {
        self.ancilla_per_op.values().copied().min().unwrap_or(0)
    }

    pub fn a_max(&self) -> u32 {
        self.ancilla_per_op.values().copied().max().unwrap_or(0)
    }
}

/// Architecture inputs shared by every module.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ArchParams {
    /// Core count `k`.
    pub k: u32,
    /// Interconnect width in grid cells.
    pub alpha_int: u32,
    /// Qubit one-step delay.
    pub beta_pmd: Micros,
    /// Weight of the L2 cache width in the intra-core load delay.
    #[serde(serialize_with = "serialize_ratio")]
    pub gamma_l2: Rational,
    /// Physical ancilla budget shared by all compute regions.
    pub b_qrcr: u64,
}

fn serialize_ratio<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(*r.numer() as f64 / *r.denom() as f64)
}

impl ArchParams {
    /// Defaults: α_int = 3, β_PMD = 10 µs, γ_L2 = 0.2.
    pub fn new(k: u32, b_qrcr: u64) -> Self {
        ArchParams { k, alpha_int: 3, beta_pmd: Micros::from_int(10), gamma_l2: Ratio::new(1, 5), b_qrcr }
    }

    pub fn validate(&self) -> Result<(), RequpError> {
        if self.k == 0 {
            return Err(RequpError::InvalidParams("k must be at least 1".into()));
        }
        if self.beta_pmd <= Micros::ZERO {
            return Err(RequpError::InvalidParams("beta_pmd must be positive".into()));
        }
        if self.gamma_l2 < Ratio::from_integer(0) || self.gamma_l2 > Ratio::from_integer(1) {
            return Err(RequpError::InvalidParams("gamma_l2 must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Per-core ancilla budget as an exact rational.
    pub fn per_core_budget(&self) -> Rational {
        Ratio::new(i128::from(self.b_qrcr), i128::from(self.k))
    }

    /// Per-core ancilla capacity used by the scheduler, ⌊B_QRCR / k⌋.
    pub fn core_capacity(&self) -> u64 {
        self.b_qrcr / u64::from(self.k)
    }
}

/// `k · A_max ≤ B_QRCR`: every core must be able to run the hungriest gate.
pub fn check_budget(params: &ArchParams, qec: &QecProfile) -> Result<(), RequpError> {
    params.validate()?;
    let required = u64::from(params.k) * u64::from(qec.a_max());
    if required > params.b_qrcr {
        return Err(RequpError::BudgetTooSmall { budget: params.b_qrcr, k: params.k, required });
    }
    Ok(())
}

/// Logical qubit counts for one module.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ModuleResourceProfile {
    /// Logical data qubits the module touches.
    pub data_logical: u32,
    /// Logical ancilla the module declares.
    pub ancilla_logical: u32,
    /// Largest logical qubit count (data + ancilla) on any one core.
    pub l_max: u32,
    /// Logical data qubits of the whole program.
    pub data_total: u32,
    /// Largest logical ancilla count of any module in the program.
    pub ancilla_max: u32,
}

/// Row-major placement of `k` cores on a grid with ⌈√k⌉ columns.
pub fn mesh_position(core: usize, k: u32) -> (u32, u32) {
    let cols = mesh_columns(k);
    ((core as u32) / cols, (core as u32) % cols)
}

fn mesh_columns(k: u32) -> u32 {
    let r = k.sqrt();
    if r * r == k {
        r
    } else {
        r + 1
    }
}

pub fn manhattan(a: usize, b: usize, k: u32) -> u32 {
    let (ra, ca) = mesh_position(a, k);
    let (rb, cb) = mesh_position(b, k);
    ra.abs_diff(rb) + ca.abs_diff(cb)
}

/// Smallest integer `n ≥ 0` with `n² ≥ value`.
pub fn ceil_sqrt(value: Rational) -> u64 {
    if value <= Ratio::from_integer(0) {
        return 0;
    }
    let (p, q) = (*value.numer(), *value.denom());
    // n² ≥ p/q  ⇔  n²·q ≥ p
    let mut n = (p / q).sqrt() as u64;
    while (i128::from(n) * i128::from(n)) * q < p {
        n += 1;
    }
    while n > 0 && (i128::from(n - 1) * i128::from(n - 1)) * q >= p {
        n -= 1;
    }
    n
}

/// ⌈((√3 − 1)/2) · a⌉, evaluated exactly: the least `n` with `(2n + a)² ≥ 3a²`.
fn ceil_l1_ratio(a: u64) -> u64 {
    let a = u128::from(a);
    let mut n: u128 = ((3 * a * a).sqrt().saturating_sub(a)) / 2;
    while (2 * n + a) * (2 * n + a) < 3 * a * a {
        n += 1;
    }
    while n > 0 && (2 * (n - 1) + a) * (2 * (n - 1) + a) >= 3 * a * a {
        n -= 1;
    }
    n as u64
}

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Widths of every region for one module, in grid cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ArchGeometry {
    pub alpha_qrcr: u64,
    pub alpha_core: u64,
    pub alpha_cache_l1: u64,
    pub alpha_cache_l2: u64,
    pub alpha_mem: u64,
    pub alpha_requp: u64,
    /// Physical qubits parked in memory.
    pub q_mem: u64,
}

/// Compute-region width: ⌈√((B/k)/A_min · l_code + B/k)⌉.
pub fn qrcr_width(params: &ArchParams, qec: &QecProfile) -> u64 {
    let per_core = params.per_core_budget();
    let data = per_core / Ratio::from_integer(i128::from(qec.a_min().max(1))) * Ratio::from_integer(i128::from(qec.l_code));
    ceil_sqrt(data + per_core)
}

/// Core width: ⌈√(⌈9/8 · L_max⌉ · l_code + B/k)⌉, never narrower than the
/// compute region it contains.
pub fn core_width(l_max: u32, alpha_qrcr: u64, params: &ArchParams, qec: &QecProfile) -> u64 {
    let logical = ceil_div(9 * u64::from(l_max), 8);
    let cells = Ratio::from_integer(i128::from(logical * u64::from(qec.l_code))) + params.per_core_budget();
    ceil_sqrt(cells).max(alpha_qrcr)
}

/// L1 and L2 cache widths for a given compute-region and core width.
pub fn cache_widths(alpha_qrcr: u64, alpha_core: u64) -> (u64, u64) {
    let spare = alpha_core.saturating_sub(alpha_qrcr);
    let l1 = ceil_l1_ratio(alpha_qrcr).min(spare / 2);
    // ⌈spare/2 − l1⌉ = ⌈(spare − 2·l1)/2⌉
    let l2 = ceil_div(spare - 2 * l1, 2);
    (l1, l2)
}

/// Physical qubits held in memory for a module.
pub fn memory_qubits(profile: &ModuleResourceProfile, qec: &QecProfile) -> u64 {
    let idle_ancilla = u64::from(profile.ancilla_max.saturating_sub(profile.ancilla_logical));
    let idle_data = ceil_div(9 * u64::from(profile.data_total.saturating_sub(profile.data_logical)), 8);
    (idle_ancilla + idle_data) * u64::from(qec.l_code)
}

/// Half perimeter of the processor: `(n_{1,k} + 1)·α_core + n_{1,k}·α_int`.
pub fn processor_half_perimeter(alpha_core: u64, params: &ArchParams) -> u64 {
    let hops = u64::from(manhattan(0, params.k as usize - 1, params.k));
    (hops + 1) * alpha_core + hops * u64::from(params.alpha_int)
}

/// Memory ring width: ⌈√(α_Requp² + 2·Q_mem) − α_Requp⌉.
pub fn memory_width(alpha_requp: u64, q_mem: u64) -> u64 {
    let total = Ratio::from_integer(i128::from(alpha_requp) * i128::from(alpha_requp) + 2 * i128::from(q_mem));
    ceil_sqrt(total) - alpha_requp
}

/// Sizes every region of the processor for one module.
pub fn characterize(profile: &ModuleResourceProfile, params: &ArchParams, qec: &QecProfile) -> ArchGeometry {
    let alpha_qrcr = qrcr_width(params, qec);
    let alpha_core = core_width(profile.l_max, alpha_qrcr, params, qec);
    let (alpha_cache_l1, alpha_cache_l2) = cache_widths(alpha_qrcr, alpha_core);
    let q_mem = memory_qubits(profile, qec);
    let alpha_requp = processor_half_perimeter(alpha_core, params);
    let alpha_mem = memory_width(alpha_requp, q_mem);
    ArchGeometry { alpha_qrcr, alpha_core, alpha_cache_l1, alpha_cache_l2, alpha_mem, alpha_requp, q_mem }
}

/// Pairwise core distances and qubit transfer delays.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoutingMatrix {
    pub positions: Vec<(u32, u32)>,
    pub distances: Vec<Vec<u32>>,
    pub delays: Vec<Vec<Micros>>,
}

impl RoutingMatrix {
    pub fn k(&self) -> usize {
        self.delays.len()
    }

    pub fn delay(&self, from: usize, to: usize) -> Micros {
        self.delays[from][to]
    }

    /// Wraps an explicit delay table, e.g. a hand-built test instance.
    pub fn from_delays(delays: Vec<Vec<Micros>>) -> Self {
        let k = delays.len() as u32;
        let positions = (0..k as usize).map(|c| mesh_position(c, k)).collect();
        let distances = (0..k as usize).map(|a| (0..k as usize).map(|b| manhattan(a, b, k)).collect()).collect();
        RoutingMatrix { positions, distances, delays }
    }
}

/// Inter-core delay `n·(α_core + α_int)·β`, intra-core cache-to-QRCR delay
/// `(α_QRCR + α_L1 + γ·α_L2)/2 · β`.
pub fn routing_matrix(geom: &ArchGeometry, params: &ArchParams) -> RoutingMatrix {
    let k = params.k;
    let hop = params.beta_pmd.scale(geom.alpha_core + u64::from(params.alpha_int));
    let local_cells = Ratio::from_integer(i128::from(geom.alpha_qrcr + geom.alpha_cache_l1))
        + params.gamma_l2 * Ratio::from_integer(i128::from(geom.alpha_cache_l2));
    let local = params.beta_pmd * (local_cells / Ratio::from_integer(2));
    let positions = (0..k as usize).map(|c| mesh_position(c, k)).collect();
    let distances: Vec<Vec<u32>> = (0..k as usize).map(|a| (0..k as usize).map(|b| manhattan(a, b, k)).collect()).collect();
    let delays = distances
        .iter()
        .enumerate()
        .map(|(a, row)| {
            row.iter()
                .enumerate()
                .map(|(b, &n)| if a == b { local } else { hop.scale(u64::from(n)) })
                .collect()
        })
        .collect();
    RoutingMatrix { positions, distances, delays }
}

/// Total physical ancilla of the program: the QRCR budget plus the largest
/// per-module cache and memory error-correction overhead.
pub fn total_ancilla<'a>(
    profiles: impl IntoIterator<Item = &'a ModuleResourceProfile>,
    params: &ArchParams,
    qec: &QecProfile,
) -> u64 {
    let overhead = profiles
        .into_iter()
        .map(|p| {
            let cached = ceil_div(u64::from(p.ancilla_logical + p.data_logical), 8);
            let stored = ceil_div(u64::from(p.data_total.saturating_sub(p.data_logical)), 8);
            (cached + stored) * u64::from(qec.l_code)
        })
        .max()
        .unwrap_or(0);
    params.b_qrcr + overhead
}

/// Delay of switching the processor between two module configurations.
pub trait ReconfigPolicy: Sync {
    fn delay(&self, from: &ArchGeometry, to: &ArchGeometry, ancilla_delta: u32, params: &ArchParams) -> Micros;
}

/// Default reconfiguration model: the larger of a reshaping cost (worst-case
/// half-perimeter travel across the old/new processor plus memory ring) and
/// a logical-ancilla load cost (memory ring to the farthest compute region).
#[derive(Clone, Copy, Debug, Default)]
pub struct HalfPerimeterReconfig;

impl ReconfigPolicy for HalfPerimeterReconfig {
    fn delay(&self, from: &ArchGeometry, to: &ArchGeometry, ancilla_delta: u32, params: &ArchParams) -> Micros {
        let transform = if from == to {
            Micros::ZERO
        } else {
            params.beta_pmd.scale(from.alpha_requp.max(to.alpha_requp) + from.alpha_mem.max(to.alpha_mem))
        };
        let load = if ancilla_delta == 0 {
            Micros::ZERO
        } else {
            let cells = Ratio::new(i128::from(to.alpha_requp), 2) + Ratio::from_integer(i128::from(to.alpha_mem));
            params.beta_pmd * cells
        };
        transform.max(load)
    }
}

/// Convenience wrapper around the default policy.
pub fn reconfig_delay(from: &ArchGeometry, to: &ArchGeometry, ancilla_delta: u32, params: &ArchParams) -> Micros {
    HalfPerimeterReconfig.delay(from, to, ancilla_delta, params)
}
