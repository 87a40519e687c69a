//! Per-gate execution latencies in microseconds.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::hfqasm::GateKind;
use crate::kv::{parse_pairs, KvError};
use crate::time::Micros;

#[derive(Debug, Error)]
pub enum LatencyError {
    #[error(transparent)]
    Syntax(#[from] KvError),
    #[error("line {line}: unknown gate `{gate}`")]
    UnknownGate { line: usize, gate: String },
    #[error("line {line}: latency for `{gate}` must be a positive decimal, found `{value}`")]
    BadValue { line: usize, gate: String, value: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LatencyTable {
    entries: BTreeMap<GateKind, Micros>,
}

impl LatencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Placeholder latencies: 31 µs for transversal gates, 62 µs for CNOT,
    /// 93 µs for T/T†. Not measured values; supply a real table for
    /// meaningful latency numbers.
    pub fn placeholder() -> Self {
        let mut table = LatencyTable::uniform(Micros::from_int(31));
        table.set(GateKind::Cnot, Micros::from_int(62));
        table.set(GateKind::T, Micros::from_int(93));
        table.set(GateKind::Tdag, Micros::from_int(93));
        table
    }

    /// Every gate kind with the same latency.
    pub fn uniform(latency: Micros) -> Self {
        LatencyTable { entries: GateKind::ALL.iter().map(|&g| (g, latency)).collect() }
    }

    pub fn set(&mut self, gate: GateKind, latency: Micros) {
        self.entries.insert(gate, latency);
    }

    pub fn get(&self, gate: GateKind) -> Option<Micros> {
        self.entries.get(&gate).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (GateKind, Micros)> + '_ {
        self.entries.iter().map(|(g, l)| (*g, *l))
    }

    /// Parses `GATE = microseconds` lines.
    pub fn parse(text: &str) -> Result<Self, LatencyError> {
        let mut table = LatencyTable::new();
        for (line, key, value) in parse_pairs(text)? {
            let gate = GateKind::from_keyword(&key).ok_or(LatencyError::UnknownGate { line, gate: key.clone() })?;
            let latency: Micros = value
                .parse()
                .ok()
                .filter(|l: &Micros| *l > Micros::ZERO)
                .ok_or_else(|| LatencyError::BadValue { line, gate: key.clone(), value: value.clone() })?;
            table.set(gate, latency);
        }
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(g, l)| format!("{g} = {l}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render() {
        let table = LatencyTable::parse("H = 31\nT\u{2020} = 93.5\nCNOT=62\n").unwrap();
        assert_eq!(table.get(GateKind::Tdag), Some("93.5".parse().unwrap()));
        assert_eq!(table.get(GateKind::X), None);
        assert_eq!(LatencyTable::parse(&table.to_text()).unwrap(), table);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(LatencyTable::parse("Q = 1"), Err(LatencyError::UnknownGate { .. })));
        assert!(matches!(LatencyTable::parse("H = 0"), Err(LatencyError::BadValue { .. })));
        assert!(matches!(LatencyTable::parse("H = fast"), Err(LatencyError::BadValue { .. })));
    }

    #[test]
    fn placeholder_covers_every_gate() {
        let table = LatencyTable::placeholder();
        assert!(GateKind::ALL.iter().all(|g| table.get(*g).is_some()));
        assert_eq!(table.get(GateKind::Cnot), Some(Micros::from_int(62)));
    }
}
