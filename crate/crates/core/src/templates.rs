//! Gate templates: the physical control text and latency of each FT gate.
//!
//! File format: a header line `[GATE] latency_us` opens a section, and the
//! lines that follow (up to the next header) are the MCL body, kept
//! verbatim apart from trailing blank lines. Blank and `#` lines before the
//! first header are ignored.

use std::collections::BTreeMap;
use std::fmt::Write;

use thiserror::Error;

use crate::hfqasm::GateKind;
use crate::latency::LatencyTable;
use crate::time::Micros;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("no template for gate {gate}")]
    MissingTemplate { gate: GateKind },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateTemplate {
    pub body: String,
    pub latency: Micros,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GateTemplateTable {
    entries: BTreeMap<GateKind, GateTemplate>,
}

impl GateTemplateTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// One-line stand-in bodies (`GATE`) carrying the given latencies.
    pub fn from_latencies(latencies: &LatencyTable) -> Self {
        let entries = latencies
            .iter()
            .map(|(gate, latency)| (gate, GateTemplate { body: gate.name().to_string(), latency }))
            .collect();
        GateTemplateTable { entries }
    }

    pub fn insert(&mut self, gate: GateKind, body: impl Into<String>, latency: Micros) {
        self.entries.insert(gate, GateTemplate { body: body.into(), latency });
    }

    pub fn get(&self, gate: GateKind) -> Result<&GateTemplate, TemplateError> {
        self.entries.get(&gate).ok_or(TemplateError::MissingTemplate { gate })
    }

    pub fn latencies(&self) -> LatencyTable {
        let mut table = LatencyTable::new();
        for (gate, t) in &self.entries {
            table.set(*gate, t.latency);
        }
        table
    }

    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let mut table = GateTemplateTable::new();
        let mut current: Option<(GateKind, Micros, Vec<&str>)> = None;
        let flush = |table: &mut GateTemplateTable, section: Option<(GateKind, Micros, Vec<&str>)>| {
            if let Some((gate, latency, mut lines)) = section {
                while lines.last().is_some_and(|l| l.trim().is_empty()) {
                    lines.pop();
                }
                table.insert(gate, lines.join("\n"), latency);
            }
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let syntax = |message: String| TemplateError::Syntax { line, message };
            if let Some(rest) = raw.strip_prefix('[') {
                let (name, tail) = rest.split_once(']').ok_or_else(|| syntax("unterminated `[`".into()))?;
                let gate: GateKind = name.trim().parse().map_err(|_| syntax(format!("unknown gate `{}`", name.trim())))?;
                let latency: Micros =
                    tail.trim().parse().map_err(|_| syntax(format!("bad latency `{}`", tail.trim())))?;
                if latency <= Micros::ZERO {
                    return Err(syntax(format!("latency of {gate} must be positive")));
                }
                if table.entries.contains_key(&gate) || current.as_ref().is_some_and(|(g, _, _)| *g == gate) {
                    return Err(syntax(format!("duplicate template for {gate}")));
                }
                flush(&mut table, current.take());
                current = Some((gate, latency, Vec::new()));
            } else if let Some((_, _, lines)) = current.as_mut() {
                lines.push(raw);
            } else if !(raw.trim().is_empty() || raw.trim_start().starts_with('#')) {
                return Err(syntax("text before the first `[GATE] latency` header".into()));
            }
        }
        flush(&mut table, current);
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (gate, t) in &self.entries {
            let _ = writeln!(out, "[{gate}] {}", t.latency);
            if !t.body.is_empty() {
                let _ = writeln!(out, "{}", t.body);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_sections() {
        let text = "# templates\n\n[H] 31\nload q0\n  pulse h q0\n\n[CNOT] 62.5\nmove a b\n[T] 93\n";
        let t = GateTemplateTable::parse(text).unwrap();
        assert_eq!(t.get(GateKind::H).unwrap().body, "load q0\n  pulse h q0");
        assert_eq!(t.get(GateKind::Cnot).unwrap().latency, "62.5".parse().unwrap());
        assert_eq!(t.get(GateKind::T).unwrap().body, "");
        assert_eq!(t.get(GateKind::X), Err(TemplateError::MissingTemplate { gate: GateKind::X }));
        assert_eq!(GateTemplateTable::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(matches!(GateTemplateTable::parse("[Q] 1\n"), Err(TemplateError::Syntax { line: 1, .. })));
        assert!(matches!(GateTemplateTable::parse("[H] 0\n"), Err(TemplateError::Syntax { .. })));
        assert!(matches!(GateTemplateTable::parse("junk\n[H] 1\n"), Err(TemplateError::Syntax { line: 1, .. })));
        assert!(matches!(GateTemplateTable::parse("[H] 1\n[H] 2\n"), Err(TemplateError::Syntax { line: 2, .. })));
    }

    #[test]
    fn latencies_follow_templates() {
        let t = GateTemplateTable::from_latencies(&LatencyTable::placeholder());
        assert_eq!(t.latencies(), LatencyTable::placeholder());
        assert_eq!(t.get(GateKind::Tdag).unwrap().body, "Tdag");
    }
}
