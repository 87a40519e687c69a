use std::fmt;
use std::str::FromStr;

use serde::Serialize;

/// Source position, 1-based.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Fault-tolerant gates of the HF-QASM gate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    Sdag,
    T,
    Tdag,
    Prep0,
    MeasX,
    MeasY,
    MeasZ,
    Cnot,
}

impl GateKind {
    pub const ALL: [GateKind; 13] = [
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::S,
        GateKind::Sdag,
        GateKind::T,
        GateKind::Tdag,
        GateKind::Prep0,
        GateKind::MeasX,
        GateKind::MeasY,
        GateKind::MeasZ,
        GateKind::Cnot,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot => 2,
            _ => 1,
        }
    }

    /// Canonical ASCII spelling.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::S => "S",
            GateKind::Sdag => "Sdag",
            GateKind::T => "T",
            GateKind::Tdag => "Tdag",
            GateKind::Prep0 => "Prep0",
            GateKind::MeasX => "MeasX",
            GateKind::MeasY => "MeasY",
            GateKind::MeasZ => "MeasZ",
            GateKind::Cnot => "CNOT",
        }
    }

    /// Resolves a gate keyword, accepting the dagger aliases.
    pub fn from_keyword(word: &str) -> Option<GateKind> {
        Some(match word {
            "H" => GateKind::H,
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "S" => GateKind::S,
            "Sdag" | "S\u{2020}" => GateKind::Sdag,
            "T" => GateKind::T,
            "Tdag" | "T\u{2020}" => GateKind::Tdag,
            "Prep0" => GateKind::Prep0,
            "MeasX" => GateKind::MeasX,
            "MeasY" => GateKind::MeasY,
            "MeasZ" => GateKind::MeasZ,
            "CNOT" => GateKind::Cnot,
            _ => return None,
        })
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GateKind::from_keyword(s).ok_or_else(|| format!("unknown gate `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QubitRef {
    pub name: String,
    pub index: Option<u32>,
    pub span: Span,
}

impl QubitRef {
    pub fn scalar(name: impl Into<String>) -> Self {
        QubitRef { name: name.into(), index: None, span: Span::default() }
    }

    pub fn element(name: impl Into<String>, index: u32) -> Self {
        QubitRef { name: name.into(), index: Some(index), span: Span::default() }
    }
}

impl fmt::Display for QubitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{}]", self.name, i),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub is_array: bool,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QubitDecl {
    pub name: String,
    pub size: Option<u32>,
    pub span: Span,
}

impl QubitDecl {
    /// Number of qubits the declaration introduces.
    pub fn width(&self) -> u32 {
        self.size.unwrap_or(1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Gate { kind: GateKind, args: Vec<QubitRef>, span: Span },
    Call { callee: String, args: Vec<QubitRef>, span: Span },
}

impl Stmt {
    pub fn args(&self) -> &[QubitRef] {
        match self {
            Stmt::Gate { args, .. } | Stmt::Call { args, .. } => args,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Stmt::Gate { span, .. } | Stmt::Call { span, .. } => *span,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleDef {
    pub name: String,
    pub params: Vec<Param>,
    pub locals: Vec<QubitDecl>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

impl ModuleDef {
    pub fn is_main(&self) -> bool {
        self.name == super::MAIN
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn local(&self, name: &str) -> Option<&QubitDecl> {
        self.locals.iter().find(|d| d.name == name)
    }

    /// Callee names in first-call textual order, without repeats.
    pub fn callees(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for stmt in &self.body {
            if let Stmt::Call { callee, .. } = stmt {
                if !out.contains(&callee.as_str()) {
                    out.push(callee);
                }
            }
        }
        out
    }
}

/// A parsed program. `modules` holds every module in source order; the last
/// one is `main`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramAst {
    pub modules: Vec<ModuleDef>,
}

impl ProgramAst {
    pub fn main(&self) -> &ModuleDef {
        self.modules
            .last()
            .filter(|m| m.is_main())
            .expect("parsed programs always end with main")
    }

    pub fn module(&self, name: &str) -> Option<&ModuleDef> {
        self.modules.iter().find(|m| m.name == name)
    }

    /// Copy with every source position cleared, for structural comparison.
    pub fn without_spans(&self) -> ProgramAst {
        let strip_ref = |r: &QubitRef| QubitRef { span: Span::default(), ..r.clone() };
        let modules = self
            .modules
            .iter()
            .map(|m| ModuleDef {
                name: m.name.clone(),
                params: m
                    .params
                    .iter()
                    .map(|p| Param { span: Span::default(), ..p.clone() })
                    .collect(),
                locals: m
                    .locals
                    .iter()
                    .map(|d| QubitDecl { span: Span::default(), ..d.clone() })
                    .collect(),
                body: m
                    .body
                    .iter()
                    .map(|s| match s {
                        Stmt::Gate { kind, args, .. } => Stmt::Gate {
                            kind: *kind,
                            args: args.iter().map(strip_ref).collect(),
                            span: Span::default(),
                        },
                        Stmt::Call { callee, args, .. } => Stmt::Call {
                            callee: callee.clone(),
                            args: args.iter().map(strip_ref).collect(),
                            span: Span::default(),
                        },
                    })
                    .collect(),
                span: Span::default(),
            })
            .collect();
        ProgramAst { modules }
    }
}
