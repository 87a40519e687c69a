use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use super::ast::{GateKind, ModuleDef, ProgramAst, QubitRef, Span, Stmt};
use super::MAIN;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    DuplicateModule { name: String },
    DuplicateName { name: String },
    CircularCall { cycle: Vec<String> },
    UnknownCallee { callee: String },
    CallToMain,
    ArityMismatch { callee: String, expected: usize, got: usize },
    ShapeMismatch { param: String, expected_array: bool },
    UnresolvedQubit { name: String },
    IndexOnScalar { name: String },
    MissingIndex { name: String },
    IndexOutOfBounds { name: String, index: u32, size: u32 },
    ArrayTooSmall { name: String, size: u32, required: u32 },
    SameQubitOperands { qubit: String },
    DuplicateArgument { qubit: String },
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use DiagnosticKind::*;
        match self {
            DuplicateModule { name } => write!(f, "module `{name}` is defined more than once"),
            DuplicateName { name } => write!(f, "qubit name `{name}` is declared more than once"),
            CircularCall { cycle } => write!(f, "circular module call among {}", cycle.join(", ")),
            UnknownCallee { callee } => write!(f, "call to undefined module `{callee}`"),
            CallToMain => write!(f, "`main` cannot be called"),
            ArityMismatch { callee, expected, got } => {
                write!(f, "`{callee}` takes {expected} argument(s) but {got} were given")
            }
            ShapeMismatch { param, expected_array: true } => {
                write!(f, "parameter `{param}` is an array and needs a whole array argument")
            }
            ShapeMismatch { param, expected_array: false } => {
                write!(f, "parameter `{param}` is a single qubit and cannot take a whole array")
            }
            UnresolvedQubit { name } => write!(f, "qubit `{name}` is not declared"),
            IndexOnScalar { name } => write!(f, "`{name}` is not an array and cannot be indexed"),
            MissingIndex { name } => write!(f, "array `{name}` must be indexed here"),
            IndexOutOfBounds { name, index, size } => {
                write!(f, "index {index} is out of bounds for `{name}` of size {size}")
            }
            ArrayTooSmall { name, size, required } => {
                write!(f, "array `{name}` has {size} element(s) but the callee uses {required}")
            }
            SameQubitOperands { qubit } => write!(f, "CNOT operands both refer to `{qubit}`"),
            DuplicateArgument { qubit } => write!(f, "qubit `{qubit}` is passed more than once"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub module: String,
    pub span: Span,
    pub kind: DiagnosticKind,
}

impl Diagnostic {
    /// `file:line:col: error: message`
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}:{}: error: {}", self.span.line, self.span.col, self.kind)
    }
}

/// Minimum element count each array parameter needs, keyed by
/// `(module, param)`. Derived from the largest literal index used on the
/// parameter and, transitively, from callees it is forwarded to. Always ≥ 1.
pub type ArrayExtents = HashMap<(String, String), u32>;

pub fn array_extents(ast: &ProgramAst) -> ArrayExtents {
    let mut extents = ArrayExtents::new();
    let mut visiting = HashSet::new();
    for module in &ast.modules {
        module_extents(ast, module, &mut extents, &mut visiting);
    }
    extents
}

fn module_extents<'a>(
    ast: &'a ProgramAst,
    module: &'a ModuleDef,
    extents: &mut ArrayExtents,
    visiting: &mut HashSet<&'a str>,
) {
    let key_of = |p: &str| (module.name.clone(), p.to_string());
    if module.params.iter().filter(|p| p.is_array).all(|p| extents.contains_key(&key_of(&p.name))) {
        return;
    }
    if !visiting.insert(module.name.as_str()) {
        return;
    }
    let mut local: BTreeMap<&str, u32> =
        module.params.iter().filter(|p| p.is_array).map(|p| (p.name.as_str(), 1)).collect();
    for stmt in &module.body {
        for arg in stmt.args() {
            if let (Some(slot), Some(i)) = (local.get_mut(arg.name.as_str()), arg.index) {
                *slot = (*slot).max(i + 1);
            }
        }
        if let Stmt::Call { callee, args, .. } = stmt {
            let Some(target) = ast.module(callee) else { continue };
            if target.params.len() != args.len() {
                continue;
            }
            module_extents(ast, target, extents, visiting);
            for (param, arg) in target.params.iter().zip(args) {
                if !param.is_array || arg.index.is_some() {
                    continue;
                }
                if let (Some(slot), Some(need)) = (
                    local.get_mut(arg.name.as_str()),
                    extents.get(&(target.name.clone(), param.name.clone())),
                ) {
                    *slot = (*slot).max(*need);
                }
            }
        }
    }
    visiting.remove(module.name.as_str());
    for (name, extent) in local {
        extents.insert(key_of(name), extent);
    }
}

#[derive(Clone, Copy)]
enum Shape {
    Scalar,
    /// Array with a statically known size (a local declaration).
    Sized(u32),
    /// Array parameter; size comes from the caller.
    Unsized,
}

fn shape_of(module: &ModuleDef, name: &str) -> Option<Shape> {
    if let Some(p) = module.param(name) {
        return Some(if p.is_array { Shape::Unsized } else { Shape::Scalar });
    }
    module.local(name).map(|d| match d.size {
        Some(n) => Shape::Sized(n),
        None => Shape::Scalar,
    })
}

/// Reports every semantic violation in `ast`. An empty result means the
/// program is valid.
pub fn validate(ast: &ProgramAst) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut seen_modules = HashSet::new();
    for module in &ast.modules {
        if !seen_modules.insert(module.name.as_str()) {
            out.push(Diagnostic {
                module: module.name.clone(),
                span: module.span,
                kind: DiagnosticKind::DuplicateModule { name: module.name.clone() },
            });
        }
    }

    let extents = array_extents(ast);
    for module in &ast.modules {
        check_module(ast, module, &extents, &mut out);
    }
    check_cycles(ast, &mut out);
    out
}

fn check_module(ast: &ProgramAst, module: &ModuleDef, extents: &ArrayExtents, out: &mut Vec<Diagnostic>) {
    let mut push = |span: Span, kind: DiagnosticKind| {
        out.push(Diagnostic { module: module.name.clone(), span, kind });
    };

    let mut names = HashSet::new();
    for (name, span) in module
        .params
        .iter()
        .map(|p| (&p.name, p.span))
        .chain(module.locals.iter().map(|d| (&d.name, d.span)))
    {
        if !names.insert(name.as_str()) {
            push(span, DiagnosticKind::DuplicateName { name: name.clone() });
        }
    }

    // Checks one argument in a position that needs a single qubit.
    let check_element = |arg: &QubitRef, push: &mut dyn FnMut(Span, DiagnosticKind)| match (shape_of(module, &arg.name), arg.index) {
        (None, _) => push(arg.span, DiagnosticKind::UnresolvedQubit { name: arg.name.clone() }),
        (Some(Shape::Scalar), Some(_)) => push(arg.span, DiagnosticKind::IndexOnScalar { name: arg.name.clone() }),
        (Some(Shape::Sized(_) | Shape::Unsized), None) => {
            push(arg.span, DiagnosticKind::MissingIndex { name: arg.name.clone() })
        }
        (Some(Shape::Sized(size)), Some(index)) if index >= size => {
            push(arg.span, DiagnosticKind::IndexOutOfBounds { name: arg.name.clone(), index, size })
        }
        _ => {}
    };

    for stmt in &module.body {
        match stmt {
            Stmt::Gate { kind, args, .. } => {
                for arg in args {
                    check_element(arg, &mut push);
                }
                if *kind == GateKind::Cnot && args.len() == 2 && args[0].name == args[1].name && args[0].index == args[1].index {
                    push(args[1].span, DiagnosticKind::SameQubitOperands { qubit: args[0].to_string() });
                }
            }
            Stmt::Call { callee, args, span } => {
                if callee == MAIN {
                    push(*span, DiagnosticKind::CallToMain);
                    continue;
                }
                let Some(target) = ast.module(callee) else {
                    push(*span, DiagnosticKind::UnknownCallee { callee: callee.clone() });
                    continue;
                };
                if target.params.len() != args.len() {
                    push(
                        *span,
                        DiagnosticKind::ArityMismatch { callee: callee.clone(), expected: target.params.len(), got: args.len() },
                    );
                    continue;
                }
                for (param, arg) in target.params.iter().zip(args) {
                    if !param.is_array {
                        if arg.index.is_none() && matches!(shape_of(module, &arg.name), Some(Shape::Sized(_) | Shape::Unsized)) {
                            push(arg.span, DiagnosticKind::ShapeMismatch { param: param.name.clone(), expected_array: false });
                        } else {
                            check_element(arg, &mut push);
                        }
                        continue;
                    }
                    match (shape_of(module, &arg.name), arg.index) {
                        (None, _) => push(arg.span, DiagnosticKind::UnresolvedQubit { name: arg.name.clone() }),
                        (Some(_), Some(_)) | (Some(Shape::Scalar), None) => {
                            push(arg.span, DiagnosticKind::ShapeMismatch { param: param.name.clone(), expected_array: true })
                        }
                        (Some(Shape::Sized(size)), None) => {
                            let required = extents.get(&(target.name.clone(), param.name.clone())).copied().unwrap_or(1);
                            if required > size {
                                push(arg.span, DiagnosticKind::ArrayTooSmall { name: arg.name.clone(), size, required });
                            }
                        }
                        (Some(Shape::Unsized), None) => {}
                    }
                }
                for (i, a) in args.iter().enumerate() {
                    let clash = args[..i]
                        .iter()
                        .any(|b| b.name == a.name && (a.index.is_none() || b.index.is_none() || a.index == b.index));
                    if clash {
                        push(a.span, DiagnosticKind::DuplicateArgument { qubit: a.to_string() });
                    }
                }
            }
        }
    }
}

fn check_cycles(ast: &ProgramAst, out: &mut Vec<Diagnostic>) {
    let index: HashMap<&str, usize> = ast.modules.iter().enumerate().map(|(i, m)| (m.name.as_str(), i)).collect();
    let n = ast.modules.len();
    let succ: Vec<Vec<usize>> = ast
        .modules
        .iter()
        .map(|m| m.callees().iter().filter_map(|c| index.get(c).copied()).collect())
        .collect();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|start| {
            let mut seen = vec![false; n];
            let mut stack = succ[start].clone();
            while let Some(v) = stack.pop() {
                if !seen[v] {
                    seen[v] = true;
                    stack.extend(&succ[v]);
                }
            }
            seen
        })
        .collect();
    let mut reported = vec![false; n];
    for i in 0..n {
        if reported[i] || !reach[i][i] {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&j| j == i || (reach[i][j] && reach[j][i])).collect();
        for &j in &members {
            reported[j] = true;
        }
        out.push(Diagnostic {
            module: ast.modules[i].name.clone(),
            span: ast.modules[i].span,
            kind: DiagnosticKind::CircularCall { cycle: members.iter().map(|&j| ast.modules[j].name.clone()).collect() },
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hfqasm::{parse, FREDKIN_LISTING};

    fn kinds(src: &str) -> Vec<DiagnosticKind> {
        validate(&parse(src).unwrap()).into_iter().map(|d| d.kind).collect()
    }

    #[test]
    fn fredkin_is_valid() {
        assert!(kinds(FREDKIN_LISTING).is_empty());
    }

    #[test]
    fn two_cycle() {
        let src = "module A(qbit x){ B(x); }\nmodule B(qbit y){ A(y); }\nmodule main(){ qbit q; A(q); }";
        assert_eq!(kinds(src), vec![DiagnosticKind::CircularCall { cycle: vec!["A".into(), "B".into()] }]);
    }

    #[test]
    fn self_recursion() {
        let src = "module A(qbit x){ A(x); }\nmodule main(){ qbit q; A(q); }";
        assert_eq!(kinds(src), vec![DiagnosticKind::CircularCall { cycle: vec!["A".into()] }]);
    }

    #[test]
    fn arity_mismatch() {
        let src = FREDKIN_LISTING.replace("Toffoli(a[0], a[1], a[2]);", "Toffoli(a[0], a[1]);");
        assert_eq!(
            kinds(&src),
            vec![DiagnosticKind::ArityMismatch { callee: "Toffoli".into(), expected: 3, got: 2 }]
        );
    }

    #[test]
    fn unknown_callee_and_qubit() {
        let src = "module main(){ qbit q; Foo(q); H(r); }";
        assert_eq!(
            kinds(src),
            vec![
                DiagnosticKind::UnknownCallee { callee: "Foo".into() },
                DiagnosticKind::UnresolvedQubit { name: "r".into() }
            ]
        );
    }

    #[test]
    fn index_checks() {
        let src = "module main(){ qbit a[2]; qbit b; H(a[2]); H(b[0]); H(a); }";
        assert_eq!(
            kinds(src),
            vec![
                DiagnosticKind::IndexOutOfBounds { name: "a".into(), index: 2, size: 2 },
                DiagnosticKind::IndexOnScalar { name: "b".into() },
                DiagnosticKind::MissingIndex { name: "a".into() },
            ]
        );
    }

    #[test]
    fn duplicate_names() {
        let src = "module A(qbit x, qbit x){ qbit x; H(x); }\nmodule A(qbit y){ H(y); }\nmodule main(){ qbit q; A(q, q); }";
        let got = kinds(src);
        assert!(got.contains(&DiagnosticKind::DuplicateModule { name: "A".into() }));
        assert_eq!(got.iter().filter(|k| matches!(k, DiagnosticKind::DuplicateName { .. })).count(), 2);
        assert!(got.contains(&DiagnosticKind::DuplicateArgument { qubit: "q".into() }));
    }

    #[test]
    fn cnot_needs_distinct_qubits() {
        assert_eq!(
            kinds("module main(){ qbit a[2]; CNOT(a[1], a[1]); CNOT(a[0], a[1]); }"),
            vec![DiagnosticKind::SameQubitOperands { qubit: "a[1]".into() }]
        );
    }

    #[test]
    fn array_param_shapes() {
        let lib = "module F(qbit *r){ H(r[3]); }\n";
        assert!(kinds(&format!("{lib}module main(){{ qbit a[4]; F(a); }}")).is_empty());
        assert_eq!(
            kinds(&format!("{lib}module main(){{ qbit a[4]; F(a[0]); }}")),
            vec![DiagnosticKind::ShapeMismatch { param: "r".into(), expected_array: true }]
        );
        assert_eq!(
            kinds(&format!("{lib}module main(){{ qbit a[2]; F(a); }}")),
            vec![DiagnosticKind::ArrayTooSmall { name: "a".into(), size: 2, required: 4 }]
        );
        assert_eq!(
            kinds("module G(qbit s){ H(s); }\nmodule main(){ qbit a[2]; G(a); }"),
            vec![DiagnosticKind::ShapeMismatch { param: "s".into(), expected_array: false }]
        );
    }

    #[test]
    fn forwarded_array_extent() {
        let src = "module F(qbit *r){ H(r[5]); }\nmodule G(qbit *s){ F(s); H(s[1]); }\nmodule main(){ qbit a[6]; G(a); }";
        let ast = parse(src).unwrap();
        let ext = array_extents(&ast);
        assert_eq!(ext[&("G".to_string(), "s".to_string())], 6);
        assert!(validate(&ast).is_empty());
    }

    #[test]
    fn main_cannot_be_called() {
        assert_eq!(
            kinds("module A(qbit x){ main(x); }\nmodule main(){ qbit q; H(q); }"),
            vec![DiagnosticKind::CallToMain]
        );
    }

    #[test]
    fn render_format() {
        let ast = parse("module main(){\n  qbit q;\n  H(r);\n}").unwrap();
        let diags = validate(&ast);
        assert_eq!(diags[0].render("x.hfq"), "x.hfq:3:5: error: qubit `r` is not declared");
    }
}
