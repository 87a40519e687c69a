use std::fmt::{self, Write};

use super::ast::{ModuleDef, ProgramAst, Stmt};

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn write_module(out: &mut String, module: &ModuleDef) -> fmt::Result {
    let params: Vec<String> = module
        .params
        .iter()
        .map(|p| if p.is_array { format!("qbit *{}", p.name) } else { format!("qbit {}", p.name) })
        .collect();
    writeln!(out, "module {}({}){{", module.name, params.join(", "))?;
    for decl in &module.locals {
        match decl.size {
            Some(n) => writeln!(out, "  qbit {}[{}];", decl.name, n)?,
            None => writeln!(out, "  qbit {};", decl.name)?,
        }
    }
    for stmt in &module.body {
        match stmt {
            Stmt::Gate { kind, args, .. } => writeln!(out, "  {} ({});", kind, join(args))?,
            Stmt::Call { callee, args, .. } => writeln!(out, "  {}({});", callee, join(args))?,
        }
    }
    writeln!(out, "}}")
}

impl fmt::Display for ProgramAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for module in &self.modules {
            write_module(&mut out, module)?;
        }
        f.write_str(&out)
    }
}

/// Canonical source text for a program. Gates are written `G (args);`,
/// calls `Name(args);`, matching the layout of the reference listings.
pub fn pretty_print(ast: &ProgramAst) -> String {
    ast.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hfqasm::{parse, FREDKIN_LISTING};

    #[test]
    fn fredkin_prints_back_verbatim_minus_comment() {
        let ast = parse(FREDKIN_LISTING).unwrap();
        let expected: String = FREDKIN_LISTING
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect();
        assert_eq!(pretty_print(&ast), expected);
    }
}
