//! HF-QASM front end: lexer, parser, AST, pretty-printer and semantic checks.

mod ast;
mod error;
mod lexer;
mod parser;
mod print;
mod validate;

pub use ast::{GateKind, ModuleDef, Param, ProgramAst, QubitDecl, QubitRef, Span, Stmt};
pub use error::{LexError, ParseError, SyntaxError};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;
pub use print::pretty_print;
pub use validate::{array_extents, validate, ArrayExtents, Diagnostic, DiagnosticKind};

/// Name of the entry module.
pub const MAIN: &str = "main";

/// Fredkin gate built from three Toffoli modules; the reference example of
/// the language.
pub const FREDKIN_LISTING: &str = "module Toffoli(qbit c1, qbit c2, qbit t){
  H (t);
  CNOT (c2, t);
  Tdag (t);
  CNOT (c1, t);
  T (t);
  CNOT (c2, t);
  Tdag (t);
  CNOT (c1, t);
  T (c2);
  T (t);
  CNOT (c1, c2);
  H (t);
  T (c1);
  Tdag (c2);
  CNOT (c1, c2);
}
module main(){
  qbit a[3];
  #a[0] is control and a[1] and a[2] are target qubits
  Toffoli(a[0], a[2], a[1]);
  Toffoli(a[0], a[1], a[2]);
  Toffoli(a[0], a[2], a[1]);
}
";

/// Parses and validates in one step, returning the program only when it has
/// no diagnostics.
pub fn parse_valid(text: &str) -> Result<ProgramAst, FrontEndError> {
    let ast = parse(text)?;
    let diagnostics = validate(&ast);
    if diagnostics.is_empty() {
        Ok(ast)
    } else {
        Err(FrontEndError::Invalid(diagnostics))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FrontEndError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("program has {} semantic error(s)", .0.len())]
    Invalid(Vec<Diagnostic>),
}
