//! Recursive-descent parser for HF-QASM.
//!
//! ```text
//! start      → (module)* main
//! main       → module main ( '(' ')' )? { body }
//! module     → module name ( param_list ) { body }
//! param      → qubit (*)? name
//! body       → (def;)* (gate;)+
//! def        → qubit ([num])? name | qubit name[num]
//! gate       → one_qubit_gate | CNOT (arg, arg) | name (call_list)
//! arg        → name | name[num]
//! ```

use super::ast::{GateKind, ModuleDef, Param, ProgramAst, QubitDecl, QubitRef, Span, Stmt};
use super::error::{ParseError, SyntaxError};
use super::lexer::{tokenize, Token, TokenKind};
use super::MAIN;

pub fn parse(text: &str) -> Result<ProgramAst, SyntaxError> {
    let tokens = tokenize(text)?;
    let eof = end_span(text);
    let mut parser = Parser { tokens, pos: 0, eof };
    Ok(parser.program()?)
}

fn end_span(text: &str) -> Span {
    let mut line = 1;
    let mut col = 1;
    for c in text.chars() {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    Span::new(line, col)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    eof: Span,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, offset: usize) -> Option<&TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| &t.kind)
    }

    fn span(&self) -> Span {
        self.tokens.get(self.pos).map_or(self.eof, |t| t.span)
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let found = self.peek().map_or_else(|| "end of input".to_string(), |k| k.to_string());
        Err(ParseError {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        })
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Span> {
        let span = self.span();
        if self.eat(&kind) {
            Ok(span)
        } else {
            self.error(&[&format!("`{}`", kind.lexeme())])
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        let span = self.span();
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok((name, span))
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn number(&mut self) -> PResult<u32> {
        match self.peek() {
            Some(TokenKind::Num(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => self.error(&["number"]),
        }
    }

    fn program(&mut self) -> PResult<ProgramAst> {
        let mut modules = Vec::new();
        loop {
            if self.peek().is_none() {
                return self.error(&["`module`"]);
            }
            let module = self.module()?;
            let is_main = module.is_main();
            modules.push(module);
            if is_main {
                if self.peek().is_some() {
                    return self.error(&["end of input after `main`"]);
                }
                return Ok(ProgramAst { modules });
            }
        }
    }

    fn module(&mut self) -> PResult<ModuleDef> {
        let span = self.expect(TokenKind::Module)?;
        let (name, name_span) = self.ident()?;
        if GateKind::from_keyword(&name).is_some() {
            return Err(ParseError {
                span: name_span,
                expected: vec!["module name".into()],
                found: format!("gate keyword `{name}`"),
            });
        }
        let params = if name == MAIN {
            if self.eat(&TokenKind::LParen) {
                self.expect(TokenKind::RParen)?;
            }
            Vec::new()
        } else {
            self.expect(TokenKind::LParen)?;
            let mut params = vec![self.param()?];
            while self.eat(&TokenKind::Comma) {
                params.push(self.param()?);
            }
            self.expect(TokenKind::RParen)?;
            params
        };
        self.expect(TokenKind::LBrace)?;
        let mut locals = Vec::new();
        while self.peek() == Some(&TokenKind::Qubit) {
            locals.push(self.def()?);
            self.expect(TokenKind::Semi)?;
        }
        let mut body = Vec::new();
        loop {
            match self.peek() {
                Some(TokenKind::Ident(_)) => {
                    body.push(self.stmt()?);
                    self.expect(TokenKind::Semi)?;
                }
                Some(TokenKind::RBrace) if !body.is_empty() => break,
                _ if body.is_empty() => return self.error(&["gate", "call"]),
                _ => return self.error(&["gate", "call", "`}`"]),
            }
        }
        self.expect(TokenKind::RBrace)?;
        Ok(ModuleDef { name, params, locals, body, span })
    }

    fn param(&mut self) -> PResult<Param> {
        let span = self.span();
        if !self.eat(&TokenKind::Qubit) {
            return self.error(&["`qubit`"]);
        }
        let is_array = self.eat(&TokenKind::Star);
        let (name, _) = self.ident()?;
        Ok(Param { name, is_array, span })
    }

    fn def(&mut self) -> PResult<QubitDecl> {
        let span = self.expect(TokenKind::Qubit)?;
        // The size may come before or after the name: `qubit [3] a` or `qubit a[3]`.
        let mut size = self.array_size()?;
        let (name, _) = self.ident()?;
        if size.is_none() {
            size = self.array_size()?;
        }
        Ok(QubitDecl { name, size, span })
    }

    fn array_size(&mut self) -> PResult<Option<u32>> {
        if !self.eat(&TokenKind::LBracket) {
            return Ok(None);
        }
        let size_span = self.span();
        let n = self.number()?;
        if n == 0 {
            return Err(ParseError {
                span: size_span,
                expected: vec!["positive array size".into()],
                found: "number `0`".into(),
            });
        }
        self.expect(TokenKind::RBracket)?;
        Ok(Some(n))
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let (word, span) = self.ident()?;
        // A gate keyword followed by `(` is a gate; anything else with a
        // parenthesised list is a call.
        if self.peek() != Some(&TokenKind::LParen) {
            return self.error(&["`(`"]);
        }
        let args = self.arg_list()?;
        match GateKind::from_keyword(&word) {
            Some(kind) => {
                if args.len() != kind.arity() {
                    return Err(ParseError {
                        span,
                        expected: vec![format!("{} argument(s) for `{}`", kind.arity(), kind)],
                        found: format!("{} argument(s)", args.len()),
                    });
                }
                Ok(Stmt::Gate { kind, args, span })
            }
            None => Ok(Stmt::Call { callee: word, args, span }),
        }
    }

    fn arg_list(&mut self) -> PResult<Vec<QubitRef>> {
        self.expect(TokenKind::LParen)?;
        let mut args = vec![self.arg()?];
        while self.eat(&TokenKind::Comma) {
            args.push(self.arg()?);
        }
        self.expect(TokenKind::RParen)?;
        Ok(args)
    }

    fn arg(&mut self) -> PResult<QubitRef> {
        let (name, span) = self.ident()?;
        let index = if self.peek() == Some(&TokenKind::LBracket) && matches!(self.peek_at(1), Some(TokenKind::Num(_))) {
            self.pos += 1;
            let n = self.number()?;
            self.expect(TokenKind::RBracket)?;
            Some(n)
        } else if self.peek() == Some(&TokenKind::LBracket) {
            self.pos += 1;
            return self.error(&["number"]);
        } else {
            None
        };
        Ok(QubitRef { name, index, span })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hfqasm::FREDKIN_LISTING;

    #[test]
    fn fredkin_listing() {
        let ast = parse(FREDKIN_LISTING).unwrap();
        assert_eq!(ast.modules.len(), 2);
        let toffoli = &ast.modules[0];
        assert_eq!(toffoli.name, "Toffoli");
        assert_eq!(toffoli.params.len(), 3);
        assert!(toffoli.locals.is_empty());
        assert_eq!(toffoli.body.len(), 15);
        let main = ast.main();
        assert_eq!(main.locals.len(), 1);
        assert_eq!(main.locals[0].size, Some(3));
        assert_eq!(main.body.len(), 3);
        assert!(main.body.iter().all(|s| matches!(s, Stmt::Call { callee, .. } if callee == "Toffoli")));
        assert_eq!(
            toffoli.body[2],
            Stmt::Gate { kind: GateKind::Tdag, args: vec![QubitRef { name: "t".into(), index: None, span: Span::new(4, 9) }], span: Span::new(4, 3) }
        );
    }

    #[test]
    fn minimal_program() {
        let ast = parse("module main(){ qbit q; H(q); }").unwrap();
        assert_eq!(ast.modules.len(), 1);
        assert!(ast.main().is_main());
        let bare = parse("module main { qubit q; H(q); }").unwrap();
        assert_eq!(ast.without_spans(), bare.without_spans());
    }

    #[test]
    fn module_after_main_rejected() {
        let err = parse("module main(){ qbit q; A(q); }\nmodule A(qbit x){ H(x); }").unwrap_err();
        assert_eq!(err.span(), Span::new(2, 1));
    }

    #[test]
    fn missing_main_rejected() {
        assert!(parse("module A(qbit x){ H(x); }").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn defs_must_precede_gates() {
        assert!(parse("module main(){ qbit a; H(a); qbit b; H(b); }").is_err());
    }

    #[test]
    fn empty_body_rejected() {
        assert!(parse("module main(){ qbit a; }").is_err());
    }

    #[test]
    fn gate_arity_checked() {
        let err = parse("module main(){ qbit a[2]; CNOT(a[0]); }").unwrap_err();
        assert!(matches!(err, SyntaxError::Parse(_)));
    }

    #[test]
    fn array_params() {
        let ast = parse("module F(qbit *r, qbit s){ H(r[2]); }\nmodule main(){ qbit a[3]; qbit b; F(a, b); }").unwrap();
        assert!(ast.modules[0].params[0].is_array);
        assert!(!ast.modules[0].params[1].is_array);
    }

    #[test]
    fn dagger_spellings_are_aliases() {
        let a = parse("module main(){ qbit q; T\u{2020}(q); S\u{2020}(q); }").unwrap();
        let b = parse("module main(){ qubit q; Tdag(q); Sdag(q); }").unwrap();
        assert_eq!(a.without_spans(), b.without_spans());
    }

    #[test]
    fn gate_keyword_as_module_name_rejected() {
        assert!(parse("module H(qbit x){ X(x); } module main(){ qbit q; H(q); }").is_err());
    }
}
