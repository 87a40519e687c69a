use thiserror::Error;

use super::ast::Span;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{span}: {message}")]
pub struct LexError {
    pub span: Span,
    pub message: String,
}

impl LexError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        LexError { span, message: message.into() }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{span}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub span: Span,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("lex error at {0}")]
    Lex(#[from] LexError),
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
}

impl SyntaxError {
    pub fn span(&self) -> Span {
        match self {
            SyntaxError::Lex(e) => e.span,
            SyntaxError::Parse(e) => e.span,
        }
    }

    /// `file:line:col: error: message`
    pub fn render(&self, file: &str) -> String {
        let message = match self {
            SyntaxError::Lex(e) => e.message.clone(),
            SyntaxError::Parse(e) => format!("expected {}, found {}", e.expected.join(" or "), e.found),
        };
        let span = self.span();
        format!("{file}:{}:{}: error: {message}", span.line, span.col)
    }
}
