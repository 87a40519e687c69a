use std::fmt;

use super::ast::Span;
use super::error::LexError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    /// `module`
    Module,
    /// `qubit` or `qbit`
    Qubit,
    Ident(String),
    Num(u32),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Star,
}

impl TokenKind {
    /// Source text that reproduces this token.
    pub fn lexeme(&self) -> String {
        match self {
            TokenKind::Module => "module".into(),
            TokenKind::Qubit => "qubit".into(),
            TokenKind::Ident(s) => s.clone(),
            TokenKind::Num(n) => n.to_string(),
            TokenKind::LParen => "(".into(),
            TokenKind::RParen => ")".into(),
            TokenKind::LBrace => "{".into(),
            TokenKind::RBrace => "}".into(),
            TokenKind::LBracket => "[".into(),
            TokenKind::RBracket => "]".into(),
            TokenKind::Comma => ",".into(),
            TokenKind::Semi => ";".into(),
            TokenKind::Star => "*".into(),
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Num(n) => write!(f, "number `{n}`"),
            other => write!(f, "`{}`", other.lexeme()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

const DAGGER: char = '\u{2020}';

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }
}

/// Splits HF-QASM source into tokens, dropping whitespace and `#` comments.
pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor { chars: text.chars().peekable(), line: 1, col: 1 };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        let span = cur.span();
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                cur.bump();
            }
            '#' => {
                while let Some(c) = cur.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            'a'..='z' | 'A'..='Z' => {
                let mut word = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_ascii_alphanumeric() {
                        word.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                if cur.peek() == Some(DAGGER) && (word == "S" || word == "T") {
                    cur.bump();
                    word.push(DAGGER);
                }
                let kind = match word.as_str() {
                    "module" => TokenKind::Module,
                    "qubit" | "qbit" => TokenKind::Qubit,
                    _ => TokenKind::Ident(word),
                };
                tokens.push(Token { kind, span });
            }
            '0'..='9' => {
                let mut digits = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_ascii_digit() {
                        digits.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                if let Some(c) = cur.peek() {
                    if c.is_ascii_alphabetic() {
                        return Err(LexError::new(
                            span,
                            format!("number `{digits}` immediately followed by `{c}`; names must start with a letter"),
                        ));
                    }
                }
                if digits.len() > 1 && digits.starts_with('0') {
                    return Err(LexError::new(span, format!("number `{digits}` has a leading zero")));
                }
                let value: u32 = digits
                    .parse()
                    .map_err(|_| LexError::new(span, format!("number `{digits}` is out of range")))?;
                tokens.push(Token { kind: TokenKind::Num(value), span });
            }
            _ => {
                let kind = match c {
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    ',' => TokenKind::Comma,
                    ';' => TokenKind::Semi,
                    '*' => TokenKind::Star,
                    other => {
                        return Err(LexError::new(span, format!("unexpected character {other:?}")));
                    }
                };
                cur.bump();
                tokens.push(Token { kind, span });
            }
        }
    }
    Ok(tokens)
}
