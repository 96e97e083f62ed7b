//! Recursive-descent parser for the ASCII formula grammar.
//!
//! ```text
//! iff     := implies ( "<->" iff )?
//! implies := or ( "->" implies )?
//! or      := and ( "|" and )*
//! and     := unary ( "&" unary )*
//! unary   := "~" unary | ATOM | "(" iff ")"
//! ```
//!
//! Spaces are ignored anywhere between tokens.

use thiserror::Error;

use super::formula::Formula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed formula at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    Atom(char),
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
}

impl Token {
    fn describe(self) -> String {
        match self {
            Token::Atom(c) => format!("atom '{c}'"),
            Token::Not => "'~'".into(),
            Token::And => "'&'".into(),
            Token::Or => "'|'".into(),
            Token::Implies => "'->'".into(),
            Token::Iff => "'<->'".into(),
            Token::LParen => "'('".into(),
            Token::RParen => "')'".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    let err = |offset: usize, message: String| ParseError { offset, message };
    while i < bytes.len() {
        let b = bytes[i];
        let tok = match b {
            b' ' | b'\t' => {
                i += 1;
                continue;
            }
            b'A'..=b'Z' => Token::Atom(b as char),
            b'~' => Token::Not,
            b'&' => Token::And,
            b'|' => Token::Or,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    tokens.push((i, Token::Implies));
                    i += 2;
                    continue;
                }
                return Err(err(i, "expected '->'".into()));
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'-') && bytes.get(i + 2) == Some(&b'>') {
                    tokens.push((i, Token::Iff));
                    i += 3;
                    continue;
                }
                return Err(err(i, "expected '<->'".into()));
            }
            b'a'..=b'z' => {
                return Err(err(i, format!("atoms must be upper-case letters, found '{}'", b as char)))
            }
            _ if b.is_ascii() => return Err(err(i, format!("unexpected character '{}'", b as char))),
            _ => return Err(err(i, "non-ASCII input".into())),
        };
        tokens.push((i, tok));
        i += 1;
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.pos).map(|&(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|&(o, _)| o).unwrap_or(self.end)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { offset: self.offset(), message: message.into() }
    }

    fn eat(&mut self, tok: Token) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.implies()?;
        if self.eat(Token::Iff) {
            let rhs = self.iff()?;
            return Ok(Formula::iff(lhs, rhs));
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.eat(Token::Implies) {
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while self.eat(Token::Or) {
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while self.eat(Token::And) {
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Token::Atom(c)) => {
                self.pos += 1;
                Ok(Formula::Atom(c))
            }
            Some(Token::LParen) => {
                let open = self.offset();
                self.pos += 1;
                let inner = self.iff()?;
                if !self.eat(Token::RParen) {
                    return Err(match self.peek() {
                        None => ParseError { offset: open, message: "unbalanced '('".into() },
                        Some(t) => self.error(format!("expected ')', found {}", t.describe())),
                    });
                }
                Ok(inner)
            }
            Some(t) => Err(self.error(format!("expected a statement, found {}", t.describe()))),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

/// Parses an ASCII formula. Errors carry the byte offset of the offending token.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let tokens = lex(text)?;
    if tokens.is_empty() {
        return Err(ParseError { offset: 0, message: "empty formula".into() });
    }
    let mut parser = Parser { tokens, pos: 0, end: text.len() };
    let f = parser.iff()?;
    if let Some(t) = parser.peek() {
        return Err(parser.error(format!("unexpected {} after complete statement", t.describe())));
    }
    Ok(f)
}
