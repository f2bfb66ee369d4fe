//! Formula grammar:
//!
//! ```text
//! imp   := or ( "->" imp )?
//! or    := and ( "|" and )*
//! and   := until ( "&" until )*
//! until := store{x} until | unary ( ("U" | "R") until )?
//! unary := ("!" | "X" | "WX" | "G" | "F") unary | atom
//! atom  := "true" | "false" | chk{x} | letter | "(" imp ")"
//! ```
//!
//! A freeze quantifier scopes over the `U`/`R` expression that follows it, so
//! `store{x} a U chk{x}` reads as `store{x} (a U chk{x})`.

use super::Formula;
use crate::order::QuasiOrder;
use crate::sym::Sym;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: {msg}")]
    SyntaxError { pos: usize, msg: String },
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Store(String),
    Chk(String),
    LParen,
    RParen,
    Not,
    And,
    Or,
    Arrow,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let err = |pos: usize, msg: &str| ParseError::SyntaxError {
        pos,
        msg: msg.to_string(),
    };
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '!' => Some(Tok::Not),
            '&' => Some(Tok::And),
            '|' => Some(Tok::Or),
            _ => None,
        };
        if let Some(t) = single {
            out.push((pos, t));
            i += 1;
            continue;
        }
        if c == '-' {
            if chars.get(i + 1).map(|p| p.1) == Some('>') {
                out.push((pos, Tok::Arrow));
                i += 2;
                continue;
            }
            return Err(err(pos, "expected `->`"));
        }
        if c.is_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || matches!(chars[i].1, '_' | '\'' | '.' | '#')) {
                i += 1;
            }
            let word: String = chars[start..i].iter().map(|p| p.1).collect();
            if (word == "store" || word == "chk") && chars.get(i).map(|p| p.1) == Some('{') {
                let close = chars[i..]
                    .iter()
                    .position(|p| p.1 == '}')
                    .ok_or_else(|| err(chars[i].0, "unterminated `{`"))?
                    + i;
                let attr: String = chars[i + 1..close].iter().map(|p| p.1).collect();
                let attr = attr.trim().to_string();
                if attr.is_empty() {
                    return Err(err(chars[i].0, "empty attribute name"));
                }
                out.push((
                    pos,
                    if word == "store" {
                        Tok::Store(attr)
                    } else {
                        Tok::Chk(attr)
                    },
                ));
                i = close + 1;
                continue;
            }
            out.push((pos, Tok::Ident(word)));
            continue;
        }
        return Err(err(pos, &format!("unexpected character `{c}`")));
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    alphabet: Option<&'a [Sym]>,
    order: &'a QuasiOrder,
}

/// Parse a formula. With `alphabet = None` every identifier is accepted as a
/// letter.
pub fn parse(text: &str, alphabet: Option<&[Sym]>, order: &QuasiOrder) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
        alphabet,
        order,
    };
    let f = p.imp()?;
    if p.at < p.toks.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(f)
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|t| t.0).unwrap_or(self.end)
    }

    fn error(&self, msg: &str) -> ParseError {
        ParseError::SyntaxError {
            pos: self.pos(),
            msg: msg.to_string(),
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(w)) if w == kw)
    }

    fn imp(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.at += 1;
            let rhs = self.imp()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until()?;
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            let rhs = self.until()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        if let Some(Tok::Store(x)) = self.peek() {
            let x = self
                .order
                .attr(x)
                .map_err(|_| ParseError::UnknownAttribute(x.clone()))?;
            self.at += 1;
            return Ok(Formula::freeze(x, self.until()?));
        }
        let lhs = self.unary()?;
        if self.is_kw("U") {
            self.at += 1;
            return Ok(Formula::until(lhs, self.until()?));
        }
        if self.is_kw("R") {
            self.at += 1;
            return Ok(Formula::release(lhs, self.until()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.at += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Store(_)) => self.until(),
            Some(Tok::Ident(w)) => match w.as_str() {
                "X" => {
                    self.at += 1;
                    Ok(Formula::next(self.unary()?))
                }
                "WX" => {
                    self.at += 1;
                    Ok(Formula::weak_next(self.unary()?))
                }
                "G" => {
                    self.at += 1;
                    Ok(Formula::globally(self.unary()?))
                }
                "F" => {
                    self.at += 1;
                    Ok(Formula::finally(self.unary()?))
                }
                _ => self.atom(),
            },
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.at += 1;
                let f = self.imp()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.error("expected `)`"));
                }
                self.at += 1;
                Ok(f)
            }
            Some(Tok::Chk(x)) => {
                let x = self
                    .order
                    .attr(&x)
                    .map_err(|_| ParseError::UnknownAttribute(x.clone()))?;
                self.at += 1;
                Ok(Formula::Check(x))
            }
            Some(Tok::Ident(w)) => {
                match w.as_str() {
                    "true" => {
                        self.at += 1;
                        return Ok(Formula::True);
                    }
                    "false" => {
                        self.at += 1;
                        return Ok(Formula::False);
                    }
                    "U" | "R" | "X" | "WX" | "G" | "F" => {
                        return Err(self.error(&format!("operator `{w}` where a formula was expected")))
                    }
                    _ => {}
                }
                if !w.chars().next().unwrap().is_alphabetic() && !w.starts_with('_') {
                    return Err(self.error(&format!("bad letter `{w}`")));
                }
                let s = Sym::new(&w);
                if let Some(alpha) = self.alphabet {
                    if !alpha.contains(&s) {
                        return Err(ParseError::UnknownLetter(w));
                    }
                }
                self.at += 1;
                Ok(Formula::Letter(s))
            }
            Some(_) => Err(self.error("unexpected token")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}
