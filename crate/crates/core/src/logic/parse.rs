//! Text syntax for formulas.
//!
//! ```text
//! F ::= C | C (+p) F                 probabilistic disjunction, loosest
//! C ::= D ('&' D)*
//! D ::= T | ref{m, ...} | <a(x)>D | <~a b>D | <~a(x)>D | (F) | (x=y ? F : F)
//! ```
//! where `m` is `a` (input on `a`) or `~a` (output on `a`).

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use super::Formula;
use crate::error::{Error, Result};
use crate::name::{Name, Polarity};
use crate::rat::{parse_rat, Rat};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Tilde,
    Lt,
    Gt,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Amp,
    Eq,
    Question,
    Colon,
    Choice(Rat),
    Eof,
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let single = match c {
            '~' => Some(Tok::Tilde),
            '<' => Some(Tok::Lt),
            '>' => Some(Tok::Gt),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            '&' => Some(Tok::Amp),
            '=' => Some(Tok::Eq),
            '?' => Some(Tok::Question),
            ':' => Some(Tok::Colon),
            _ => None,
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if let Some(tok) = single {
            out.push(Lexed { tok, line: l0, col: c0 });
            i += 1;
            col += 1;
            continue;
        }
        if c == '(' {
            if chars.get(i + 1) == Some(&'+') {
                let end = chars[i..].iter().position(|&ch| ch == ')').map(|k| i + k);
                let Some(end) = end else {
                    return Err(Error::Syntax { line: l0, col: c0, msg: "unterminated `(+`".into() });
                };
                let body: String = chars[i + 2..end].iter().collect();
                let p = parse_rat(body.trim())
                    .ok_or_else(|| Error::Syntax { line: l0, col: c0, msg: format!("bad probability `{body}`") })?;
                out.push(Lexed { tok: Tok::Choice(p), line: l0, col: c0 });
                col += end + 1 - i;
                i = end + 1;
            } else {
                out.push(Lexed { tok: Tok::LParen, line: l0, col: c0 });
                i += 1;
                col += 1;
            }
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Lexed { tok: Tok::Ident(chars[start..i].iter().collect()), line: l0, col: c0 });
            continue;
        }
        return Err(Error::Syntax { line: l0, col: c0, msg: format!("unexpected character `{c}`") });
    }
    out.push(Lexed { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let t = &self.toks[self.pos];
        Err(Error::Syntax { line: t.line, col: t.col, msg: msg.into() })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn name(&mut self) -> Result<Name> {
        match self.peek().clone() {
            Tok::Ident(id) if id != "T" && id != "ref" && !id.starts_with('_') => {
                self.bump();
                Ok(Name::channel(&id))
            }
            _ => self.err("expected a name"),
        }
    }

    /// Also reports whether the result is an unparenthesised disjunction chain.
    fn formula(&mut self) -> Result<(Formula, bool)> {
        let first = self.conj()?;
        if let Tok::Choice(p) = self.peek().clone() {
            if p <= Rat::zero() || p >= Rat::one() {
                return self.err("probability must lie strictly between 0 and 1");
            }
            self.bump();
            let (rest, chain) = self.formula()?;
            let scale = Rat::one() - &p;
            let mut parts = vec![(p, first)];
            match rest {
                Formula::PDisj(tail) if chain => parts.extend(tail.into_iter().map(|(q, g)| (q * &scale, g))),
                other => parts.push((scale, other)),
            }
            return Ok((Formula::PDisj(parts), true));
        }
        Ok((first, false))
    }

    fn conj(&mut self) -> Result<Formula> {
        let mut parts = vec![self.atom()?];
        while *self.peek() == Tok::Amp {
            self.bump();
            parts.push(self.atom()?);
        }
        Ok(if parts.len() == 1 { parts.pop().expect("one") } else { Formula::And(parts) })
    }

    fn atom(&mut self) -> Result<Formula> {
        match self.bump() {
            Tok::Ident(id) if id == "T" => Ok(Formula::Top),
            Tok::Ident(id) if id == "ref" => {
                self.expect(Tok::LBrace, "`{`")?;
                let mut xs = BTreeSet::new();
                while *self.peek() != Tok::RBrace {
                    let co = if *self.peek() == Tok::Tilde {
                        self.bump();
                        true
                    } else {
                        false
                    };
                    let a = self.name()?;
                    xs.insert(if co { Polarity::Out(a) } else { Polarity::In(a) });
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace, "`}`")?;
                Ok(Formula::Ref(xs))
            }
            Tok::Lt => {
                let out = if *self.peek() == Tok::Tilde {
                    self.bump();
                    true
                } else {
                    false
                };
                let subject = self.name()?;
                let phi = if *self.peek() == Tok::LParen {
                    self.bump();
                    let binder = self.name()?;
                    self.expect(Tok::RParen, "`)`")?;
                    self.expect(Tok::Gt, "`>`")?;
                    let body = Box::new(self.atom()?);
                    if out {
                        Formula::DiaBoundOut { subject, binder, body }
                    } else {
                        Formula::DiaInput { subject, binder, body }
                    }
                } else if out {
                    let object = self.name()?;
                    self.expect(Tok::Gt, "`>`")?;
                    Formula::DiaFreeOut { subject, object, body: Box::new(self.atom()?) }
                } else {
                    return self.err("an input modality needs a binder `(x)`");
                };
                Ok(phi)
            }
            Tok::LParen if matches!(self.peek(), Tok::Ident(_)) && self.toks[self.pos + 1].tok == Tok::Eq => {
                let left = self.name()?;
                self.bump();
                let right = self.name()?;
                self.expect(Tok::Question, "`?`")?;
                let (then, _) = self.formula()?;
                self.expect(Tok::Colon, "`:`")?;
                let (otherwise, _) = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Formula::IfEq { left, right, then: Box::new(then), otherwise: Box::new(otherwise) })
            }
            Tok::LParen => {
                let (inner, _) = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                self.err("expected a formula")
            }
        }
    }
}

/// Parses a formula. Unparenthesised chains of `&` and `(+p)` become single
/// n-ary operators.
pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let (f, _) = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.err("unexpected input after formula");
    }
    Ok(f)
}
