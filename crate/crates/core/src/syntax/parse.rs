//! Concrete syntax for processes and tests.
//!
//! ```text
//! P ::= S | S (+p) P                     probabilistic choice, loosest
//! S ::= U ('|' U)* ('+' ...)*            parallel binds tighter than sum
//! U ::= a(x).U | a!b.U | w.U | tau.U | new x.U | [x=y]U | [x!=y]U | 0 | (P)
//! ```
//!
//! A continuation may be omitted (`a!b` means `a!b.0`). Success names are the
//! identifiers `w`, `omega` and `w` followed by digits or underscores, unless an
//! explicit set is declared.

use std::collections::BTreeSet;

use super::canon::barendregt_proc;
use super::{Proc, State};
use crate::error::{Error, Result};
use crate::name::Name;
use crate::rat::{parse_rat, Rat};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum SuccessNames {
    /// `w`, `omega`, and `w` followed by digits or underscores.
    #[default]
    Conventional,
    Declared(BTreeSet<String>),
}

impl SuccessNames {
    pub fn is_success(&self, id: &str) -> bool {
        match self {
            SuccessNames::Conventional => {
                id == "w"
                    || id == "omega"
                    || (id.len() > 1
                        && id.starts_with('w')
                        && id[1..].bytes().all(|b| b.is_ascii_digit() || b == b'_'))
            }
            SuccessNames::Declared(set) => set.contains(id),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ParseOptions {
    pub success: SuccessNames,
}

impl ParseOptions {
    pub fn declared<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ParseOptions { success: SuccessNames::Declared(names.into_iter().map(Into::into).collect()) }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Zero,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Dot,
    Bang,
    Eq,
    Neq,
    Plus,
    Bar,
    Choice(Rat),
    Eof,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let syntax = |line, col, msg: String| Error::Syntax { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let adv = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                adv(1, &mut i, &mut col);
                continue;
            }
            '(' if chars.get(i + 1) == Some(&'+') => {
                let start = i + 2;
                let end = chars[start..]
                    .iter()
                    .position(|&ch| ch == ')')
                    .map(|p| start + p)
                    .ok_or_else(|| syntax(l0, c0, "unterminated probabilistic choice".into()))?;
                let lit: String = chars[start..end].iter().collect();
                let p = parse_rat(&lit)
                    .ok_or_else(|| syntax(l0, c0, format!("bad probability literal `{}`", lit.trim())))?;
                out.push(Spanned { tok: Tok::Choice(p), line: l0, col: c0 });
                adv(end + 1 - i, &mut i, &mut col);
                continue;
            }
            '(' => out.push(Spanned { tok: Tok::LParen, line, col }),
            ')' => out.push(Spanned { tok: Tok::RParen, line, col }),
            '[' => out.push(Spanned { tok: Tok::LBrack, line, col }),
            ']' => out.push(Spanned { tok: Tok::RBrack, line, col }),
            '.' => out.push(Spanned { tok: Tok::Dot, line, col }),
            '+' => out.push(Spanned { tok: Tok::Plus, line, col }),
            '|' => out.push(Spanned { tok: Tok::Bar, line, col }),
            '=' => out.push(Spanned { tok: Tok::Eq, line, col }),
            '!' if chars.get(i + 1) == Some(&'=') => {
                out.push(Spanned { tok: Tok::Neq, line, col });
                adv(2, &mut i, &mut col);
                continue;
            }
            '!' => out.push(Spanned { tok: Tok::Bang, line, col }),
            '0' => {
                if chars.get(i + 1).is_some_and(|ch| ch.is_ascii_alphanumeric()) {
                    return Err(syntax(line, col, "identifiers cannot start with a digit".into()));
                }
                out.push(Spanned { tok: Tok::Zero, line, col })
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                    i += 1;
                }
                let id: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Spanned { tok: Tok::Ident(id), line: l0, col: c0 });
                continue;
            }
            other => return Err(syntax(line, col, format!("unexpected character `{other}`"))),
        }
        adv(1, &mut i, &mut col);
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    opts: &'a ParseOptions,
    scope: Vec<String>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (line, col) = self.here();
        Err(Error::Syntax { line, col, msg: msg.into() })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.bump() {
            Tok::Ident(id) => Ok(id),
            other => {
                self.pos -= 1;
                self.err(format!("expected a name, found {}", describe(&other)))
            }
        }
    }

    /// A name in a channel position.
    fn channel(&mut self) -> Result<Name> {
        let (line, col) = self.here();
        let id = self.ident()?;
        if self.opts.success.is_success(&id) && !self.scope.contains(&id) {
            return Err(Error::Syntax { line, col, msg: format!("success name `{id}` used as a channel") });
        }
        if id.starts_with('_') && !self.scope.contains(&id) {
            return Err(Error::Syntax { line, col, msg: format!("`{id}` is reserved for bound names") });
        }
        if id == "new" || id == "tau" {
            return Err(Error::Syntax { line, col, msg: format!("keyword `{id}` used as a name") });
        }
        Ok(Name::channel(&id))
    }

    fn binder(&mut self) -> Result<String> {
        let (line, col) = self.here();
        let id = self.ident()?;
        if self.opts.success.is_success(&id) || id == "new" || id == "tau" {
            return Err(Error::Syntax { line, col, msg: format!("`{id}` cannot be bound") });
        }
        Ok(id)
    }

    fn proc(&mut self) -> Result<Proc> {
        let (line, col) = self.here();
        let first = self.unary()?;
        let left: Proc = match first {
            // a parenthesised choice may itself be a branch of a choice
            Proc::Choice { .. } if !matches!(self.peek(), Tok::Plus | Tok::Bar) => first,
            Proc::Choice { .. } => {
                return Err(Error::Sort {
                    line,
                    col,
                    msg: "probabilistic choice must appear under a prefix or at the top level".into(),
                })
            }
            Proc::State(s) => self.sum(s)?.into(),
        };
        if let Tok::Choice(p) = self.peek().clone() {
            use num_traits::{One, Zero};
            if p <= Rat::zero() || p > Rat::one() {
                return self.err("probability must lie in (0, 1]");
            }
            self.bump();
            let right = self.proc()?;
            return Ok(Proc::choice(p, left, right));
        }
        Ok(left)
    }

    fn sum(&mut self, first: State) -> Result<State> {
        let mut items = vec![self.par(first)?];
        while *self.peek() == Tok::Plus {
            self.bump();
            let next = self.unary_state()?;
            items.push(self.par(next)?);
        }
        Ok(State::sum_of(items))
    }

    fn par(&mut self, first: State) -> Result<State> {
        let mut acc = first;
        while *self.peek() == Tok::Bar {
            self.bump();
            let rhs = self.unary_state()?;
            acc = State::par(acc, rhs);
        }
        Ok(acc)
    }

    fn unary_state(&mut self) -> Result<State> {
        let (line, col) = self.here();
        match self.unary()? {
            Proc::State(s) => Ok(s),
            Proc::Choice { .. } => Err(Error::Sort {
                line,
                col,
                msg: "probabilistic choice must appear under a prefix or at the top level".into(),
            }),
        }
    }

    /// Continuation after a prefix: `.U`, or nothing for `0`.
    fn continuation(&mut self) -> Result<Proc> {
        if *self.peek() == Tok::Dot {
            self.bump();
            self.unary()
        } else {
            Ok(Proc::nil())
        }
    }

    fn with_bound<T>(&mut self, id: String, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        self.scope.push(id);
        let r = f(self);
        self.scope.pop();
        r
    }

    fn unary(&mut self) -> Result<Proc> {
        match self.peek().clone() {
            Tok::Zero => {
                self.bump();
                Ok(Proc::nil())
            }
            Tok::LParen => {
                self.bump();
                let p = self.proc()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(p)
            }
            Tok::LBrack => {
                self.bump();
                let x = self.channel()?;
                let eq = match self.bump() {
                    Tok::Eq => true,
                    Tok::Neq => false,
                    _ => {
                        self.pos -= 1;
                        return self.err("expected `=` or `!=`");
                    }
                };
                let y = self.channel()?;
                self.expect(Tok::RBrack, "`]`")?;
                let body = self.unary_state()?;
                Ok(if eq { State::matching(x, y, body) } else { State::mismatch(x, y, body) }.into())
            }
            Tok::Ident(id) if id == "new" => {
                self.bump();
                let mut binders = vec![self.binder()?];
                while let Tok::Ident(_) = self.peek() {
                    binders.push(self.binder()?);
                }
                self.expect(Tok::Dot, "`.` after restriction")?;
                let n = binders.len();
                for b in &binders {
                    self.scope.push(b.clone());
                }
                let body = self.unary_state();
                self.scope.truncate(self.scope.len() - n);
                let mut body = body?;
                for b in binders.into_iter().rev() {
                    body = State::restrict(Name::channel(&b), body);
                }
                Ok(body.into())
            }
            Tok::Ident(id) if id == "tau" => {
                self.bump();
                let body = self.continuation()?;
                Ok(State::tau(body).into())
            }
            Tok::Ident(id) if self.opts.success.is_success(&id) && !self.scope.contains(&id) => {
                self.bump();
                let body = self.continuation()?;
                Ok(State::success(Name::success(&id), body).into())
            }
            Tok::Ident(_) => {
                let subject = self.channel()?;
                match self.peek() {
                    Tok::LParen => {
                        self.bump();
                        let x = self.binder()?;
                        self.expect(Tok::RParen, "`)`")?;
                        let body = self.with_bound(x.clone(), |p| p.continuation())?;
                        Ok(State::input(subject, Name::channel(&x), body).into())
                    }
                    Tok::Bang => {
                        self.bump();
                        let object = self.channel()?;
                        let body = self.continuation()?;
                        Ok(State::output(subject, object, body).into())
                    }
                    _ => self.err(format!("expected `(` or `!` after `{subject}`")),
                }
            }
            other => self.err(format!("expected a process, found {}", describe(&other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(id) => format!("`{id}`"),
        Tok::Zero => "`0`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBrack => "`[`".into(),
        Tok::RBrack => "`]`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Eq => "`=`".into(),
        Tok::Neq => "`!=`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Bar => "`|`".into(),
        Tok::Choice(_) => "probabilistic choice".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses a process term; binders are renamed apart from each other and from
/// the free names.
pub fn parse(text: &str, opts: &ParseOptions) -> Result<Proc> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, opts, scope: Vec::new() };
    let out = p.proc()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {}", describe(p.peek())));
    }
    Ok(barendregt_proc(&out))
}

/// Parses a term that must be state-based.
pub fn parse_state(text: &str, opts: &ParseOptions) -> Result<State> {
    match parse(text, opts)? {
        Proc::State(s) => Ok(s),
        Proc::Choice { .. } => Err(Error::Sort {
            line: 1,
            col: 1,
            msg: "expected a state-based process, found a probabilistic choice".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::super::alpha_eq;
    use super::*;
    use crate::rat::rat;

    fn n(s: &str) -> Name {
        Name::channel(s)
    }

    fn p(text: &str) -> Proc {
        parse(text, &ParseOptions::default()).unwrap()
    }

    #[test]
    fn input_prefix() {
        assert_eq!(p("a(x).0"), State::input(n("a"), n("x"), Proc::nil()).into());
    }

    #[test]
    fn tau_sugar_expands() {
        let got = p("tau.b!b.0");
        let expected = State::restrict(
            n("x"),
            State::par(
                State::input(n("x"), n("y"), Proc::nil()),
                State::output(n("x"), n("x"), State::output(n("b"), n("b"), Proc::nil()).into()),
            ),
        );
        assert!(alpha_eq(got.as_state().unwrap(), &expected));
    }

    #[test]
    fn choice_under_prefix() {
        let got = p("a(x).(c(u).0 (+1/2) d(u).0)");
        match got {
            Proc::State(State::Input { subject, body, .. }) => {
                assert_eq!(subject, n("a"));
                match &*body {
                    Proc::Choice { p, .. } => assert_eq!(*p, rat(1, 2)),
                    other => panic!("expected a choice, got {other:?}"),
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precedence() {
        // prefix > restriction > match > par > sum > choice
        let got = p("a!b.0 | c!d.0 + e!f.0");
        assert!(matches!(got, Proc::State(State::Sum(..))));
        let got = p("new x.x!a.0 | b!b.0");
        assert!(matches!(got, Proc::State(State::Par(..))));
        let got = p("[a=b]a!b.0 | c!c.0");
        assert!(matches!(got, Proc::State(State::Par(..))));
        let got = p("a!b.0 + c!c.0 (+1/3) 0");
        assert!(matches!(got, Proc::Choice { .. }));
    }

    #[test]
    fn sort_error_for_choice_in_state_position() {
        let err = parse("(a!b.0 (+1/2) 0) | c!c.0", &ParseOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Sort { line: 1, col: 1, .. }), "{err}");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse("a(x).\n  b?c", &ParseOptions::default()).unwrap_err();
        assert_eq!(err, Error::Syntax { line: 2, col: 4, msg: "unexpected character `?`".into() });
        assert!(parse("a(x", &ParseOptions::default()).is_err());
        assert!(parse("0 (+3/2) 0", &ParseOptions::default()).is_err());
    }

    #[test]
    fn success_prefixes() {
        let got = p("w1.0 + a!b.0");
        assert!(got.success_names().contains(&Name::success("w1")));
        assert!(parse("a(w1).0", &ParseOptions::default()).is_err());
        let opts = ParseOptions::declared(["ok"]);
        let got = parse("ok.0", &opts).unwrap();
        assert!(got.success_names().contains(&Name::success("ok")));
    }

    #[test]
    fn barendregt_after_parse() {
        let got = p("a(x).x!x.0 | a(x).0 | x!x.0");
        assert!(super::super::is_barendregt(&got));
    }
}
