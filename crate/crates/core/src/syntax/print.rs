use std::fmt;

use super::{Proc, State};
use crate::rat::fmt_rat;

// Precedence levels: choice 0, sum 1, parallel 2, unary 3.

fn tau_body(s: &State) -> Option<&Proc> {
    let State::Restrict { binder, body } = s else { return None };
    let State::Par(l, r) = &**body else { return None };
    let State::Input { subject, body: inner, .. } = &**l else { return None };
    let State::Output { subject: os, object, body: cont } = &**r else { return None };
    let nil_body = matches!(&**inner, Proc::State(State::Nil));
    if subject == binder && os == binder && object == binder && nil_body && !cont.free_names().contains(binder) {
        Some(cont)
    } else {
        None
    }
}

fn write_state(f: &mut fmt::Formatter<'_>, s: &State, level: u8) -> fmt::Result {
    let wrap = match s {
        State::Sum(..) => level > 1,
        State::Par(..) => level > 2,
        _ => false,
    };
    if wrap {
        f.write_str("(")?;
    }
    match s {
        State::Nil => f.write_str("0")?,
        _ if tau_body(s).is_some() => {
            f.write_str("tau.")?;
            write_proc(f, tau_body(s).unwrap(), 3)?;
        }
        State::Input { subject, binder, body } => {
            write!(f, "{subject}({binder}).")?;
            write_proc(f, body, 3)?;
        }
        State::Output { subject, object, body } if subject.is_success() && subject == object => {
            write!(f, "{subject}.")?;
            write_proc(f, body, 3)?;
        }
        State::Output { subject, object, body } => {
            write!(f, "{subject}!{object}.")?;
            write_proc(f, body, 3)?;
        }
        State::Match { left, right, body } => {
            write!(f, "[{left}={right}]")?;
            write_state(f, body, 3)?;
        }
        State::Mismatch { left, right, body } => {
            write!(f, "[{left}!={right}]")?;
            write_state(f, body, 3)?;
        }
        State::Sum(l, r) => {
            write_state(f, l, 2)?;
            f.write_str(" + ")?;
            write_state(f, r, 1)?;
        }
        State::Par(l, r) => {
            write_state(f, l, 2)?;
            f.write_str(" | ")?;
            write_state(f, r, 3)?;
        }
        State::Restrict { binder, body } => {
            write!(f, "new {binder}.")?;
            write_state(f, body, 3)?;
        }
    }
    if wrap {
        f.write_str(")")?;
    }
    Ok(())
}

fn write_proc(f: &mut fmt::Formatter<'_>, p: &Proc, level: u8) -> fmt::Result {
    match p {
        Proc::State(s) => write_state(f, s, level),
        Proc::Choice { p, left, right } => {
            if level > 0 {
                f.write_str("(")?;
            }
            write_proc(f, left, 1)?;
            write!(f, " (+{}) ", fmt_rat(p))?;
            write_proc(f, right, 0)?;
            if level > 0 {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_state(f, self, 0)
    }
}

impl fmt::Display for Proc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_proc(f, self, 0)
    }
}
