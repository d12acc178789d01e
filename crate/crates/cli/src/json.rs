//! JSON views of library values, and the `--pretty` text rendering.
//!
//! Rationals are strings (`"1/2"`) so they survive any JSON reader exactly.

use std::collections::BTreeSet;
use std::fmt::Write;
use std::io::IsTerminal;

use serde_json::{json, Value};

use pipcalc::dist::Distribution;
use pipcalc::logic::{CharTest, Formula, Sat};
use pipcalc::preorders::{Method, Relation, Verdict, Witness};
use pipcalc::rat::{fmt_rat, Rat};
use pipcalc::testing::ScalarOutcomes;
use pipcalc::Name;

pub fn rat(r: &Rat) -> Value {
    Value::String(fmt_rat(r))
}

pub fn rats(v: &[Rat]) -> Value {
    v.iter().map(rat).collect()
}

pub fn names(ns: &BTreeSet<Name>) -> Value {
    ns.iter().map(|n| n.to_string()).collect()
}

pub fn dist(d: &Distribution) -> Value {
    d.rendered().into_iter().map(|(s, w)| json!({ "state": s, "weight": w })).collect()
}

pub fn sat(s: Sat) -> Value {
    match s.as_bool() {
        Some(b) => Value::Bool(b),
        None => Value::Null,
    }
}

fn scalar(o: &ScalarOutcomes) -> Value {
    json!({ "outcomes": o.values().map(rat).collect::<Vec<_>>(), "max": rat(o.max()), "min": rat(o.min()) })
}

pub fn char_test(phi: &Formula, ns: &BTreeSet<Name>, ct: &CharTest) -> Value {
    json!({
        "formula": phi.to_string(),
        "names": names(ns),
        "test": ct.test.to_string(),
        "omega_order": ct.omega.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        "target": rats(&ct.target),
    })
}

fn witness(w: &Witness) -> Value {
    match w {
        Witness::Logic { formula, names: ns, test, certificate } => json!({
            "kind": "characteristic-formula",
            "formula": formula.to_string(),
            "test": test.as_ref().map(|ct| char_test(formula, ns, ct)),
            "certificate": certificate.as_ref().map(|c| json!({
                "point": rats(&c.point),
                "outcome": rats(&c.outcome),
            })),
        }),
        Witness::Game { pairs } => json!({
            "kind": "simulation",
            "pairs": pairs.iter().map(|(s, d)| json!({ "state": s.to_string(), "matched_by": dist(d) })).collect::<Vec<_>>(),
        }),
        Witness::Counterexample { test, left, right } => json!({
            "kind": "separating-test",
            "test": test.to_string(),
            "p": scalar(left),
            "q": scalar(right),
        }),
        Witness::None => Value::Null,
    }
}

pub fn verdict(v: &Verdict) -> Value {
    json!({
        "relation": match v.relation {
            Relation::May => "may",
            Relation::Must => "must",
        },
        "holds": sat(v.holds),
        "method": match v.method {
            Method::Logic => "logic",
            Method::Game => "game",
            Method::TestCorpus => "test-corpus",
        },
        "witness": witness(&v.witness),
    })
}

fn colour() -> bool {
    std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal()
}

/// Indented `key: value` lines; arrays of scalars stay on one line.
pub fn pretty(v: &Value) -> String {
    let mut out = String::new();
    render(v, 0, colour(), &mut out);
    out
}

fn inline(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::String(s) => Some(s.clone()),
        Value::Array(xs) if xs.iter().all(|x| !x.is_object() && !x.is_array()) => {
            Some(format!("[{}]", xs.iter().filter_map(inline).collect::<Vec<_>>().join(", ")))
        }
        Value::Array(_) | Value::Object(_) => None,
        other => Some(other.to_string()),
    }
}

fn render(v: &Value, depth: usize, colour: bool, out: &mut String) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if colour { format!("\x1b[1;36m{k}\x1b[0m") } else { k.clone() };
                match inline(x) {
                    Some(s) => writeln!(out, "{pad}{key}: {s}").unwrap(),
                    None => {
                        writeln!(out, "{pad}{key}:").unwrap();
                        render(x, depth + 1, colour, out);
                    }
                }
            }
        }
        Value::Array(xs) => {
            for x in xs {
                match inline(x) {
                    Some(s) => writeln!(out, "{pad}- {s}").unwrap(),
                    None => {
                        writeln!(out, "{pad}-").unwrap();
                        render(x, depth + 1, colour, out);
                    }
                }
            }
        }
        other => writeln!(out, "{pad}{}", inline(other).unwrap_or_default()).unwrap(),
    }
}
