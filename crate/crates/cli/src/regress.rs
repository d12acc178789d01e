//! Regression files: a term file whose `expect` lines state verdicts.
//!
//! ```text
//! expect may|must|sim|fsim P Q true|false|unknown
//! expect apply T P v1,v2,...        # the full scalar outcome set
//! expect sat P true|false FORMULA   # checked structurally and by test
//! ```
//!
//! `P`, `Q`, `T` are definition names (or inline terms without spaces).

use std::collections::BTreeSet;

use serde_json::{json, Value};

use pipcalc::dist::interp;
use pipcalc::logic::{parse_formula, sat_structural, sat_via_test};
use pipcalc::preorders::{check_sim, decide_may, decide_must, GameMode};
use pipcalc::rat::{fmt_rat, parse_rat};
use pipcalc::syntax::parse_term_file;
use pipcalc::testing::apply_scalar;

use crate::{CliError, Terms};

pub const BUNDLED: &str = include_str!("../regress/examples.pi");

fn bad(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("line {line}: {msg}"))
}

fn verdict_word(line: usize, w: &str) -> Result<String, CliError> {
    match w {
        "true" | "false" | "unknown" => Ok(w.to_string()),
        _ => Err(bad(line, format!("expected true, false or unknown, found `{w}`"))),
    }
}

struct Expect {
    line: usize,
    words: Vec<String>,
    /// Text after the fourth word, for formulas.
    tail: String,
}

fn split(text: &str) -> (String, Vec<Expect>) {
    let mut terms = String::new();
    let mut expects = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = body.split_whitespace().collect();
        if words.first() == Some(&"expect") {
            let tail = body.trim_start().splitn(5, char::is_whitespace).nth(4).unwrap_or("").trim().to_string();
            expects.push(Expect { line: k + 1, words: words.iter().map(|w| w.to_string()).collect(), tail });
            terms.push('\n');
        } else {
            terms.push_str(raw);
            terms.push('\n');
        }
    }
    (terms, expects)
}

fn evaluate(terms: &Terms, e: &Expect) -> Result<(String, String), CliError> {
    let w: Vec<&str> = e.words.iter().map(String::as_str).collect();
    match w.as_slice() {
        ["expect", rel @ ("may" | "must" | "sim" | "fsim"), p, q, want] => {
            let (pp, qq) = (terms.term(p)?, terms.term(q)?);
            let v = match *rel {
                "may" => decide_may(&pp, &qq),
                "must" => decide_must(&pp, &qq),
                "sim" => check_sim(&pp, &qq, GameMode::Simulation),
                _ => check_sim(&pp, &qq, GameMode::FailureSimulation),
            };
            Ok((verdict_word(e.line, want)?, v.holds.to_string()))
        }
        ["expect", "apply", t, p, want] => {
            let mut expected = BTreeSet::new();
            for v in want.split(',') {
                expected.insert(parse_rat(v).ok_or_else(|| bad(e.line, format!("`{v}` is not a rational")))?);
            }
            let got = apply_scalar(&terms.term(t)?, &terms.term(p)?);
            let render = |vs: Vec<&pipcalc::Rat>| vs.into_iter().map(fmt_rat).collect::<Vec<_>>().join(",");
            Ok((render(expected.iter().collect()), render(got.values().collect())))
        }
        ["expect", "sat", p, want, ..] if !e.tail.is_empty() => {
            let d = interp(&terms.term(p)?);
            let phi = parse_formula(&e.tail)?;
            let mut names: BTreeSet<_> = d.free_names().into_iter().chain(phi.free_names()).collect();
            names.insert(pipcalc::fresh(&names));
            let structural = sat_structural(&d, &phi).to_string();
            let by_test = sat_via_test(&d, &phi, &names)?.to_string();
            let got = if structural == by_test || structural == "unknown" { by_test } else { format!("{structural}/{by_test}") };
            Ok((verdict_word(e.line, want)?, got))
        }
        _ => Err(bad(e.line, "malformed expect line")),
    }
}

/// Evaluates every `expect` line; the flag reports any mismatch.
pub fn run(text: &str) -> Result<(Value, bool), CliError> {
    let (defs, expects) = split(text);
    let terms = Terms::new(parse_term_file(&defs)?);
    let mut cases = Vec::new();
    let mut failed = 0;
    for e in &expects {
        let (expected, actual) = evaluate(&terms, e)?;
        let ok = expected == actual;
        failed += usize::from(!ok);
        cases.push(json!({
            "line": e.line,
            "check": e.words[1..e.words.len().min(4)].join(" "),
            "expected": expected,
            "actual": actual,
            "ok": ok,
        }));
    }
    Ok((json!({ "cases": cases, "passed": expects.len() - failed, "failed": failed }), failed > 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_examples_pass() {
        let (report, failed) = run(BUNDLED).unwrap();
        assert!(!failed, "{report:#}");
        assert!(report["passed"].as_u64().unwrap() >= 10);
    }

    #[test]
    fn mismatches_and_bad_lines_are_reported() {
        let (report, failed) = run("p := a(x).0\nexpect may p 0 true\n").unwrap();
        assert!(failed);
        assert_eq!(report["cases"][0]["actual"], "false");
        assert!(run("expect may p").is_err());
        assert!(run("expect apply w.0 0 x").is_err());
    }
}
