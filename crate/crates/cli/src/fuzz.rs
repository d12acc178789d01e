//! Random cross-checks. Each case draws two processes and a few tests, then
//! compares the logic route against the simulation games and the test corpus.
//! The procedures may disagree only where one of them is inconclusive.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;

use serde_json::{json, Value};

use pipcalc::dist::interp;
use pipcalc::gen::Gen;
use pipcalc::logic::Sat;
use pipcalc::preorders::{check_sim, corpus_check, decide_may, decide_must, GameMode, Relation};
use pipcalc::syntax::{parse, ParseOptions, Proc};

const TESTS_PER_CASE: usize = 4;

fn case_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k as u64)
}

struct Case {
    p: Proc,
    q: Proc,
    may: Sat,
    must: Sat,
    problems: Vec<String>,
}

fn one(seed: u64, size: usize) -> Case {
    let mut g = Gen::new(seed, size);
    let (p, q) = (g.process(), g.process());
    let mut tg = Gen::new(seed.rotate_left(17), size.max(2));
    let tests: Vec<Proc> = (0..TESTS_PER_CASE).map(|_| tg.test()).collect();
    let mut problems = Vec::new();

    for r in [&p, &q] {
        match parse(&r.to_string(), &ParseOptions::default()) {
            Ok(back) if interp(&back) == interp(r) => {}
            Ok(back) => problems.push(format!("{r} reparsed as {back}")),
            Err(e) => problems.push(format!("{r} does not reparse: {e}")),
        }
    }

    let may = decide_may(&p, &q).holds;
    let must = decide_must(&p, &q).holds;
    let checks = [
        ("may", may, check_sim(&p, &q, GameMode::Simulation).holds, Relation::May),
        ("must", must, check_sim(&p, &q, GameMode::FailureSimulation).holds, Relation::Must),
    ];
    for (what, logic, game, relation) in checks {
        if logic == Sat::Unknown {
            problems.push(format!("{what}: logic route inconclusive"));
        }
        if game == Sat::True && logic == Sat::False {
            problems.push(format!("{what}: game finds a simulation the logic route rejects"));
        }
        let report = corpus_check(&p, &q, &tests, relation);
        if let (Some((t, _, _)), Sat::True) = (report.violations.first(), logic) {
            problems.push(format!("{what}: test {t} separates a pair the logic route relates"));
        }
    }
    for (what, refl) in [("may", decide_may(&p, &p).holds), ("must", decide_must(&p, &p).holds)] {
        if refl != Sat::True {
            problems.push(format!("{what}: not reflexive"));
        }
    }
    Case { p, q, may, must, problems }
}

fn panic_message(e: Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| e.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

/// Runs `count` cases and reports tallies and every failure. The flag is set
/// when any case failed.
pub fn run(seed: u64, count: usize, size: usize) -> (Value, bool) {
    let results: Mutex<Vec<(usize, Result<Case, String>)>> = Mutex::new(Vec::with_capacity(count));
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(count.max(1));
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    std::thread::scope(|s| {
        for w in 0..workers {
            let results = &results;
            s.spawn(move || {
                for k in (w..count).step_by(workers) {
                    let r = catch_unwind(AssertUnwindSafe(|| one(case_seed(seed, k), size))).map_err(panic_message);
                    results.lock().expect("no worker holds the lock while panicking").push((k, r));
                }
            });
        }
    });
    std::panic::set_hook(hook);

    let mut results = results.into_inner().expect("workers finished");
    results.sort_by_key(|(k, _)| *k);
    let mut tally: BTreeMap<&str, BTreeMap<String, usize>> = BTreeMap::new();
    let mut failures = Vec::new();
    for (k, r) in &results {
        match r {
            Ok(c) => {
                *tally.entry("may").or_default().entry(c.may.to_string()).or_default() += 1;
                *tally.entry("must").or_default().entry(c.must.to_string()).or_default() += 1;
                if !c.problems.is_empty() {
                    failures.push(json!({ "case": k, "p": c.p.to_string(), "q": c.q.to_string(), "problems": c.problems }));
                }
            }
            Err(msg) => failures.push(json!({ "case": k, "panic": msg })),
        }
    }
    let failed = !failures.is_empty();
    (json!({ "seed": seed, "count": count, "size": size, "verdicts": tally, "failures": failures }), failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs_are_clean_and_deterministic() {
        let (a, failed) = run(3, 6, 6);
        assert!(!failed, "{a}");
        assert_eq!(a, run(3, 6, 6).0);
    }
}
