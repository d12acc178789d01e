//! Deciding the may and must preorders.
//!
//! The decision procedure builds the characteristic formula of one process,
//! turns it into its characteristic test and checks the other process against
//! the test's target value with an exact LP. Tests grow with the number of
//! names at every input, so oversized ones are replaced by a clause-by-clause
//! satisfaction check when that check is conclusive. A direct simulation game and a
//! test-corpus comparison serve as independent cross-checks.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};

use crate::dist::{dist_par, dist_subst, interp, Distribution};
use crate::logic::{char_formula, char_test, char_test_width, sat_structural, CharTest, Formula, Logic, Sat};
use crate::lp::{Cmp, Lp};
use crate::name::{fresh, Name};
use crate::rat::Rat;
use crate::semantics::{label_binder, Lts};
use crate::syntax::{Action, Proc, State, Subst};
use crate::testing::{closed_dist, meets_bound, Certificate, Direction, Gatherer, ScalarOutcomes};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Relation {
    /// Simulation, coinciding with may testing.
    May,
    /// Failure simulation, coinciding with must testing.
    Must,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Method {
    Logic,
    Game,
    TestCorpus,
}

#[derive(Clone, Debug)]
pub enum Witness {
    /// The characteristic formula, its test, and for positive verdicts the LP
    /// certificate of an outcome meeting the test's target. The test is absent
    /// when it was too wide and structural satisfaction settled the question.
    Logic { formula: Formula, names: BTreeSet<Name>, test: Option<CharTest>, certificate: Option<Certificate> },
    /// Pairs `(s, Θ)` verified by the game; they form a simulation.
    Game { pairs: Vec<(State, Distribution)> },
    /// A test that separates the processes.
    Counterexample { test: Proc, left: ScalarOutcomes, right: ScalarOutcomes },
    None,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub relation: Relation,
    pub holds: Sat,
    pub method: Method,
    pub witness: Witness,
}

/// Channel names of both processes plus one fresh name.
pub fn name_universe(p: &Proc, q: &Proc) -> BTreeSet<Name> {
    let mut names: BTreeSet<Name> = p.free_names().into_iter().chain(q.free_names()).filter(|n| !n.is_success()).collect();
    let extra = fresh(&names);
    names.insert(extra);
    names
}

/// Tests with more success names than this are only built when structural
/// satisfaction is inconclusive.
pub const MAX_TEST_WIDTH: usize = 2000;

fn decide_by_logic(relation: Relation, characterised: &Proc, checked: &Proc, names: BTreeSet<Name>) -> Verdict {
    let (logic, dir) = match relation {
        Relation::May => (Logic::L, Direction::Geq),
        Relation::Must => (Logic::F, Direction::Leq),
    };
    let formula = char_formula(&interp(characterised), &names, logic);
    let verdict = |holds, test, certificate| Verdict {
        relation,
        holds,
        method: Method::Logic,
        witness: Witness::Logic { formula: formula.clone(), names: names.clone(), test, certificate },
    };
    let checked = interp(checked);
    if char_test_width(&formula, &names, MAX_TEST_WIDTH).is_none() {
        let direct = sat_structural(&checked, &formula);
        if direct != Sat::Unknown {
            return verdict(direct, None, None);
        }
    }
    let test = char_test(&formula, &names).expect("characteristic formulas only mention the name universe");
    let applied = closed_dist(&dist_par(&interp(&test.test), &checked));
    let certificate = meets_bound(&applied, &test.omega, &test.target, dir);
    let holds = if certificate.is_some() { Sat::True } else { Sat::False };
    verdict(holds, Some(test), certificate)
}

/// `P ⊑ Q` for may testing: `Q` satisfies the refusal-free characteristic
/// formula of `P`.
pub fn decide_may(p: &Proc, q: &Proc) -> Verdict {
    decide_by_logic(Relation::May, p, q, name_universe(p, q))
}

/// `P ⊑ Q` for must testing: `P` satisfies the characteristic formula of `Q`.
pub fn decide_must(p: &Proc, q: &Proc) -> Verdict {
    decide_by_logic(Relation::Must, q, p, name_universe(p, q))
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum GameMode {
    Simulation,
    FailureSimulation,
    /// Simulation whose input clause allows no silent steps after the input.
    DelaySimulation,
}

/// A sound search for (failure) simulations. Positive answers are backed by the
/// set of verified pairs; a failed search is inconclusive because only vertex
/// derivatives are explored.
pub struct Game {
    lts: Lts,
    mode: GameMode,
    memo: HashMap<(State, Distribution), bool>,
}

impl Game {
    pub fn new(mode: GameMode) -> Self {
        Game { lts: Lts::new(), mode, memo: HashMap::new() }
    }

    /// Pairs found to be related so far, sorted.
    pub fn related_pairs(&self) -> Vec<(State, Distribution)> {
        let mut out: Vec<_> = self.memo.iter().filter(|(_, &v)| v).map(|(k, _)| k.clone()).collect();
        out.sort();
        out
    }

    /// Whether `s` is shown to be simulated by `theta`.
    pub fn related(&mut self, s: &State, theta: &Distribution) -> bool {
        let key = (s.clone(), theta.clone());
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        // derivatives are strictly smaller, so the recursion never revisits a pair
        let v = self.check_clauses(s, theta);
        self.memo.insert(key, v);
        v
    }

    fn check_clauses(&mut self, s: &State, theta: &Distribution) -> bool {
        let mut used = s.free_names();
        used.extend(theta.free_names());
        let trans = self.lts.transitions(s);
        let own = label_binder(s);
        let x = fresh(used.iter().chain(std::iter::once(&own)));
        for t in trans.iter() {
            match &t.label {
                Action::Input { subject, .. } => {
                    let mut candidates: Vec<Name> = used.iter().cloned().collect();
                    candidates.push(fresh(&used));
                    for w in candidates {
                        let delta = dist_subst(&t.target, &Subst::from([(own.clone(), w.clone())]));
                        let answers = if self.mode == GameMode::DelaySimulation {
                            self.lts.delay_input(theta, subject, &w)
                        } else {
                            self.lts.weak_input(theta, subject, &w)
                        };
                        if !answers.iter().any(|th| self.lifted(&delta, th)) {
                            return false;
                        }
                    }
                }
                label => {
                    let (label, delta) = match label {
                        Action::BoundOut { subject, .. } => (
                            Action::BoundOut { subject: subject.clone(), binder: x.clone() },
                            dist_subst(&t.target, &Subst::from([(own.clone(), x.clone())])),
                        ),
                        other => (other.clone(), t.target.clone()),
                    };
                    let answers = self.lts.weak_alpha(theta, &label).expect("not an input");
                    if !answers.iter().any(|th| self.lifted(&delta, th)) {
                        return false;
                    }
                }
            }
        }
        if self.mode == GameMode::FailureSimulation && !self.lts.has_tau(s) {
            // the largest refusal set of s: everything it does not offer
            let barbs = self.lts.barbs(s);
            let weak = self.lts.weak_tau_vertices(theta);
            let ok = weak.iter().any(|th| {
                th.support().all(|u| !self.lts.has_tau(u) && self.lts.barbs(u).is_subset(&barbs))
            });
            if !ok {
                return false;
            }
        }
        true
    }

    /// Whether `delta` is related to `theta` by the lifted relation, found by
    /// splitting `theta` into a point-wise transport or whole-`theta` parts.
    pub fn lifted(&mut self, delta: &Distribution, theta: &Distribution) -> bool {
        let sources: Vec<(State, Rat)> = delta.iter().map(|(s, w)| (s.clone(), w.clone())).collect();
        if sources.iter().all(|(s, _)| self.related(s, theta)) {
            return true;
        }
        let targets: Vec<(State, Rat)> = theta.iter().map(|(t, w)| (t.clone(), w.clone())).collect();
        // columns: s -> point t, or s -> all of theta
        let mut cols: Vec<(usize, Option<usize>)> = Vec::new();
        for (i, (s, _)) in sources.iter().enumerate() {
            for (j, (t, _)) in targets.iter().enumerate() {
                if self.related(s, &Distribution::point(t)) {
                    cols.push((i, Some(j)));
                }
            }
            if self.related(s, theta) {
                cols.push((i, None));
            }
        }
        if cols.is_empty() {
            return false;
        }
        let mut lp = Lp::new(cols.len());
        for (i, (_, w)) in sources.iter().enumerate() {
            let row = cols.iter().map(|&(a, _)| if a == i { Rat::one() } else { Rat::zero() }).collect();
            lp.add(row, Cmp::Eq, w.clone());
        }
        for (j, (_, w)) in targets.iter().enumerate() {
            let row = cols
                .iter()
                .map(|&(_, b)| match b {
                    Some(b) if b == j => Rat::one(),
                    Some(_) => Rat::zero(),
                    None => w.clone(),
                })
                .collect();
            lp.add(row, Cmp::Eq, w.clone());
        }
        lp.feasible_point().is_some()
    }
}

/// One round of the game at the top level: `simulate_game(s, Θ, mode)`.
pub fn simulate_game(s: &State, theta: &Distribution, mode: GameMode) -> Sat {
    if Game::new(mode).related(s, theta) {
        Sat::True
    } else {
        Sat::Unknown
    }
}

/// Checks the simulation preorder (`Simulation`, `DelaySimulation`) or the
/// failure simulation preorder (`FailureSimulation`) between two processes.
pub fn check_sim(p: &Proc, q: &Proc, mode: GameMode) -> Verdict {
    let mut game = Game::new(mode);
    let (relation, left, right) = match mode {
        GameMode::FailureSimulation => (Relation::Must, interp(q), interp(p)),
        _ => (Relation::May, interp(p), interp(q)),
    };
    let mut lts = Lts::new();
    let found = lts.weak_tau_vertices(&right).iter().any(|th| game.lifted(&left, th));
    Verdict {
        relation,
        holds: if found { Sat::True } else { Sat::Unknown },
        method: Method::Game,
        witness: if found { Witness::Game { pairs: game.related_pairs() } } else { Witness::None },
    }
}

#[derive(Clone, Debug)]
pub struct CorpusReport {
    pub checked: usize,
    /// Tests with the outcomes for `P` and `Q` that violate the preorder.
    pub violations: Vec<(Proc, ScalarOutcomes, ScalarOutcomes)>,
}

/// Compares scalar outcomes on each test: maxima for may, minima for must.
pub fn corpus_check(p: &Proc, q: &Proc, tests: &[Proc], relation: Relation) -> CorpusReport {
    let mut g = Gatherer::new();
    let mut violations = Vec::new();
    for t in tests {
        let left = g.apply_scalar(t, p);
        let right = g.apply_scalar(t, q);
        let bad = match relation {
            Relation::May => left.max() > right.max(),
            Relation::Must => left.min() > right.min(),
        };
        if bad {
            violations.push((t.clone(), left, right));
        }
    }
    CorpusReport { checked: tests.len(), violations }
}

/// A corpus verdict: `False` with a counterexample, otherwise `Unknown`.
pub fn corpus_verdict(p: &Proc, q: &Proc, tests: &[Proc], relation: Relation) -> Verdict {
    let report = corpus_check(p, q, tests, relation);
    match report.violations.into_iter().next() {
        Some((test, left, right)) => Verdict {
            relation,
            holds: Sat::False,
            method: Method::TestCorpus,
            witness: Witness::Counterexample { test, left, right },
        },
        None => Verdict { relation, holds: Sat::Unknown, method: Method::TestCorpus, witness: Witness::None },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, ParseOptions};

    fn pr(text: &str) -> Proc {
        parse(text, &ParseOptions::default()).unwrap()
    }

    #[test]
    fn mismatch_pair_is_separated() {
        let p = pr("a(x).a!b.0");
        let q = pr("a(x).[x!=c]tau.a!b.0");
        assert_eq!(decide_may(&p, &q).holds, Sat::False);
        assert_eq!(decide_may(&q, &p).holds, Sat::True);
        let report = corpus_check(&p, &q, &[pr("a!c.a(y).w")], Relation::May);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(check_sim(&p, &q, GameMode::Simulation).holds, Sat::Unknown);
    }

    #[test]
    fn early_versus_late() {
        let p = pr("a(x).b!x + a(x).0 + a(x).[x=z]b!x");
        let q = pr("tau.a(x).b!x + tau.a(x).0");
        assert_eq!(decide_may(&p, &q).holds, Sat::True);
        assert_eq!(check_sim(&p, &q, GameMode::Simulation).holds, Sat::True);
    }

    #[test]
    fn delay_example() {
        let p = pr("a(x).(c(u).0 (+1/2) d(u).0)");
        let q = pr("a(x).tau.(c(u).0 (+1/2) d(u).0)");
        assert_eq!(decide_may(&p, &q).holds, Sat::True);
        assert_eq!(check_sim(&p, &q, GameMode::Simulation).holds, Sat::True);
        assert_eq!(check_sim(&p, &q, GameMode::DelaySimulation).holds, Sat::Unknown);
    }

    #[test]
    fn must_examples() {
        let p = pr("a(u).0 + b(u).0");
        let q = pr("a(u).0");
        assert_eq!(decide_must(&p, &q).holds, Sat::False);
        assert_eq!(decide_must(&p, &p).holds, Sat::True);
        assert_eq!(check_sim(&p, &p, GameMode::FailureSimulation).holds, Sat::True);
    }

    #[test]
    fn games_are_reflexive() {
        for text in ["a(x).x!x.0 + tau.b!b.0", "new x.(a!x.x(y).0 | b(z).0)", "a!a.(b!b.0 (+1/3) 0)"] {
            let p = pr(text);
            for s in interp(&p).support() {
                assert_eq!(simulate_game(s, &Distribution::point(s), GameMode::Simulation), Sat::True, "{s}");
                assert_eq!(simulate_game(s, &Distribution::point(s), GameMode::FailureSimulation), Sat::True, "{s}");
            }
        }
    }
}
