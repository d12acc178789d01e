use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use super::Formula;
use crate::dist::{dist_par, interp, Distribution};
use crate::error::{Error, Result};
use crate::name::{fresh, Name, Polarity};
use crate::rat::Rat;
use crate::syntax::{Proc, State, Subst};
use crate::testing::{closed_dist, meets_bound, Direction, OutcomeVector};

/// A test whose outcomes decide a formula, with the target value to compare
/// against. `target` is indexed like `omega`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharTest {
    pub test: Proc,
    pub target: OutcomeVector,
    pub omega: Vec<Name>,
}

type Target = BTreeMap<Name, Rat>;

struct Builder {
    next: usize,
    omega: Vec<Name>,
    avoid: BTreeSet<String>,
}

impl Builder {
    /// A success name not used so far. Sibling subtests therefore never share
    /// success names.
    fn mint(&mut self) -> Name {
        loop {
            self.next += 1;
            let id = format!("w{}", self.next);
            if !self.avoid.contains(&id) {
                let w = Name::success(&id);
                self.omega.push(w.clone());
                return w;
            }
        }
    }

    fn build(&mut self, phi: &Formula, names: &BTreeSet<Name>) -> (Proc, Target) {
        let success = |w: &Name| State::success(w.clone(), Proc::nil());
        match phi {
            Formula::Top => {
                let w = self.mint();
                (success(&w).into(), Target::from([(w, Rat::one())]))
            }
            Formula::Ref(xs) => {
                let w = self.mint();
                let y = fresh(names);
                let branches = xs.iter().map(|m| match m {
                    Polarity::In(a) => State::output(a.clone(), a.clone(), success(&w).into()),
                    Polarity::Out(a) => State::input(a.clone(), y.clone(), success(&w).into()),
                });
                (State::sum_of(branches).into(), Target::new())
            }
            Formula::DiaFreeOut { subject, object, body } => {
                let w = self.mint();
                let (t, v) = self.build(body, names);
                let mut used = names.clone();
                used.extend(t.free_names());
                let y = fresh(&used);
                let guarded = State::matching(y.clone(), object.clone(), State::tau(t));
                let after = State::sum(guarded, success(&w));
                (State::sum(success(&w), State::input(subject.clone(), y, after.into())).into(), v)
            }
            Formula::DiaBoundOut { subject, binder, body } => {
                let z = fresh(names);
                let mut wider = names.clone();
                wider.insert(z.clone());
                let body = body.substitute(&Subst::from([(binder.clone(), z.clone())]));
                let w = self.mint();
                let (t, v) = self.build(&body, &wider);
                let mut guarded = State::tau(t);
                for n in names.iter().rev() {
                    guarded = State::mismatch(z.clone(), n.clone(), guarded);
                }
                let after = State::sum(guarded, success(&w));
                (State::sum(success(&w), State::input(subject.clone(), z, after.into())).into(), v)
            }
            Formula::DiaInput { subject, binder, body } => {
                let z = fresh(names);
                let mut wider = names.clone();
                wider.insert(z.clone());
                let p = Rat::one() / Rat::from_integer(wider.len().into());
                let mut branches = Vec::new();
                let mut target = Target::new();
                for n in &wider {
                    let w = self.mint();
                    let inst = body.substitute(&Subst::from([(binder.clone(), n.clone())]));
                    // only the fresh branch brings a new name into scope
                    let scope = if *n == z { &wider } else { names };
                    let (t, v) = self.build(&inst, scope);
                    let send = State::output(subject.clone(), n.clone(), t);
                    branches.push((p.clone(), State::sum(success(&w), send).into()));
                    add_scaled(&mut target, &v, &p);
                }
                (Proc::choice_of(branches).expect("at least one name"), target)
            }
            Formula::And(parts) if parts.is_empty() => self.build(&Formula::Top, names),
            Formula::And(parts) => {
                let p = Rat::one() / Rat::from_integer(parts.len().into());
                let mut branches = Vec::new();
                let mut target = Target::new();
                for part in parts {
                    let (t, v) = self.build(part, names);
                    branches.push((p.clone(), t));
                    add_scaled(&mut target, &v, &p);
                }
                (Proc::choice_of(branches).expect("non-empty"), target)
            }
            Formula::IfEq { left, right, then, otherwise } => {
                self.build(if left == right { then } else { otherwise }, names)
            }
            Formula::PDisj(parts) => {
                let half = Rat::new(1.into(), 2.into());
                let mut summands = Vec::new();
                let mut target = Target::new();
                for (p, part) in parts {
                    let (t, v) = self.build(part, names);
                    let w = self.mint();
                    summands.push(State::tau(Proc::choice(half.clone(), t, success(&w).into())));
                    add_scaled(&mut target, &v, &(p * &half));
                    add_scaled(&mut target, &Target::from([(w, Rat::one())]), &(p * &half));
                }
                (State::sum_of(summands).into(), target)
            }
        }
    }
}

fn add_scaled(acc: &mut Target, v: &Target, p: &Rat) {
    for (w, x) in v {
        *acc.entry(w.clone()).or_insert_with(Rat::zero) += p * x;
    }
}

fn uncovered(needed: &BTreeSet<Name>, names: &BTreeSet<Name>) -> Result<()> {
    let missing: Vec<String> = needed.difference(names).map(|n| n.to_string()).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::NamesNotCovered { missing: missing.join(", ") })
    }
}

/// The characteristic test of `phi` for processes whose free names lie in `names`.
pub fn char_test(phi: &Formula, names: &BTreeSet<Name>) -> Result<CharTest> {
    uncovered(&phi.free_names(), names)?;
    let avoid = names.iter().map(|n| n.id().to_string()).collect();
    let mut b = Builder { next: 0, omega: Vec::new(), avoid };
    let (test, target) = b.build(phi, names);
    let target = b.omega.iter().map(|w| target.get(w).cloned().unwrap_or_else(Rat::zero)).collect();
    Ok(CharTest { test, target, omega: b.omega })
}

/// Number of success names the characteristic test of `phi` would mint, or
/// `None` once it exceeds `cap`. Much cheaper than building the test.
pub fn char_test_width(phi: &Formula, names: &BTreeSet<Name>, cap: usize) -> Option<usize> {
    fn mint(k: usize, left: &mut usize) -> Option<()> {
        *left = left.checked_sub(k)?;
        Some(())
    }

    fn count(phi: &Formula, names: &BTreeSet<Name>, left: &mut usize) -> Option<()> {
        match phi {
            Formula::Top | Formula::Ref(_) => mint(1, left),
            Formula::DiaFreeOut { body, .. } => {
                mint(1, left)?;
                count(body, names, left)
            }
            Formula::DiaBoundOut { binder, body, .. } => {
                mint(1, left)?;
                let z = fresh(names);
                let mut wider = names.clone();
                wider.insert(z.clone());
                count(&body.substitute(&Subst::from([(binder.clone(), z)])), &wider, left)
            }
            Formula::DiaInput { binder, body, .. } => {
                let z = fresh(names);
                let mut wider = names.clone();
                wider.insert(z.clone());
                for n in &wider {
                    mint(1, left)?;
                    let scope = if *n == z { &wider } else { names };
                    count(&body.substitute(&Subst::from([(binder.clone(), n.clone())])), scope, left)?;
                }
                Some(())
            }
            Formula::And(parts) if parts.is_empty() => mint(1, left),
            Formula::And(parts) => parts.iter().try_for_each(|f| count(f, names, left)),
            Formula::IfEq { left: l, right, then, otherwise } => count(if l == right { then } else { otherwise }, names, left),
            Formula::PDisj(parts) => parts.iter().try_for_each(|(_, f)| {
                mint(1, left)?;
                count(f, names, left)
            }),
        }
    }
    let mut left = cap;
    count(phi, names, &mut left)?;
    Some(cap - left)
}

/// Decides `d ⊨ phi` by applying the characteristic test and comparing with its
/// target: below it for formulas with refusals, above it otherwise.
pub fn sat_via_test(d: &Distribution, phi: &Formula, names: &BTreeSet<Name>) -> Result<bool> {
    let dir = if phi.has_ref() { Direction::Leq } else { Direction::Geq };
    sat_via_test_in(d, phi, names, dir)
}

/// As `sat_via_test` with an explicit comparison. `Leq` is valid for every
/// formula, `Geq` only for formulas without refusals.
pub fn sat_via_test_in(d: &Distribution, phi: &Formula, names: &BTreeSet<Name>, dir: Direction) -> Result<bool> {
    uncovered(&d.free_names(), names)?;
    let ct = char_test(phi, names)?;
    Ok(meets_bound(&closed_dist(&dist_par(&interp(&ct.test), d)), &ct.omega, &ct.target, dir).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;
    use crate::rat::rat;
    use crate::syntax::{parse, ParseOptions};

    fn names(xs: &[&str]) -> BTreeSet<Name> {
        xs.iter().map(|s| Name::channel(s)).collect()
    }

    #[test]
    fn width_counts_minted_names() {
        let n = names(&["a", "b"]);
        for text in ["T", "ref{a}", "<a(x)>(x=b ? T : <~x a>T)", "T (+1/3) <~a(y)>ref{y}", "<a(x)><a(y)>T & T"] {
            let phi = parse_formula(text).unwrap();
            let ct = char_test(&phi, &n).unwrap();
            assert_eq!(char_test_width(&phi, &n, 1000), Some(ct.omega.len()), "{text}");
            assert_eq!(char_test_width(&phi, &n, ct.omega.len() - 1), None, "{text}");
        }
    }

    fn d(text: &str) -> Distribution {
        interp(&parse(text, &ParseOptions::default()).unwrap())
    }

    fn test_text(text: &str) -> String {
        parse(text, &ParseOptions::default()).unwrap().to_string()
    }

    #[test]
    fn top_and_refusal() {
        let t = char_test(&Formula::Top, &names(&["a"])).unwrap();
        assert_eq!(t.test.to_string(), "w1.0");
        assert_eq!(t.target, vec![rat(1, 1)]);
        let t = char_test(&parse_formula("ref{~a}").unwrap(), &names(&["a"])).unwrap();
        assert_eq!(t.test.to_string(), test_text("a(n0).w1.0"));
        assert_eq!(t.target, vec![rat(0, 1)]);
        let t = char_test(&parse_formula("ref{a}").unwrap(), &names(&["a"])).unwrap();
        assert_eq!(t.test.to_string(), test_text("a!a.w1.0"));
    }

    #[test]
    fn free_output() {
        let t = char_test(&parse_formula("<~a b>T").unwrap(), &names(&["a", "b"])).unwrap();
        assert_eq!(t.test.to_string(), test_text("w1.0 + a(n0).([n0=b]tau.w2.0 + w1.0)"));
        assert_eq!(t.target, vec![rat(0, 1), rat(1, 1)]);
        assert_eq!(t.omega, vec![Name::success("w1"), Name::success("w2")]);
    }

    #[test]
    fn uncovered_names_are_rejected() {
        assert!(char_test(&parse_formula("<~a b>T").unwrap(), &names(&["a"])).is_err());
    }

    #[test]
    fn targets_of_refusal_free_formulas_sum_to_one() {
        for text in ["<a(x)><~x x>T", "T & <~a b>T", "<~a b>T (+1/3) <~a(y)>T", "<a(x)>(T (+1/2) <~x a>T)"] {
            let t = char_test(&parse_formula(text).unwrap(), &names(&["a", "b"])).unwrap();
            assert_eq!(t.target.iter().sum::<Rat>(), rat(1, 1), "{text}");
        }
    }

    #[test]
    fn decisions_by_test() {
        let n = names(&["a"]);
        assert!(sat_via_test(&d("0"), &Formula::Top, &n).unwrap());
        assert!(sat_via_test(&d("0"), &parse_formula("ref{a,~a}").unwrap(), &n).unwrap());
        assert!(!sat_via_test(&d("a(x).0"), &parse_formula("ref{a}").unwrap(), &n).unwrap());
        let n = names(&["a", "b"]);
        assert!(sat_via_test(&d("a!b.0"), &parse_formula("<~a b>T").unwrap(), &n).unwrap());
        assert!(!sat_via_test(&d("a!a.0"), &parse_formula("<~a b>T").unwrap(), &n).unwrap());
        assert!(sat_via_test(&d("new x.a!x.0"), &parse_formula("<~a(y)>T").unwrap(), &n).unwrap());
        assert!(!sat_via_test(&d("a!b.0"), &parse_formula("<~a(y)>T").unwrap(), &n).unwrap());
        assert!(sat_via_test(&d("a(x).x!x.0"), &parse_formula("<a(x)><~x x>T").unwrap(), &n).unwrap());
        assert!(!sat_via_test(&d("a(x).[x=b]x!x.0"), &parse_formula("<a(x)><~x x>T").unwrap(), &n).unwrap());
        let half = d("a!a.0 (+1/2) a!b.0");
        assert!(sat_via_test(&half, &parse_formula("<~a a>T (+1/2) <~a b>T").unwrap(), &n).unwrap());
        assert!(!sat_via_test(&half, &parse_formula("<~a a>T (+1/3) <~a b>T").unwrap(), &n).unwrap());
    }
}
