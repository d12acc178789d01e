//! Seeded random processes, tests and formulas for property checks and fuzzing.
//!
//! Sizes count constructors: every prefix, guard, operator and `0` is one
//! symbol; names are free.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::logic::{Formula, Logic};
use crate::name::{Name, Polarity};
use crate::rat::{rat, Rat};
use crate::syntax::{Proc, State};

/// Default channel names of generated terms.
pub const CHANNELS: [&str; 3] = ["a", "b", "c"];

/// Default choice probabilities.
pub fn probabilities() -> Vec<Rat> {
    vec![rat(1, 4), rat(1, 3), rat(1, 2), rat(2, 3)]
}

const BINDERS: [&str; 4] = ["x", "y", "u", "v"];

pub struct Gen {
    rng: ChaCha8Rng,
    /// Upper bound on the number of symbols.
    pub size: usize,
    channels: Vec<Name>,
    probs: Vec<Rat>,
}

impl Gen {
    pub fn new(seed: u64, size: usize) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            size,
            channels: CHANNELS.iter().map(|c| Name::channel(c)).collect(),
            probs: probabilities(),
        }
    }

    pub fn channels(&self) -> &[Name] {
        &self.channels
    }

    /// A process without success names.
    pub fn process(&mut self) -> Proc {
        let n = self.rng.gen_range(1..=self.size);
        self.proc(n, &mut Vec::new(), None)
    }

    /// A test using the single success name `w`.
    pub fn test(&mut self) -> Proc {
        let n = self.rng.gen_range(2..=self.size);
        self.proc(n, &mut Vec::new(), Some(&Name::success("w")))
    }

    /// A formula over the default channels; `Logic::L` formulas have no refusals.
    pub fn formula(&mut self, logic: Logic) -> Formula {
        let n = self.rng.gen_range(1..=self.size.min(8));
        self.form(n, &mut Vec::new(), logic)
    }

    fn pick_name(&mut self, bound: &[Name]) -> Name {
        let k = self.rng.gen_range(0..self.channels.len() + bound.len());
        if k < self.channels.len() {
            self.channels[k].clone()
        } else {
            bound[k - self.channels.len()].clone()
        }
    }

    fn pick_p(&mut self) -> Rat {
        self.probs.choose(&mut self.rng).expect("non-empty").clone()
    }

    fn binder(&self, bound: &[Name]) -> Name {
        Name::channel(BINDERS[bound.len() % BINDERS.len()])
    }

    /// Splits `n - 1` symbols between two subterms, each getting at least one.
    fn split(&mut self, n: usize) -> (usize, usize) {
        let left = self.rng.gen_range(1..n - 1);
        (left, n - 1 - left)
    }

    fn proc(&mut self, n: usize, bound: &mut Vec<Name>, success: Option<&Name>) -> Proc {
        if n >= 3 && self.rng.gen_bool(0.2) {
            let (l, r) = self.split(n);
            let p = self.pick_p();
            let left = self.proc(l, bound, success);
            let right = self.proc(r, bound, success);
            return Proc::choice(p, left, right);
        }
        Proc::State(self.state(n, bound, success))
    }

    fn state(&mut self, n: usize, bound: &mut Vec<Name>, success: Option<&Name>) -> State {
        if n <= 1 {
            return match success {
                Some(w) if self.rng.gen_bool(0.5) => State::success(w.clone(), Proc::nil()),
                _ => State::Nil,
            };
        }
        let choices = if n >= 3 { 9 } else { 6 };
        match self.rng.gen_range(0..choices) {
            0 | 1 => {
                let subject = self.pick_name(bound);
                let x = self.binder(bound);
                bound.push(x.clone());
                let body = self.proc(n - 1, bound, success);
                bound.pop();
                State::input(subject, x, body)
            }
            2 | 3 => {
                let subject = self.pick_name(bound);
                let object = self.pick_name(bound);
                State::output(subject, object, self.proc(n - 1, bound, success))
            }
            4 => match success {
                Some(w) => State::success(w.clone(), self.proc(n - 1, bound, success)),
                None => State::tau(self.proc(n - 1, bound, success)),
            },
            5 => {
                let (l, r) = (self.pick_name(bound), self.pick_name(bound));
                let body = self.state(n - 1, bound, success);
                if self.rng.gen_bool(0.5) {
                    State::matching(l, r, body)
                } else {
                    State::mismatch(l, r, body)
                }
            }
            6 | 7 => {
                let (l, r) = self.split(n);
                let left = self.state(l, bound, success);
                let right = self.state(r, bound, success);
                State::sum(left, right)
            }
            _ => {
                if self.rng.gen_bool(0.5) {
                    let (l, r) = self.split(n);
                    let left = self.state(l, bound, success);
                    let right = self.state(r, bound, success);
                    State::par(left, right)
                } else {
                    let x = self.binder(bound);
                    bound.push(x.clone());
                    let body = self.state(n - 1, bound, success);
                    bound.pop();
                    State::restrict(x, body)
                }
            }
        }
    }

    fn form(&mut self, n: usize, bound: &mut Vec<Name>, logic: Logic) -> Formula {
        if n <= 1 {
            if logic == Logic::F && self.rng.gen_bool(0.5) {
                let mut xs = BTreeSet::new();
                for _ in 0..self.rng.gen_range(0..3) {
                    let a = self.pick_name(bound);
                    xs.insert(if self.rng.gen_bool(0.5) { Polarity::In(a) } else { Polarity::Out(a) });
                }
                return Formula::Ref(xs);
            }
            return Formula::Top;
        }
        // conditionals need a bound name to test
        let choices = match (n >= 3, bound.is_empty()) {
            (false, _) => 3,
            (true, true) => 5,
            (true, false) => 6,
        };
        match self.rng.gen_range(0..choices) {
            0 => {
                let subject = self.pick_name(bound);
                let x = self.binder(bound);
                bound.push(x.clone());
                let body = Box::new(self.form(n - 1, bound, logic));
                bound.pop();
                Formula::DiaInput { subject, binder: x, body }
            }
            1 => {
                let subject = self.pick_name(bound);
                let object = self.pick_name(bound);
                Formula::DiaFreeOut { subject, object, body: Box::new(self.form(n - 1, bound, logic)) }
            }
            2 => {
                let subject = self.pick_name(bound);
                let x = self.binder(bound);
                bound.push(x.clone());
                let body = Box::new(self.form(n - 1, bound, logic));
                bound.pop();
                Formula::DiaBoundOut { subject, binder: x, body }
            }
            3 => {
                let (l, r) = self.split(n);
                let left = self.form(l, bound, logic);
                let right = self.form(r, bound, logic);
                Formula::and(vec![left, right])
            }
            5 => {
                let left = bound.last().expect("non-empty").clone();
                let right = self.channels.choose(&mut self.rng).expect("non-empty").clone();
                let (l, r) = self.split(n);
                let then = Box::new(self.form(l, bound, logic));
                let otherwise = Box::new(self.form(r, bound, logic));
                Formula::IfEq { left, right, then, otherwise }
            }
            _ => {
                let (l, r) = self.split(n);
                let p = self.pick_p();
                let left = self.form(l, bound, logic);
                let right = self.form(r, bound, logic);
                Formula::pdisj(vec![(p.clone(), left), (Rat::from_integer(1.into()) - p, right)])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symbols(p: &Proc) -> usize {
        match p {
            Proc::State(s) => state_symbols(s),
            Proc::Choice { left, right, .. } => 1 + symbols(left) + symbols(right),
        }
    }

    fn state_symbols(s: &State) -> usize {
        match s {
            State::Nil => 1,
            State::Input { body, .. } => 1 + symbols(body),
            State::Output { subject, body, .. } if subject.is_success() => 1 + symbols(body),
            // tau is sugar for a restricted pair of prefixes
            State::Restrict { binder, body } if tau_body(binder, body).is_some() => {
                1 + symbols(tau_body(binder, body).expect("checked"))
            }
            State::Output { body, .. } => 1 + symbols(body),
            State::Match { body, .. } | State::Mismatch { body, .. } | State::Restrict { body, .. } => {
                1 + state_symbols(body)
            }
            State::Sum(l, r) | State::Par(l, r) => 1 + state_symbols(l) + state_symbols(r),
        }
    }

    fn tau_body<'a>(x: &Name, s: &'a State) -> Option<&'a Proc> {
        let State::Par(l, r) = s else { return None };
        match (&**l, &**r) {
            (State::Input { subject: i, body: nil, .. }, State::Output { subject: o, object, body })
                if i == x && o == x && object == x && **nil == Proc::nil() =>
            {
                Some(body)
            }
            _ => None,
        }
    }

    #[test]
    fn generation_is_seeded_and_bounded() {
        let a: Vec<Proc> = (0..50).map({
            let mut g = Gen::new(7, 12);
            move |_| g.process()
        }).collect();
        let b: Vec<Proc> = (0..50).map({
            let mut g = Gen::new(7, 12);
            move |_| g.process()
        }).collect();
        assert_eq!(a, b);
        for p in &a {
            assert!(symbols(p) <= 12, "{p}");
            assert!(p.success_names().is_empty());
            let free: BTreeSet<Name> = p.free_names();
            assert!(free.iter().all(|n| CHANNELS.contains(&n.id())), "{p}");
        }
    }

    #[test]
    fn tests_only_use_w() {
        let mut g = Gen::new(3, 12);
        for _ in 0..50 {
            let t = g.test();
            assert!(t.success_names().iter().all(|n| n.id() == "w"));
        }
    }

    #[test]
    fn may_formulas_have_no_refusals() {
        let mut g = Gen::new(5, 12);
        for _ in 0..50 {
            assert!(!g.formula(Logic::L).has_ref());
        }
    }
}
