//! Operational semantics: strong transitions, lifted transitions, weak derivative
//! sets and refusals.
//!
//! Every bound name in a transition label is `fresh(fn(s) ∪ bn(s))` for the source
//! `s`, so all bound-output and input labels of one state share a single name.
//! Targets are canonical distributions.

use std::collections::BTreeSet;

use rustc_hash::{FxHashMap, FxHashSet};
use std::sync::Arc;

use num_traits::One;

use crate::dist::{combine, dist_subst, flatten, Distribution};
use crate::error::{Error, Result};
use crate::name::{fresh, Name, Polarity};
use crate::rat::Rat;
use crate::syntax::{canonical, substitute, substitute_proc, Action, State, Subst};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Transition {
    pub label: Action,
    pub target: Distribution,
}

/// A finite generating set for a convex set of distributions.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct DerivativeSet {
    pub vertices: Vec<Distribution>,
}

impl DerivativeSet {
    fn from_vec(mut vertices: Vec<Distribution>) -> Self {
        vertices.sort();
        vertices.dedup();
        DerivativeSet { vertices }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn contains(&self, d: &Distribution) -> bool {
        self.vertices.binary_search(d).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Distribution> {
        self.vertices.iter()
    }
}

type Raw = Vec<(State, Rat)>;

/// Strong transitions of `s` with bound label names set to `b`.
fn raw_step(s: &State, b: &Name) -> Vec<(Action, Raw)> {
    match s {
        State::Nil => Vec::new(),
        State::Input { subject, binder, body } => {
            let body = substitute_proc(body, &Subst::from([(binder.clone(), b.clone())]));
            let mut target = Vec::new();
            flatten(&body, Rat::one(), &mut target);
            vec![(Action::Input { subject: subject.clone(), binder: b.clone() }, target)]
        }
        State::Output { subject, object, body } => {
            let mut target = Vec::new();
            flatten(body, Rat::one(), &mut target);
            let label = if subject.is_success() {
                Action::Success(subject.clone())
            } else {
                Action::FreeOut { subject: subject.clone(), object: object.clone() }
            };
            vec![(label, target)]
        }
        State::Match { left, right, body } => {
            if left == right {
                raw_step(body, b)
            } else {
                Vec::new()
            }
        }
        State::Mismatch { left, right, body } => {
            if left != right {
                raw_step(body, b)
            } else {
                Vec::new()
            }
        }
        State::Sum(l, r) => {
            let mut out = raw_step(l, b);
            out.extend(raw_step(r, b));
            out
        }
        State::Par(l, r) => {
            let ls = raw_step(l, b);
            let rs = raw_step(r, b);
            let mut out = Vec::new();
            for (a, d) in &ls {
                out.push((a.clone(), par_right(d, r)));
            }
            for (a, d) in &rs {
                out.push((a.clone(), par_left(l, d)));
            }
            communicate(&ls, &rs, b, &mut out, false);
            communicate(&rs, &ls, b, &mut out, true);
            out
        }
        State::Restrict { binder, body } => {
            let mut out = Vec::new();
            for (a, d) in raw_step(body, b) {
                match &a {
                    Action::FreeOut { subject, object } if object == binder && subject != binder => {
                        let map = Subst::from([(binder.clone(), b.clone())]);
                        let d = d.into_iter().map(|(t, w)| (substitute(&t, &map), w)).collect();
                        out.push((Action::BoundOut { subject: subject.clone(), binder: b.clone() }, d));
                    }
                    _ => {
                        let mentions = a.subject() == Some(binder)
                            || a.bound_name() == Some(binder)
                            || matches!(&a, Action::FreeOut { object, .. } if object == binder);
                        if !mentions {
                            let d = d.into_iter().map(|(t, w)| (State::restrict(binder.clone(), t), w)).collect();
                            out.push((a, d));
                        }
                    }
                }
            }
            out
        }
    }
}

fn par_right(d: &Raw, t: &State) -> Raw {
    d.iter().map(|(s, w)| (State::par(s.clone(), t.clone()), w.clone())).collect()
}

fn par_left(s: &State, d: &Raw) -> Raw {
    d.iter().map(|(t, w)| (State::par(s.clone(), t.clone()), w.clone())).collect()
}

fn product(l: &Raw, r: &Raw) -> Raw {
    l.iter()
        .flat_map(|(s, p)| r.iter().map(move |(t, q)| (State::par(s.clone(), t.clone()), p.clone() * q)))
        .collect()
}

/// Com and Close between an input on one side and an output on the other.
/// `flipped` means the inputs come from the right component.
fn communicate(inputs: &[(Action, Raw)], outputs: &[(Action, Raw)], b: &Name, out: &mut Vec<(Action, Raw)>, flipped: bool) {
    for (ia, id) in inputs {
        let Action::Input { subject: a, binder: x } = ia else { continue };
        for (oa, od) in outputs {
            let target = match oa {
                Action::FreeOut { subject, object } if subject == a => {
                    let map = Subst::from([(x.clone(), object.clone())]);
                    let received: Raw = id.iter().map(|(t, w)| (substitute(t, &map), w.clone())).collect();
                    if flipped {
                        product(od, &received)
                    } else {
                        product(&received, od)
                    }
                }
                Action::BoundOut { subject, binder } if subject == a => {
                    debug_assert_eq!(binder, x);
                    let _ = binder;
                    let joined = if flipped { product(od, id) } else { product(id, od) };
                    joined.into_iter().map(|(t, w)| (State::restrict(b.clone(), t), w)).collect()
                }
                _ => continue,
            };
            out.push((Action::Tau, target));
        }
    }
}

/// The bound name used in labels of `s`.
pub fn label_binder(s: &State) -> Name {
    // fn(s) ∪ bn(s) is every name occurring in s, and only candidates matter
    let mut used = BTreeSet::new();
    s.visit_names(&mut |n| {
        if n.in_fresh_sequence() {
            used.insert(n.clone());
        }
    });
    fresh(&used)
}

/// All strong transitions of `s`.
pub fn step(s: &State) -> Vec<Transition> {
    let s = canonical(s);
    let b = label_binder(&s);
    let mut out: Vec<Transition> = raw_step(&s, &b)
        .into_iter()
        .map(|(label, target)| Transition { label, target: Distribution::from_weighted(target) })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Per-invocation memo table for transitions and weak derivatives.
#[derive(Default)]
pub struct Lts {
    steps: FxHashMap<State, Arc<Vec<Transition>>>,
    weak: FxHashMap<State, Arc<Vec<Distribution>>>,
}

impl Lts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Transitions of a canonical state.
    pub fn transitions(&mut self, s: &State) -> Arc<Vec<Transition>> {
        if let Some(t) = self.steps.get(s) {
            return t.clone();
        }
        let t = Arc::new(step(s));
        self.steps.insert(s.clone(), t.clone());
        t
    }

    pub fn has_tau(&mut self, s: &State) -> bool {
        self.transitions(s).iter().any(|t| t.label == Action::Tau)
    }

    /// Names and co-names `s` can offer.
    pub fn barbs(&mut self, s: &State) -> BTreeSet<Polarity> {
        self.transitions(s)
            .iter()
            .filter_map(|t| match &t.label {
                Action::Input { subject, .. } => Some(Polarity::In(subject.clone())),
                Action::FreeOut { subject, .. } | Action::BoundOut { subject, .. } => {
                    Some(Polarity::Out(subject.clone()))
                }
                _ => None,
            })
            .collect()
    }

    /// `s` is stable and offers nothing in `refusals`.
    pub fn refuses(&mut self, s: &State, refusals: &BTreeSet<Polarity>) -> bool {
        !self.has_tau(s) && self.barbs(s).is_disjoint(refusals)
    }

    pub fn dist_refuses(&mut self, d: &Distribution, refusals: &BTreeSet<Polarity>) -> bool {
        d.support().all(|s| self.refuses(s, refusals))
    }

    /// Targets `s` reaches by `alpha`, with bound names renamed to the binder of `alpha`.
    fn matching_targets(&mut self, s: &State, alpha: &Action) -> Vec<Distribution> {
        let own = label_binder(s);
        self.transitions(s)
            .iter()
            .filter(|t| t.label.same_shape(alpha))
            .map(|t| match alpha.bound_name() {
                Some(w) if *w != own => dist_subst(&t.target, &Subst::from([(own.clone(), w.clone())])),
                _ => t.target.clone(),
            })
            .collect()
    }

    /// Every `Θ` with `Δ --alpha--> Θ` in the lifted sense, one choice per support state.
    /// A bound name in `alpha` must not occur free in `d`.
    pub fn lifted_step(&mut self, d: &Distribution, alpha: &Action) -> DerivativeSet {
        let mut choices = Vec::new();
        for (s, w) in d.iter() {
            let targets = self.matching_targets(s, alpha);
            if targets.is_empty() {
                return DerivativeSet::default();
            }
            choices.push((w.clone(), targets));
        }
        DerivativeSet::from_vec(minkowski(&choices))
    }

    fn weak_state(&mut self, s: &State) -> Arc<Vec<Distribution>> {
        if let Some(v) = self.weak.get(s) {
            return v.clone();
        }
        let mut out = vec![Distribution::point(s)];
        let trans = self.transitions(s);
        for t in trans.iter().filter(|t| t.label == Action::Tau) {
            out.extend(self.weak_tau_vertices(&t.target).vertices);
        }
        out.sort();
        out.dedup();
        let out = Arc::new(out);
        self.weak.insert(s.clone(), out.clone());
        out
    }

    /// Generating set of `{Θ | Δ ==τ̂==> Θ}`.
    pub fn weak_tau_vertices(&mut self, d: &Distribution) -> DerivativeSet {
        let choices: Vec<(Rat, Vec<Distribution>)> =
            d.iter().map(|(s, w)| (w.clone(), self.weak_state(s).as_ref().clone())).collect();
        DerivativeSet::from_vec(minkowski(&choices))
    }

    /// Generating set of `{Θ | Δ ==α̂==> Θ}` for tau (the reflexive weak move) and
    /// output actions.
    pub fn weak_alpha(&mut self, d: &Distribution, alpha: &Action) -> Result<DerivativeSet> {
        match alpha {
            Action::Input { .. } => return Err(Error::InputAction(alpha.to_string())),
            Action::Tau => return Ok(self.weak_tau_vertices(d)),
            _ => {}
        }
        let mut out = Vec::new();
        for pre in self.weak_tau_vertices(d).vertices {
            for mid in self.lifted_step(&pre, alpha).vertices {
                out.extend(self.weak_tau_vertices(&mid).vertices);
            }
        }
        Ok(DerivativeSet::from_vec(out))
    }

    /// Generating set of `{Θ' | Δ ==τ̂==> Δ1 --a(x)--> Δ2, Δ2[z/x] ==τ̂==> Θ'}`.
    pub fn weak_input(&mut self, d: &Distribution, subject: &Name, z: &Name) -> DerivativeSet {
        self.input_move(d, subject, z, true)
    }

    /// Like `weak_input` but without silent steps after the input.
    pub fn delay_input(&mut self, d: &Distribution, subject: &Name, z: &Name) -> DerivativeSet {
        self.input_move(d, subject, z, false)
    }

    fn input_move(&mut self, d: &Distribution, subject: &Name, z: &Name, trailing: bool) -> DerivativeSet {
        let mut used = d.free_names();
        used.insert(z.clone());
        let x = fresh(&used);
        let alpha = Action::Input { subject: subject.clone(), binder: x.clone() };
        let mut out = Vec::new();
        for pre in self.weak_tau_vertices(d).vertices {
            for mid in self.lifted_step(&pre, &alpha).vertices {
                let mid = dist_subst(&mid, &Subst::from([(x.clone(), z.clone())]));
                if trailing {
                    out.extend(self.weak_tau_vertices(&mid).vertices);
                } else {
                    out.push(mid);
                }
            }
        }
        DerivativeSet::from_vec(out)
    }
}

/// All weighted sums picking one distribution per entry.
pub(crate) fn minkowski(choices: &[(Rat, Vec<Distribution>)]) -> Vec<Distribution> {
    if let [(_, only)] = choices {
        return only.clone();
    }
    let mut acc: Vec<Vec<(Rat, &Distribution)>> = vec![Vec::new()];
    for (w, options) in choices {
        let mut next = Vec::with_capacity(acc.len() * options.len());
        for partial in &acc {
            for o in options {
                let mut p = partial.clone();
                p.push((w.clone(), o));
                next.push(p);
            }
        }
        acc = next;
    }
    let mut out: Vec<Distribution> = acc.into_iter().map(combine).collect();
    out.sort();
    out.dedup();
    out
}

/// Weak tau derivatives without a shared memo table.
pub fn weak_tau_vertices(d: &Distribution) -> DerivativeSet {
    Lts::new().weak_tau_vertices(d)
}

pub fn weak_alpha(d: &Distribution, alpha: &Action) -> Result<DerivativeSet> {
    Lts::new().weak_alpha(d, alpha)
}

pub fn lifted_step(d: &Distribution, alpha: &Action) -> DerivativeSet {
    Lts::new().lifted_step(d, alpha)
}

pub fn refuses(s: &State, refusals: &BTreeSet<Polarity>) -> bool {
    Lts::new().refuses(&canonical(s), refusals)
}

/// The transition graph reachable from a distribution, in breadth-first order.
pub fn explore(start: &Distribution) -> (Vec<State>, Vec<(State, Transition)>) {
    let mut lts = Lts::new();
    let mut seen: FxHashSet<State> = FxHashSet::default();
    let mut queue: std::collections::VecDeque<State> = start.support().cloned().collect();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for s in start.support() {
        seen.insert(s.clone());
    }
    while let Some(s) = queue.pop_front() {
        nodes.push(s.clone());
        for t in lts.transitions(&s).iter() {
            for u in t.target.support() {
                if seen.insert(u.clone()) {
                    queue.push_back(u.clone());
                }
            }
            edges.push((s.clone(), t.clone()));
        }
    }
    (nodes, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::interp;
    use crate::rat::rat;
    use crate::syntax::{parse, parse_state, ParseOptions};

    fn st(text: &str) -> State {
        parse_state(text, &ParseOptions::default()).unwrap()
    }

    fn pt(text: &str) -> Distribution {
        Distribution::point(&st(text))
    }

    fn n(s: &str) -> Name {
        Name::channel(s)
    }

    fn labels(s: &str) -> Vec<String> {
        step(&st(s)).iter().map(|t| t.label.to_string()).collect()
    }

    #[test]
    fn prefixes() {
        let t = step(&st("a(x).0"));
        assert_eq!(t.len(), 1);
        assert!(matches!(&t[0].label, Action::Input { subject, .. } if *subject == n("a")));
        assert_eq!(t[0].target, pt("0"));
        assert!(step(&State::Nil).is_empty());
    }

    #[test]
    fn guards() {
        assert!(step(&st("[a!=a]b!a.0")).is_empty());
        let t = step(&st("[a=a]b!a.0"));
        assert_eq!(labels("[a=a]b!a.0"), vec!["~b a"]);
        assert_eq!(t[0].target, pt("0"));
    }

    #[test]
    fn communication_substitutes_object() {
        let t = step(&st("a(x).x!b.0 | a!c.0"));
        let expected = Transition { label: Action::Tau, target: pt("c!b.0 | 0") };
        assert!(t.contains(&expected), "{t:?}");
        // both components can also move alone
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn extrusion_uses_a_fresh_name() {
        let t = step(&st("new z.x!z.0"));
        assert_eq!(t.len(), 1);
        match &t[0].label {
            Action::BoundOut { subject, binder } => {
                assert_eq!(*subject, n("x"));
                assert_ne!(*binder, n("x"));
            }
            other => panic!("unexpected {other}"),
        }
        assert_eq!(t[0].target, pt("0"));
    }

    #[test]
    fn restriction_blocks_its_channel() {
        assert!(step(&st("new a.a!b.0")).is_empty());
        assert!(step(&st("new a.a(x).0")).is_empty());
    }

    #[test]
    fn close_keeps_the_name_private() {
        let t = step(&st("a(x).x!x.0 | new z.a!z.z(y).0"));
        let tau: Vec<_> = t.iter().filter(|t| t.label == Action::Tau).collect();
        assert_eq!(tau.len(), 1);
        assert_eq!(tau[0].target, pt("new z.(z!z.0 | z(y).0)"));
    }

    #[test]
    fn success_actions_do_not_communicate() {
        assert_eq!(labels("w.0 | w.0"), vec!["w", "w"]);
    }

    #[test]
    fn lifted_moves() {
        let d = Distribution::from_weighted([(st("a!x.b!b.0"), rat(1, 2)), (st("a!x.c!c.0"), rat(1, 2))]);
        let alpha = Action::FreeOut { subject: n("a"), object: n("x") };
        let out = lifted_step(&d, &alpha);
        let expected = Distribution::from_weighted([(st("b!b.0"), rat(1, 2)), (st("c!c.0"), rat(1, 2))]);
        assert_eq!(out.vertices, vec![expected]);

        let d = Distribution::from_weighted([(st("a!x.b!b.0"), rat(1, 2)), (st("b!x.c!c.0"), rat(1, 2))]);
        assert!(lifted_step(&d, &alpha).is_empty());

        let s = st("a!x.0 + a!x.b!b.0");
        let single = lifted_step(&Distribution::point(&s), &alpha);
        let direct: Vec<Distribution> = step(&s).into_iter().filter(|t| t.label == alpha).map(|t| t.target).collect();
        assert_eq!(single.vertices, direct);
    }

    #[test]
    fn lifted_inputs_share_a_binder() {
        let d = Distribution::from_weighted([(st("a(x).x!x.0"), rat(1, 2)), (st("a(y).b!y.0"), rat(1, 2))]);
        let alpha = Action::Input { subject: n("a"), binder: n("z") };
        let out = lifted_step(&d, &alpha);
        let expected = Distribution::from_weighted([(st("z!z.0"), rat(1, 2)), (st("b!z.0"), rat(1, 2))]);
        assert_eq!(out.vertices, vec![expected]);
    }

    #[test]
    fn weak_tau() {
        assert_eq!(weak_tau_vertices(&pt("0")).vertices, vec![pt("0")]);
        let d = interp(&parse("tau.c!c.0", &ParseOptions::default()).unwrap());
        let v = weak_tau_vertices(&d);
        assert_eq!(v.len(), 2);
        assert!(v.contains(&d));
        assert!(v.contains(&pt("new x.(0 | c!c.0)")));
    }

    #[test]
    fn weak_tau_mixes_per_state() {
        let d = Distribution::from_weighted([(st("tau.a!a.0"), rat(1, 2)), (st("b!b.0"), rat(1, 2))]);
        assert_eq!(weak_tau_vertices(&d).len(), 2);
    }

    #[test]
    fn weak_outputs() {
        let alpha = Action::FreeOut { subject: n("a"), object: n("b") };
        assert_eq!(weak_alpha(&pt("a!b.0"), &alpha).unwrap().vertices, vec![pt("0")]);
        let v = weak_alpha(&pt("tau.a!b.0"), &alpha).unwrap();
        assert_eq!(v.vertices, vec![pt("new x.(0 | 0)")]);
        assert!(weak_alpha(&pt("c!b.0"), &alpha).unwrap().is_empty());
        let input = Action::Input { subject: n("a"), binder: n("x") };
        assert!(weak_alpha(&pt("a(x).0"), &input).is_err());
    }

    #[test]
    fn refusals() {
        let both = BTreeSet::from([Polarity::In(n("a")), Polarity::Out(n("a"))]);
        assert!(refuses(&State::Nil, &both));
        assert!(refuses(&st("a(x).0"), &BTreeSet::from([Polarity::Out(n("a"))])));
        assert!(!refuses(&st("a(x).0"), &BTreeSet::from([Polarity::In(n("a"))])));
        assert!(!refuses(&st("tau.0"), &BTreeSet::new()));
    }

    #[test]
    fn graph_exploration_reaches_everything() {
        let (nodes, edges) = explore(&pt("a(x).0 | a!b.0"));
        assert_eq!(nodes.len(), 4);
        assert_eq!(edges.len(), 5);
    }
}
