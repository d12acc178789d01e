//! The two-sorted term algebra: state-based processes and probabilistic processes.
//!
//! Prefix continuations are full [`Proc`] terms, so probabilistic choice can only
//! occur under a prefix inside a [`State`]. Success prefixes `w.P` are encoded as
//! outputs `w!w.P` whose subject is a success name.

mod canon;
mod file;
mod parse;
mod print;

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::name::Name;
use crate::rat::Rat;

pub use canon::{
    alpha_eq, barendregt_proc, canonical, canonical_proc, is_barendregt, rename_binders_apart, substitute,
    substitute_proc,
};
pub use file::{parse_term_file, TermFile};
pub use parse::{parse, parse_state, ParseOptions, SuccessNames};

/// A finite name-to-name substitution.
pub type Subst = std::collections::BTreeMap<Name, Name>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum State {
    Nil,
    Input { subject: Name, binder: Name, body: Arc<Proc> },
    Output { subject: Name, object: Name, body: Arc<Proc> },
    Match { left: Name, right: Name, body: Arc<State> },
    Mismatch { left: Name, right: Name, body: Arc<State> },
    Sum(Arc<State>, Arc<State>),
    Par(Arc<State>, Arc<State>),
    Restrict { binder: Name, body: Arc<State> },
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Proc {
    State(State),
    /// `left (+p) right`, with `p` in `(0, 1]`.
    Choice { p: Rat, left: Arc<Proc>, right: Arc<Proc> },
}

/// Transition labels.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Action {
    Tau,
    /// `a(x)`
    Input { subject: Name, binder: Name },
    /// `~a b`
    FreeOut { subject: Name, object: Name },
    /// `~a(x)`
    BoundOut { subject: Name, binder: Name },
    /// Firing of a success name.
    Success(Name),
}

impl State {
    pub fn input(subject: Name, binder: Name, body: Proc) -> State {
        State::Input { subject, binder, body: Arc::new(body) }
    }

    pub fn output(subject: Name, object: Name, body: Proc) -> State {
        State::Output { subject, object, body: Arc::new(body) }
    }

    /// The success prefix `w.P`.
    pub fn success(w: Name, body: Proc) -> State {
        State::Output { subject: w.clone(), object: w, body: Arc::new(body) }
    }

    pub fn matching(left: Name, right: Name, body: State) -> State {
        State::Match { left, right, body: Arc::new(body) }
    }

    pub fn mismatch(left: Name, right: Name, body: State) -> State {
        State::Mismatch { left, right, body: Arc::new(body) }
    }

    pub fn sum(left: State, right: State) -> State {
        State::Sum(Arc::new(left), Arc::new(right))
    }

    pub fn par(left: State, right: State) -> State {
        State::Par(Arc::new(left), Arc::new(right))
    }

    pub fn restrict(binder: Name, body: State) -> State {
        State::Restrict { binder, body: Arc::new(body) }
    }

    /// Right-nested sum of the given summands; `0` when empty.
    pub fn sum_of(items: impl IntoIterator<Item = State>) -> State {
        let mut items: Vec<State> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return State::Nil;
        };
        while let Some(prev) = items.pop() {
            acc = State::sum(prev, acc);
        }
        acc
    }

    /// The silent prefix `tau.P`, encoded as `new x.(x(y).0 | x!x.P)`.
    pub fn tau(body: Proc) -> State {
        let mut used = body.free_names();
        let x = crate::name::fresh(&used);
        used.insert(x.clone());
        let y = crate::name::fresh(&used);
        State::restrict(
            x.clone(),
            State::par(
                State::input(x.clone(), y, Proc::State(State::Nil)),
                State::output(x.clone(), x, body),
            ),
        )
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        self.free_names_where(|_| true)
    }

    /// The free names satisfying `keep`.
    pub fn free_names_where(&self, keep: fn(&Name) -> bool) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out, keep);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>, keep: fn(&Name) -> bool) {
        let mut note = |n: &Name, bound: &Vec<Name>| {
            if keep(n) && !bound.contains(n) {
                out.insert(n.clone());
            }
        };
        match self {
            State::Nil => {}
            State::Input { subject, binder, body } => {
                note(subject, bound);
                bound.push(binder.clone());
                body.collect_free(bound, out, keep);
                bound.pop();
            }
            State::Output { subject, object, body } => {
                note(subject, bound);
                note(object, bound);
                body.collect_free(bound, out, keep);
            }
            State::Match { left, right, body } | State::Mismatch { left, right, body } => {
                note(left, bound);
                note(right, bound);
                body.collect_free(bound, out, keep);
            }
            State::Sum(l, r) | State::Par(l, r) => {
                l.collect_free(bound, out, keep);
                r.collect_free(bound, out, keep);
            }
            State::Restrict { binder, body } => {
                bound.push(binder.clone());
                body.collect_free(bound, out, keep);
                bound.pop();
            }
        }
    }

    /// Calls `f` on every name occurrence, binders included.
    pub fn visit_names(&self, f: &mut impl FnMut(&Name)) {
        match self {
            State::Nil => {}
            State::Input { subject: a, binder: b, body } | State::Output { subject: a, object: b, body } => {
                f(a);
                f(b);
                body.visit_names(f);
            }
            State::Match { left, right, body } | State::Mismatch { left, right, body } => {
                f(left);
                f(right);
                body.visit_names(f);
            }
            State::Sum(l, r) | State::Par(l, r) => {
                l.visit_names(f);
                r.visit_names(f);
            }
            State::Restrict { binder, body } => {
                f(binder);
                body.visit_names(f);
            }
        }
    }

    /// Number of constructors and name occurrences.
    pub fn size(&self) -> usize {
        match self {
            State::Nil => 1,
            State::Input { body, .. } | State::Output { body, .. } => 3 + body.size(),
            State::Match { body, .. } | State::Mismatch { body, .. } => 3 + body.size(),
            State::Sum(l, r) | State::Par(l, r) => 1 + l.size() + r.size(),
            State::Restrict { body, .. } => 2 + body.size(),
        }
    }

    /// All binder names, in left-to-right order.
    pub fn binders(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.collect_binders(&mut out);
        out
    }

    fn collect_binders(&self, out: &mut Vec<Name>) {
        match self {
            State::Nil => {}
            State::Input { binder, body, .. } => {
                out.push(binder.clone());
                body.collect_binders(out);
            }
            State::Output { body, .. } => body.collect_binders(out),
            State::Match { body, .. } | State::Mismatch { body, .. } => body.collect_binders(out),
            State::Sum(l, r) | State::Par(l, r) => {
                l.collect_binders(out);
                r.collect_binders(out);
            }
            State::Restrict { binder, body } => {
                out.push(binder.clone());
                body.collect_binders(out);
            }
        }
    }

    /// Success names occurring anywhere in the term.
    pub fn success_names(&self) -> BTreeSet<Name> {
        self.free_names().into_iter().filter(Name::is_success).collect()
    }
}

impl Proc {
    pub fn state(s: State) -> Proc {
        Proc::State(s)
    }

    pub fn choice(p: Rat, left: Proc, right: Proc) -> Proc {
        Proc::Choice { p, left: Arc::new(left), right: Arc::new(right) }
    }

    pub fn nil() -> Proc {
        Proc::State(State::Nil)
    }

    /// Generalised choice over `(weight, branch)` pairs whose weights sum to one.
    /// Zero-weight branches are skipped; returns `None` for an empty list.
    pub fn choice_of(items: Vec<(Rat, Proc)>) -> Option<Proc> {
        use num_traits::Zero;
        let mut items: Vec<(Rat, Proc)> = items.into_iter().filter(|(p, _)| !p.is_zero()).collect();
        let (mut acc_w, mut acc) = items.pop()?;
        while let Some((w, prev)) = items.pop() {
            let total = w.clone() + acc_w.clone();
            acc = Proc::choice(w / total.clone(), prev, acc);
            acc_w = total;
        }
        Some(acc)
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        self.free_names_where(|_| true)
    }

    pub fn free_names_where(&self, keep: fn(&Name) -> bool) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out, keep);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>, keep: fn(&Name) -> bool) {
        match self {
            Proc::State(s) => s.collect_free(bound, out, keep),
            Proc::Choice { left, right, .. } => {
                left.collect_free(bound, out, keep);
                right.collect_free(bound, out, keep);
            }
        }
    }

    pub fn visit_names(&self, f: &mut impl FnMut(&Name)) {
        match self {
            Proc::State(s) => s.visit_names(f),
            Proc::Choice { left, right, .. } => {
                left.visit_names(f);
                right.visit_names(f);
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Proc::State(s) => s.size(),
            Proc::Choice { left, right, .. } => 1 + left.size() + right.size(),
        }
    }

    pub fn binders(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.collect_binders(&mut out);
        out
    }

    fn collect_binders(&self, out: &mut Vec<Name>) {
        match self {
            Proc::State(s) => s.collect_binders(out),
            Proc::Choice { left, right, .. } => {
                left.collect_binders(out);
                right.collect_binders(out);
            }
        }
    }

    pub fn success_names(&self) -> BTreeSet<Name> {
        self.free_names().into_iter().filter(Name::is_success).collect()
    }

    pub fn as_state(&self) -> Option<&State> {
        match self {
            Proc::State(s) => Some(s),
            Proc::Choice { .. } => None,
        }
    }
}

impl From<State> for Proc {
    fn from(s: State) -> Proc {
        Proc::State(s)
    }
}

impl Action {
    pub fn free_names(&self) -> BTreeSet<Name> {
        match self {
            Action::Tau => BTreeSet::new(),
            Action::Input { subject, .. } | Action::BoundOut { subject, .. } => {
                BTreeSet::from([subject.clone()])
            }
            Action::FreeOut { subject, object } => BTreeSet::from([subject.clone(), object.clone()]),
            Action::Success(w) => BTreeSet::from([w.clone()]),
        }
    }

    pub fn bound_name(&self) -> Option<&Name> {
        match self {
            Action::Input { binder, .. } | Action::BoundOut { binder, .. } => Some(binder),
            _ => None,
        }
    }

    pub fn subject(&self) -> Option<&Name> {
        match self {
            Action::Tau => None,
            Action::Input { subject, .. }
            | Action::FreeOut { subject, .. }
            | Action::BoundOut { subject, .. } => Some(subject),
            Action::Success(w) => Some(w),
        }
    }

    pub fn is_input(&self) -> bool {
        matches!(self, Action::Input { .. })
    }

    /// The same action with its bound name (if any) replaced.
    pub fn with_binder(&self, name: Name) -> Action {
        match self {
            Action::Input { subject, .. } => Action::Input { subject: subject.clone(), binder: name },
            Action::BoundOut { subject, .. } => Action::BoundOut { subject: subject.clone(), binder: name },
            other => other.clone(),
        }
    }

    /// Equality up to the choice of bound name.
    pub fn same_shape(&self, other: &Action) -> bool {
        match (self, other) {
            (Action::Input { subject: a, .. }, Action::Input { subject: b, .. }) => a == b,
            (Action::BoundOut { subject: a, .. }, Action::BoundOut { subject: b, .. }) => a == b,
            _ => self == other,
        }
    }

    /// Applies a substitution to both free and bound names of the label.
    pub fn rename(&self, map: &Subst) -> Action {
        let r = |n: &Name| map.get(n).cloned().unwrap_or_else(|| n.clone());
        match self {
            Action::Tau => Action::Tau,
            Action::Input { subject, binder } => Action::Input { subject: r(subject), binder: r(binder) },
            Action::FreeOut { subject, object } => Action::FreeOut { subject: r(subject), object: r(object) },
            Action::BoundOut { subject, binder } => Action::BoundOut { subject: r(subject), binder: r(binder) },
            Action::Success(w) => Action::Success(r(w)),
        }
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Action::Tau => write!(f, "tau"),
            Action::Input { subject, binder } => write!(f, "{subject}({binder})"),
            Action::FreeOut { subject, object } => write!(f, "~{subject} {object}"),
            Action::BoundOut { subject, binder } => write!(f, "~{subject}({binder})"),
            Action::Success(w) => write!(f, "{w}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> Name {
        Name::channel(s)
    }

    fn p(text: &str) -> State {
        parse_state(text, &ParseOptions::default()).unwrap()
    }

    #[test]
    fn free_names_of_terms_and_actions() {
        assert_eq!(p("a(x).x!b.0").free_names(), BTreeSet::from([n("a"), n("b")]));
        assert_eq!(p("new x.x!a.0").free_names(), BTreeSet::from([n("a")]));
        let act = Action::Input { subject: n("a"), binder: n("x") };
        assert_eq!(act.free_names(), BTreeSet::from([n("a")]));
    }

    #[test]
    fn choice_of_rebuilds_weights() {
        use crate::rat::rat;
        let t = Proc::choice_of(vec![
            (rat(1, 4), Proc::nil()),
            (rat(1, 4), Proc::nil()),
            (rat(1, 2), Proc::nil()),
        ])
        .unwrap();
        match t {
            Proc::Choice { p, right, .. } => {
                assert_eq!(p, rat(1, 4));
                match &*right {
                    Proc::Choice { p, .. } => assert_eq!(*p, rat(1, 3)),
                    _ => panic!("expected nested choice"),
                }
            }
            _ => panic!("expected choice"),
        }
    }
}
