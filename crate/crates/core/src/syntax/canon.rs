//! Capture-avoiding substitution and canonical binder numbering.

use std::collections::BTreeSet;

use super::{Proc, State, Subst};
use crate::name::{fresh, Name};

struct Renamer {
    used: BTreeSet<Name>,
}

impl Renamer {
    fn for_state(t: &State, map: &Subst) -> Self {
        let mut used = t.free_names();
        used.extend(t.binders());
        used.extend(map.keys().cloned());
        used.extend(map.values().cloned());
        Renamer { used }
    }

    fn for_proc(t: &Proc, map: &Subst) -> Self {
        let mut used = t.free_names();
        used.extend(t.binders());
        used.extend(map.keys().cloned());
        used.extend(map.values().cloned());
        Renamer { used }
    }

    fn fresh(&mut self) -> Name {
        let n = fresh(&self.used);
        self.used.insert(n.clone());
        n
    }

    /// Enters the scope of `binder`, returning the (possibly renamed) binder and
    /// the substitution to use underneath it.
    fn enter(&mut self, binder: &Name, map: &Subst) -> (Name, Subst) {
        let mut inner = map.clone();
        inner.remove(binder);
        if inner.values().any(|v| v == binder) {
            let renamed = self.fresh();
            inner.insert(binder.clone(), renamed.clone());
            (renamed, inner)
        } else {
            (binder.clone(), inner)
        }
    }

    fn state(&mut self, t: &State, map: &Subst) -> State {
        let r = |n: &Name| map.get(n).cloned().unwrap_or_else(|| n.clone());
        match t {
            State::Nil => State::Nil,
            State::Input { subject, binder, body } => {
                let subject = r(subject);
                let (binder, inner) = self.enter(binder, map);
                State::input(subject, binder, self.proc(body, &inner))
            }
            State::Output { subject, object, body } => {
                State::output(r(subject), r(object), self.proc(body, map))
            }
            State::Match { left, right, body } => {
                State::matching(r(left), r(right), self.state(body, map))
            }
            State::Mismatch { left, right, body } => {
                State::mismatch(r(left), r(right), self.state(body, map))
            }
            State::Sum(l, rr) => State::sum(self.state(l, map), self.state(rr, map)),
            State::Par(l, rr) => State::par(self.state(l, map), self.state(rr, map)),
            State::Restrict { binder, body } => {
                let (binder, inner) = self.enter(binder, map);
                State::restrict(binder, self.state(body, &inner))
            }
        }
    }

    fn proc(&mut self, t: &Proc, map: &Subst) -> Proc {
        match t {
            Proc::State(s) => Proc::State(self.state(s, map)),
            Proc::Choice { p, left, right } => {
                Proc::choice(p.clone(), self.proc(left, map), self.proc(right, map))
            }
        }
    }
}

/// Simultaneous capture-avoiding substitution of free names.
pub fn substitute(t: &State, map: &Subst) -> State {
    let map: Subst = map.iter().filter(|(k, v)| k != v).map(|(k, v)| (k.clone(), v.clone())).collect();
    if map.is_empty() {
        return t.clone();
    }
    Renamer::for_state(t, &map).state(t, &map)
}

pub fn substitute_proc(t: &Proc, map: &Subst) -> Proc {
    let map: Subst = map.iter().filter(|(k, v)| k != v).map(|(k, v)| (k.clone(), v.clone())).collect();
    if map.is_empty() {
        return t.clone();
    }
    Renamer::for_proc(t, &map).proc(t, &map)
}

/// Numbers binders left to right as `_0, _1, ...`, skipping any reserved name
/// that already occurs free.
struct Numbering {
    next: usize,
    avoid: BTreeSet<Name>,
}

impl Numbering {
    fn next_binder(&mut self) -> Name {
        loop {
            let n = Name::binder(self.next);
            self.next += 1;
            if !self.avoid.contains(&n) {
                return n;
            }
        }
    }

    fn state(&mut self, t: &State, map: &Subst) -> State {
        let r = |n: &Name| map.get(n).cloned().unwrap_or_else(|| n.clone());
        match t {
            State::Nil => State::Nil,
            State::Input { subject, binder, body } => {
                let subject = r(subject);
                let b = self.next_binder();
                let mut inner = map.clone();
                inner.insert(binder.clone(), b.clone());
                State::input(subject, b, self.proc(body, &inner))
            }
            State::Output { subject, object, body } => {
                State::output(r(subject), r(object), self.proc(body, map))
            }
            State::Match { left, right, body } => {
                State::matching(r(left), r(right), self.state(body, map))
            }
            State::Mismatch { left, right, body } => {
                State::mismatch(r(left), r(right), self.state(body, map))
            }
            State::Sum(l, rr) => {
                let l = self.state(l, map);
                State::sum(l, self.state(rr, map))
            }
            State::Par(l, rr) => {
                let l = self.state(l, map);
                State::par(l, self.state(rr, map))
            }
            State::Restrict { binder, body } => {
                let b = self.next_binder();
                let mut inner = map.clone();
                inner.insert(binder.clone(), b.clone());
                State::restrict(b, self.state(body, &inner))
            }
        }
    }

    fn proc(&mut self, t: &Proc, map: &Subst) -> Proc {
        match t {
            Proc::State(s) => Proc::State(self.state(s, map)),
            Proc::Choice { p, left, right } => {
                let l = self.proc(left, map);
                Proc::choice(p.clone(), l, self.proc(right, map))
            }
        }
    }
}

/// Canonical representative of the alpha-equivalence class of `t`.
pub fn canonical(t: &State) -> State {
    let avoid = t.free_names_where(Name::is_reserved);
    Numbering { next: 0, avoid }.state(t, &Subst::new())
}

pub fn canonical_proc(t: &Proc) -> Proc {
    let avoid = t.free_names_where(Name::is_reserved);
    Numbering { next: 0, avoid }.proc(t, &Subst::new())
}

pub fn alpha_eq(s: &State, t: &State) -> bool {
    canonical(s) == canonical(t)
}

/// Renames every binder of `t` to a name outside `avoid`, keeping binders pairwise distinct.
pub fn rename_binders_apart(t: &State, avoid: &BTreeSet<Name>) -> State {
    let mut r = Renamer { used: avoid.clone() };
    r.used.extend(t.free_names());
    r.used.extend(t.binders());
    fn go(r: &mut Renamer, t: &State, map: &Subst) -> State {
        let m = |n: &Name| map.get(n).cloned().unwrap_or_else(|| n.clone());
        match t {
            State::Nil => State::Nil,
            State::Input { subject, binder, body } => {
                let b = r.fresh();
                let mut inner = map.clone();
                inner.insert(binder.clone(), b.clone());
                State::input(m(subject), b, go_proc(r, body, &inner))
            }
            State::Output { subject, object, body } => State::output(m(subject), m(object), go_proc(r, body, map)),
            State::Match { left, right, body } => State::matching(m(left), m(right), go(r, body, map)),
            State::Mismatch { left, right, body } => State::mismatch(m(left), m(right), go(r, body, map)),
            State::Sum(a, b) => {
                let a = go(r, a, map);
                State::sum(a, go(r, b, map))
            }
            State::Par(a, b) => {
                let a = go(r, a, map);
                State::par(a, go(r, b, map))
            }
            State::Restrict { binder, body } => {
                let b = r.fresh();
                let mut inner = map.clone();
                inner.insert(binder.clone(), b.clone());
                State::restrict(b, go(r, body, &inner))
            }
        }
    }
    fn go_proc(r: &mut Renamer, t: &Proc, map: &Subst) -> Proc {
        match t {
            Proc::State(s) => Proc::State(go(r, s, map)),
            Proc::Choice { p, left, right } => {
                let l = go_proc(r, left, map);
                Proc::choice(p.clone(), l, go_proc(r, right, map))
            }
        }
    }
    go(&mut r, t, &Subst::new())
}

/// Renames binders that repeat an earlier binder or clash with a free name, so that
/// all binders are pairwise distinct and distinct from the free names.
pub fn barendregt_proc(t: &Proc) -> Proc {
    struct Pass {
        seen: BTreeSet<Name>,
        all: BTreeSet<Name>,
    }
    impl Pass {
        fn bind(&mut self, binder: &Name, map: &Subst) -> (Name, Subst) {
            let mut inner = map.clone();
            let b = if self.seen.contains(binder) {
                let f = fresh(&self.all);
                inner.insert(binder.clone(), f.clone());
                f
            } else {
                inner.remove(binder);
                binder.clone()
            };
            self.seen.insert(b.clone());
            self.all.insert(b.clone());
            (b, inner)
        }

        fn state(&mut self, t: &State, map: &Subst) -> State {
            let r = |n: &Name| map.get(n).cloned().unwrap_or_else(|| n.clone());
            match t {
                State::Nil => State::Nil,
                State::Input { subject, binder, body } => {
                    let subject = r(subject);
                    let (b, inner) = self.bind(binder, map);
                    State::input(subject, b, self.proc(body, &inner))
                }
                State::Output { subject, object, body } => {
                    State::output(r(subject), r(object), self.proc(body, map))
                }
                State::Match { left, right, body } => State::matching(r(left), r(right), self.state(body, map)),
                State::Mismatch { left, right, body } => {
                    State::mismatch(r(left), r(right), self.state(body, map))
                }
                State::Sum(a, b) => {
                    let a = self.state(a, map);
                    State::sum(a, self.state(b, map))
                }
                State::Par(a, b) => {
                    let a = self.state(a, map);
                    State::par(a, self.state(b, map))
                }
                State::Restrict { binder, body } => {
                    let (b, inner) = self.bind(binder, map);
                    State::restrict(b, self.state(body, &inner))
                }
            }
        }

        fn proc(&mut self, t: &Proc, map: &Subst) -> Proc {
            match t {
                Proc::State(s) => Proc::State(self.state(s, map)),
                Proc::Choice { p, left, right } => {
                    let l = self.proc(left, map);
                    Proc::choice(p.clone(), l, self.proc(right, map))
                }
            }
        }
    }
    let seen = t.free_names();
    let mut all = seen.clone();
    all.extend(t.binders());
    Pass { seen, all }.proc(t, &Subst::new())
}

/// True when binders are pairwise distinct and disjoint from the free names.
pub fn is_barendregt(t: &Proc) -> bool {
    let free = t.free_names();
    let binders = t.binders();
    let distinct: BTreeSet<&Name> = binders.iter().collect();
    distinct.len() == binders.len() && binders.iter().all(|b| !free.contains(b))
}

#[cfg(test)]
mod tests {
    use super::super::{parse_state, ParseOptions};
    use super::*;

    fn n(s: &str) -> Name {
        Name::channel(s)
    }

    fn p(text: &str) -> State {
        parse_state(text, &ParseOptions::default()).unwrap()
    }

    fn sub(pairs: &[(&str, &str)]) -> Subst {
        pairs.iter().map(|(k, v)| (n(k), n(v))).collect()
    }

    #[test]
    fn substitutes_free_occurrences() {
        let t = State::output(n("a"), n("x"), State::Nil.into());
        assert_eq!(substitute(&t, &sub(&[("x", "y")])), State::output(n("a"), n("y"), State::Nil.into()));
    }

    #[test]
    fn avoids_capture_under_restriction() {
        // (new y. x!y.0)[y/x] renames the bound y.
        let t = State::restrict(n("y"), State::output(n("x"), n("y"), State::Nil.into()));
        let out = substitute(&t, &sub(&[("x", "y")]));
        match &out {
            State::Restrict { binder, body } => {
                assert_ne!(binder, &n("y"));
                assert_eq!(**body, State::output(n("y"), binder.clone(), State::Nil.into()));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(out.free_names(), BTreeSet::from([n("y")]));
    }

    #[test]
    fn bound_names_are_untouched() {
        let t = State::input(n("a"), n("x"), State::output(n("x"), n("b"), State::Nil.into()).into());
        assert_eq!(substitute(&t, &sub(&[("x", "c")])), t);
    }

    #[test]
    fn alpha_equivalence() {
        assert!(alpha_eq(&p("a(x).x!b.0"), &p("a(y).y!b.0")));
        assert!(!alpha_eq(&p("a(x).x!b.0"), &p("a(x).b!x.0")));
        assert!(alpha_eq(&p("new x.x!a.0"), &p("new z.z!a.0")));
    }

    #[test]
    fn canonical_skips_free_reserved_names() {
        let t = State::restrict(n("q"), State::output(n("q"), n("_0"), State::Nil.into()));
        let c = canonical(&t);
        assert_eq!(c.free_names(), BTreeSet::from([n("_0")]));
        assert_eq!(c.binders(), vec![n("_1")]);
    }
}
