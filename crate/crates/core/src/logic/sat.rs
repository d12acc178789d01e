//! Clause-by-clause satisfaction over finite generating sets of weak derivatives.
//!
//! For formulas without probabilistic disjunction the set of satisfying
//! distributions is exactly the set of distributions whose support states all
//! satisfy the formula, so checking the vertices of a derivative set is
//! complete. Disjunctions are decided by an LP when their branches have this
//! property, and otherwise by searching vertex splits, reporting `Unknown` when
//! that search fails.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use super::Formula;
use crate::dist::Distribution;
use crate::lp::{Cmp, Lp};
use crate::name::fresh;
use crate::rat::Rat;
use crate::semantics::{DerivativeSet, Lts};
use crate::syntax::{Action, State, Subst};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Sat {
    True,
    False,
    Unknown,
}

impl Sat {
    fn from_bool(b: bool) -> Sat {
        if b {
            Sat::True
        } else {
            Sat::False
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Sat::True => Some(true),
            Sat::False => Some(false),
            Sat::Unknown => None,
        }
    }

    fn and(self, other: Sat) -> Sat {
        match (self, other) {
            (Sat::False, _) | (_, Sat::False) => Sat::False,
            (Sat::True, Sat::True) => Sat::True,
            _ => Sat::Unknown,
        }
    }
}

impl std::fmt::Display for Sat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sat::True => "true",
            Sat::False => "false",
            Sat::Unknown => "unknown",
        })
    }
}

struct Checker {
    lts: Lts,
}

impl Checker {
    /// Some vertex satisfies `phi`. Exact when `phi` has no disjunction.
    fn exists(&mut self, set: &DerivativeSet, phi: &Formula) -> Sat {
        let mut unknown = false;
        for d in set.iter() {
            match self.sat(d, phi) {
                Sat::True => return Sat::True,
                Sat::Unknown => unknown = true,
                Sat::False => {}
            }
        }
        if unknown || phi.has_pdisj() {
            Sat::Unknown
        } else {
            Sat::False
        }
    }

    fn sat(&mut self, d: &Distribution, phi: &Formula) -> Sat {
        match phi {
            Formula::Top => Sat::True,
            Formula::Ref(xs) => {
                let weak = self.lts.weak_tau_vertices(d);
                let found = weak.iter().any(|e| self.lts.dist_refuses(e, xs));
                Sat::from_bool(found)
            }
            Formula::DiaFreeOut { subject, object, body } => {
                let alpha = Action::FreeOut { subject: subject.clone(), object: object.clone() };
                let set = self.lts.weak_alpha(d, &alpha).expect("output action");
                self.exists(&set, body)
            }
            Formula::DiaBoundOut { subject, binder, body } => {
                let mut used = d.free_names();
                used.extend(body.free_names());
                used.insert(subject.clone());
                let w = fresh(&used);
                let alpha = Action::BoundOut { subject: subject.clone(), binder: w.clone() };
                let set = self.lts.weak_alpha(d, &alpha).expect("output action");
                self.exists(&set, &body.substitute(&Subst::from([(binder.clone(), w)])))
            }
            Formula::DiaInput { subject, binder, body } => {
                let mut names = d.free_names();
                names.extend(phi.free_names());
                let extra = fresh(&names);
                names.insert(extra);
                let mut acc = Sat::True;
                for z in names {
                    let set = self.lts.weak_input(d, subject, &z);
                    let inst = body.substitute(&Subst::from([(binder.clone(), z)]));
                    acc = acc.and(self.exists(&set, &inst));
                    if acc == Sat::False {
                        break;
                    }
                }
                acc
            }
            Formula::And(parts) => {
                let mut acc = Sat::True;
                for p in parts {
                    acc = acc.and(self.sat(d, p));
                    if acc == Sat::False {
                        break;
                    }
                }
                acc
            }
            Formula::PDisj(parts) => self.pdisj(d, parts),
            Formula::IfEq { left, right, then, otherwise } => {
                self.sat(d, if left == right { then } else { otherwise })
            }
        }
    }

    fn pdisj(&mut self, d: &Distribution, parts: &[(Rat, Formula)]) -> Sat {
        let weak = self.lts.weak_tau_vertices(d);
        if parts.iter().all(|(_, f)| !f.has_pdisj()) {
            return self.pdisj_by_lp(&weak, parts);
        }
        for v in weak.iter() {
            // every branch on the whole of one derivative
            let mut all = Sat::True;
            for (_, f) in parts {
                all = all.and(self.sat(v, f));
            }
            if all == Sat::True || self.split_by_support(v, parts) {
                return Sat::True;
            }
        }
        Sat::Unknown
    }

    /// Tries to cut the support of `v` into blocks of exactly the branch weights.
    fn split_by_support(&mut self, v: &Distribution, parts: &[(Rat, Formula)]) -> bool {
        let states: Vec<(&State, &Rat)> = v.iter().collect();
        if states.len() > 8 || parts.len().pow(states.len() as u32) > 4096 {
            return false;
        }
        let mut assign = vec![0usize; states.len()];
        loop {
            let mut mass = vec![Rat::zero(); parts.len()];
            for (k, &i) in assign.iter().enumerate() {
                mass[i] += states[k].1;
            }
            if mass.iter().zip(parts).all(|(m, (p, _))| m == p) {
                let ok = (0..parts.len()).all(|i| {
                    let block: Vec<(State, Rat)> = states
                        .iter()
                        .zip(&assign)
                        .filter(|(_, &j)| j == i)
                        .map(|((s, w), _)| ((*s).clone(), (*w) / &parts[i].0))
                        .collect();
                    self.sat(&Distribution::from_weighted(block), &parts[i].1) == Sat::True
                });
                if ok {
                    return true;
                }
            }
            // next assignment
            let mut k = 0;
            loop {
                if k == assign.len() {
                    return false;
                }
                assign[k] += 1;
                if assign[k] < parts.len() {
                    break;
                }
                assign[k] = 0;
                k += 1;
            }
        }
    }

    /// With disjunction-free branches a distribution satisfies a branch iff all
    /// its support states do, so the question is whether some point of the hull
    /// can be spread over the branches with exact weights, using only states that
    /// satisfy the branch they are sent to.
    fn pdisj_by_lp(&mut self, weak: &DerivativeSet, parts: &[(Rat, Formula)]) -> Sat {
        let states: BTreeSet<State> = weak.iter().flat_map(|v| v.support().cloned()).collect();
        let states: Vec<State> = states.into_iter().collect();
        let mut sure = BTreeMap::new();
        let mut maybe = BTreeMap::new();
        for (si, s) in states.iter().enumerate() {
            for (pi, (_, f)) in parts.iter().enumerate() {
                match self.sat(&Distribution::point(s), f) {
                    Sat::True => {
                        sure.insert((si, pi), ());
                        maybe.insert((si, pi), ());
                    }
                    Sat::Unknown => {
                        maybe.insert((si, pi), ());
                    }
                    Sat::False => {}
                }
            }
        }
        let feasible = |allowed: &BTreeMap<(usize, usize), ()>| {
            let cells: Vec<(usize, usize)> = allowed.keys().cloned().collect();
            let nv = weak.len();
            let mut lp = Lp::new(nv + cells.len());
            let row = |lam: Vec<Rat>, cell: Vec<Rat>| lam.into_iter().chain(cell).collect::<Vec<Rat>>();
            lp.add(row(vec![Rat::one(); nv], vec![Rat::zero(); cells.len()]), Cmp::Eq, Rat::one());
            for (si, s) in states.iter().enumerate() {
                let lam = weak.iter().map(|v| -v.weight(s)).collect();
                let cell = cells.iter().map(|&(a, _)| if a == si { Rat::one() } else { Rat::zero() }).collect();
                lp.add(row(lam, cell), Cmp::Eq, Rat::zero());
            }
            for (pi, (p, _)) in parts.iter().enumerate() {
                let cell = cells.iter().map(|&(_, b)| if b == pi { Rat::one() } else { Rat::zero() }).collect();
                lp.add(row(vec![Rat::zero(); nv], cell), Cmp::Eq, p.clone());
            }
            lp.feasible_point().is_some()
        };
        if feasible(&sure) {
            Sat::True
        } else if sure.len() == maybe.len() || !feasible(&maybe) {
            Sat::False
        } else {
            Sat::Unknown
        }
    }
}

/// Three-valued satisfaction following the clauses of the satisfaction relation.
/// Input modalities quantify over the free names of `d` and `phi` plus one fresh
/// name, which suffices because satisfaction is closed under renaming.
pub fn sat_structural(d: &Distribution, phi: &Formula) -> Sat {
    Checker { lts: Lts::new() }.sat(d, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::interp;
    use crate::logic::parse_formula;
    use crate::syntax::{parse, ParseOptions};

    fn d(text: &str) -> Distribution {
        interp(&parse(text, &ParseOptions::default()).unwrap())
    }

    fn check(p: &str, f: &str) -> Sat {
        sat_structural(&d(p), &parse_formula(f).unwrap())
    }

    #[test]
    fn basic_clauses() {
        assert_eq!(check("a!b.0", "T"), Sat::True);
        assert_eq!(check("a!b.0", "<~a b>T"), Sat::True);
        assert_eq!(check("a!a.0", "<~a b>T"), Sat::False);
        assert_eq!(check("0", "ref{a,~a}"), Sat::True);
        assert_eq!(check("a(x).0", "ref{a}"), Sat::False);
        assert_eq!(check("tau.0 + a(x).0", "ref{a}"), Sat::True);
        assert_eq!(check("new x.a!x.0", "<~a(y)>ref{y}"), Sat::True);
    }

    #[test]
    fn inputs_quantify_over_every_name() {
        assert_eq!(check("a(x).x!x.0", "<a(x)><~x x>T"), Sat::True);
        assert_eq!(check("a(x).[x=b]x!x.0", "<a(x)><~x x>T"), Sat::False);
        assert_eq!(check("a(x).[x=b]x!x.0 + a(x).[x!=b]x!x.0", "<a(x)><~x x>T"), Sat::True);
    }

    #[test]
    fn disjunctions() {
        let p = "a!a.0 (+1/2) a!b.0";
        assert_eq!(check(p, "<~a a>T (+1/2) <~a b>T"), Sat::True);
        assert_eq!(check(p, "<~a a>T (+1/3) <~a b>T"), Sat::False);
        // the internal choice can be resolved to match any weights
        let q = "tau.a!a.0 + tau.a!b.0";
        assert_eq!(check(q, "<~a a>T (+1/3) <~a b>T"), Sat::True);
    }
}
