//! Modal formulas with probabilistic disjunction, characteristic formulas and
//! characteristic tests.
//!
//! The full logic has refusal formulas `ref{...}`; the sublogic without them is
//! the one that characterises may testing.

mod charform;
mod chartest;
mod parse;
mod sat;

use std::collections::BTreeSet;
use std::fmt;

use crate::name::{fresh, Name, Polarity};
use crate::rat::{fmt_rat, Rat};
use crate::syntax::Subst;

pub use charform::char_formula;
pub use chartest::{char_test, char_test_width, sat_via_test, sat_via_test_in, CharTest};
pub use parse::parse_formula;
pub use sat::{sat_structural, Sat};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Logic {
    /// Without refusals.
    L,
    /// With refusals.
    F,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    Top,
    Ref(BTreeSet<Polarity>),
    DiaInput { subject: Name, binder: Name, body: Box<Formula> },
    DiaFreeOut { subject: Name, object: Name, body: Box<Formula> },
    DiaBoundOut { subject: Name, binder: Name, body: Box<Formula> },
    And(Vec<Formula>),
    /// Weights are positive and sum to one.
    PDisj(Vec<(Rat, Formula)>),
    /// `then` when the two names are equal, `otherwise` when they differ.
    IfEq { left: Name, right: Name, then: Box<Formula>, otherwise: Box<Formula> },
}

impl Formula {
    /// Conjunction with the empty and singleton cases collapsed.
    pub fn and(mut parts: Vec<Formula>) -> Formula {
        parts.sort();
        parts.dedup();
        match parts.len() {
            0 => Formula::Top,
            1 => parts.pop().expect("one element"),
            _ => Formula::And(parts),
        }
    }

    /// Probabilistic disjunction with the singleton case collapsed.
    pub fn pdisj(mut parts: Vec<(Rat, Formula)>) -> Formula {
        if parts.len() == 1 {
            parts.pop().expect("one element").1
        } else {
            Formula::PDisj(parts)
        }
    }

    pub fn logic(&self) -> Logic {
        if self.has_ref() {
            Logic::F
        } else {
            Logic::L
        }
    }

    pub fn has_ref(&self) -> bool {
        match self {
            Formula::Top => false,
            Formula::Ref(_) => true,
            Formula::DiaInput { body, .. } | Formula::DiaFreeOut { body, .. } | Formula::DiaBoundOut { body, .. } => {
                body.has_ref()
            }
            Formula::And(ps) => ps.iter().any(Formula::has_ref),
            Formula::PDisj(ps) => ps.iter().any(|(_, f)| f.has_ref()),
            Formula::IfEq { then, otherwise, .. } => then.has_ref() || otherwise.has_ref(),
        }
    }

    pub fn has_pdisj(&self) -> bool {
        match self {
            Formula::Top | Formula::Ref(_) => false,
            Formula::DiaInput { body, .. } | Formula::DiaFreeOut { body, .. } | Formula::DiaBoundOut { body, .. } => {
                body.has_pdisj()
            }
            Formula::And(ps) => ps.iter().any(Formula::has_pdisj),
            Formula::PDisj(_) => true,
            Formula::IfEq { then, otherwise, .. } => then.has_pdisj() || otherwise.has_pdisj(),
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        let mut add = |n: &Name, bound: &Vec<Name>| {
            if !bound.contains(n) {
                out.insert(n.clone());
            }
        };
        match self {
            Formula::Top => {}
            Formula::Ref(xs) => xs.iter().for_each(|p| add(p.name(), bound)),
            Formula::DiaFreeOut { subject, object, body } => {
                add(subject, bound);
                add(object, bound);
                body.collect_free(bound, out);
            }
            Formula::DiaInput { subject, binder, body } | Formula::DiaBoundOut { subject, binder, body } => {
                add(subject, bound);
                bound.push(binder.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Formula::And(ps) => ps.iter().for_each(|f| f.collect_free(bound, out)),
            Formula::PDisj(ps) => ps.iter().for_each(|(_, f)| f.collect_free(bound, out)),
            Formula::IfEq { left, right, then, otherwise } => {
                add(left, bound);
                add(right, bound);
                then.collect_free(bound, out);
                otherwise.collect_free(bound, out);
            }
        }
    }

    fn all_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Formula::Top => {}
            Formula::Ref(xs) => out.extend(xs.iter().map(|p| p.name().clone())),
            Formula::DiaFreeOut { subject, object, body } => {
                out.insert(subject.clone());
                out.insert(object.clone());
                body.all_names(out);
            }
            Formula::DiaInput { subject, binder, body } | Formula::DiaBoundOut { subject, binder, body } => {
                out.insert(subject.clone());
                out.insert(binder.clone());
                body.all_names(out);
            }
            Formula::And(ps) => ps.iter().for_each(|f| f.all_names(out)),
            Formula::PDisj(ps) => ps.iter().for_each(|(_, f)| f.all_names(out)),
            Formula::IfEq { left, right, then, otherwise } => {
                out.insert(left.clone());
                out.insert(right.clone());
                then.all_names(out);
                otherwise.all_names(out);
            }
        }
    }

    /// Capture-avoiding simultaneous substitution of free names.
    pub fn substitute(&self, map: &Subst) -> Formula {
        if map.iter().all(|(k, v)| k == v) {
            return self.clone();
        }
        let mut used = BTreeSet::new();
        self.all_names(&mut used);
        used.extend(map.keys().cloned());
        used.extend(map.values().cloned());
        self.subst_with(map, &mut used)
    }

    fn subst_with(&self, map: &Subst, used: &mut BTreeSet<Name>) -> Formula {
        let r = |n: &Name| map.get(n).cloned().unwrap_or_else(|| n.clone());
        let enter = |binder: &Name, used: &mut BTreeSet<Name>| {
            let mut inner = map.clone();
            inner.remove(binder);
            if inner.values().any(|v| v == binder) {
                let renamed = fresh(&*used);
                used.insert(renamed.clone());
                inner.insert(binder.clone(), renamed.clone());
                (renamed, inner)
            } else {
                (binder.clone(), inner)
            }
        };
        match self {
            Formula::Top => Formula::Top,
            Formula::Ref(xs) => Formula::Ref(
                xs.iter()
                    .map(|p| match p {
                        Polarity::In(n) => Polarity::In(r(n)),
                        Polarity::Out(n) => Polarity::Out(r(n)),
                    })
                    .collect(),
            ),
            Formula::DiaFreeOut { subject, object, body } => Formula::DiaFreeOut {
                subject: r(subject),
                object: r(object),
                body: Box::new(body.subst_with(map, used)),
            },
            Formula::DiaInput { subject, binder, body } => {
                let (binder, inner) = enter(binder, used);
                Formula::DiaInput { subject: r(subject), binder, body: Box::new(body.subst_with(&inner, used)) }
            }
            Formula::DiaBoundOut { subject, binder, body } => {
                let (binder, inner) = enter(binder, used);
                Formula::DiaBoundOut { subject: r(subject), binder, body: Box::new(body.subst_with(&inner, used)) }
            }
            Formula::And(ps) => Formula::And(ps.iter().map(|f| f.subst_with(map, used)).collect()),
            Formula::PDisj(ps) => Formula::PDisj(ps.iter().map(|(p, f)| (p.clone(), f.subst_with(map, used))).collect()),
            Formula::IfEq { left, right, then, otherwise } => Formula::IfEq {
                left: r(left),
                right: r(right),
                then: Box::new(then.subst_with(map, used)),
                otherwise: Box::new(otherwise.subst_with(map, used)),
            },
        }
    }

    /// Number of operators, for reporting.
    pub fn size(&self) -> usize {
        match self {
            Formula::Top | Formula::Ref(_) => 1,
            Formula::DiaInput { body, .. } | Formula::DiaFreeOut { body, .. } | Formula::DiaBoundOut { body, .. } => {
                1 + body.size()
            }
            Formula::And(ps) => 1 + ps.iter().map(Formula::size).sum::<usize>(),
            Formula::PDisj(ps) => 1 + ps.iter().map(|(_, f)| f.size()).sum::<usize>(),
            Formula::IfEq { then, otherwise, .. } => 1 + then.size() + otherwise.size(),
        }
    }

    /// Picks the branch of every conditional whose names are both free and
    /// therefore already decided.
    pub fn resolve(&self) -> Formula {
        self.resolve_under(&mut Vec::new())
    }

    fn resolve_under(&self, bound: &mut Vec<Name>) -> Formula {
        let under = |binder: &Name, body: &Formula, bound: &mut Vec<Name>| {
            bound.push(binder.clone());
            let b = body.resolve_under(bound);
            bound.pop();
            Box::new(b)
        };
        match self {
            Formula::Top | Formula::Ref(_) => self.clone(),
            Formula::DiaInput { subject, binder, body } => {
                Formula::DiaInput { subject: subject.clone(), binder: binder.clone(), body: under(binder, body, bound) }
            }
            Formula::DiaBoundOut { subject, binder, body } => {
                Formula::DiaBoundOut { subject: subject.clone(), binder: binder.clone(), body: under(binder, body, bound) }
            }
            Formula::DiaFreeOut { subject, object, body } => Formula::DiaFreeOut {
                subject: subject.clone(),
                object: object.clone(),
                body: Box::new(body.resolve_under(bound)),
            },
            Formula::And(ps) => Formula::and(ps.iter().map(|f| f.resolve_under(bound)).collect()),
            Formula::PDisj(ps) => Formula::PDisj(ps.iter().map(|(p, f)| (p.clone(), f.resolve_under(bound))).collect()),
            Formula::IfEq { left, right, then, otherwise } => {
                if bound.contains(left) || bound.contains(right) {
                    Formula::IfEq {
                        left: left.clone(),
                        right: right.clone(),
                        then: Box::new(then.resolve_under(bound)),
                        otherwise: Box::new(otherwise.resolve_under(bound)),
                    }
                } else if left == right {
                    then.resolve_under(bound)
                } else {
                    otherwise.resolve_under(bound)
                }
            }
        }
    }

    /// Renames binders by depth and sorts the operands of conjunctions and
    /// disjunctions, so that alpha-equivalent formulas differing only in
    /// operand order compare equal.
    pub fn normalised(&self) -> Formula {
        self.normalised_at(0)
    }

    fn normalised_at(&self, depth: usize) -> Formula {
        let under = |binder: &Name, body: &Formula| {
            let c = Name::channel(&format!("_{depth}"));
            let body = body.substitute(&Subst::from([(binder.clone(), c.clone())]));
            (c, Box::new(body.normalised_at(depth + 1)))
        };
        match self {
            Formula::Top | Formula::Ref(_) => self.clone(),
            Formula::DiaInput { subject, binder, body } => {
                let (binder, body) = under(binder, body);
                Formula::DiaInput { subject: subject.clone(), binder, body }
            }
            Formula::DiaFreeOut { subject, object, body } => Formula::DiaFreeOut {
                subject: subject.clone(),
                object: object.clone(),
                body: Box::new(body.normalised_at(depth)),
            },
            Formula::DiaBoundOut { subject, binder, body } => {
                let (binder, body) = under(binder, body);
                Formula::DiaBoundOut { subject: subject.clone(), binder, body }
            }
            Formula::And(ps) => Formula::and(ps.iter().map(|f| f.normalised_at(depth)).collect()),
            Formula::PDisj(ps) => {
                let mut parts: Vec<(Rat, Formula)> = ps.iter().map(|(p, f)| (p.clone(), f.normalised_at(depth))).collect();
                parts.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
                Formula::PDisj(parts)
            }
            Formula::IfEq { left, right, then, otherwise } => Formula::IfEq {
                left: left.clone(),
                right: right.clone(),
                then: Box::new(then.normalised_at(depth)),
                otherwise: Box::new(otherwise.normalised_at(depth)),
            },
        }
    }
}

// Precedence: (+p) 0, & 1, diamonds 2.
fn write_formula(f: &mut fmt::Formatter<'_>, phi: &Formula, level: u8) -> fmt::Result {
    match phi {
        Formula::Top => f.write_str("T"),
        Formula::Ref(xs) => {
            f.write_str("ref{")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str("}")
        }
        Formula::DiaInput { subject, binder, body } => {
            write!(f, "<{subject}({binder})>")?;
            write_formula(f, body, 2)
        }
        Formula::DiaFreeOut { subject, object, body } => {
            write!(f, "<~{subject} {object}>")?;
            write_formula(f, body, 2)
        }
        Formula::DiaBoundOut { subject, binder, body } => {
            write!(f, "<~{subject}({binder})>")?;
            write_formula(f, body, 2)
        }
        Formula::And(ps) => {
            if level > 1 {
                f.write_str("(")?;
            }
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    f.write_str(" & ")?;
                }
                write_formula(f, p, 2)?;
            }
            if level > 1 {
                f.write_str(")")?;
            }
            Ok(())
        }
        Formula::PDisj(ps) => {
            if level > 0 {
                f.write_str("(")?;
            }
            // a chain p1 (+q1) p2 (+q2) ... with conditional weights
            let mut rest = Rat::from_integer(1.into());
            for (i, (p, g)) in ps.iter().enumerate() {
                write_formula(f, g, 1)?;
                if i + 1 < ps.len() {
                    write!(f, " (+{}) ", fmt_rat(&(p / &rest)))?;
                    rest -= p;
                }
            }
            if level > 0 {
                f.write_str(")")?;
            }
            Ok(())
        }
        Formula::IfEq { left, right, then, otherwise } => {
            write!(f, "({left}={right} ? ")?;
            write_formula(f, then, 0)?;
            f.write_str(" : ")?;
            write_formula(f, otherwise, 0)?;
            f.write_str(")")
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, 0)
    }
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Logic::L => "L",
            Logic::F => "F",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> Name {
        Name::channel(s)
    }

    #[test]
    fn substitution_avoids_capture() {
        let phi = parse_formula("<a(x)><~x y>T").unwrap();
        let out = phi.substitute(&Subst::from([(n("y"), n("x"))]));
        match &out {
            Formula::DiaInput { binder, body, .. } => {
                assert_ne!(*binder, n("x"));
                assert_eq!(
                    **body,
                    Formula::DiaFreeOut { subject: binder.clone(), object: n("x"), body: Box::new(Formula::Top) }
                );
            }
            other => panic!("{other}"),
        }
        assert_eq!(out.free_names(), BTreeSet::from([n("a"), n("x")]));
    }

    #[test]
    fn normalisation() {
        assert_eq!(Formula::and(vec![]), Formula::Top);
        assert_eq!(Formula::and(vec![Formula::Top]), Formula::Top);
        assert_eq!(Formula::pdisj(vec![(Rat::from_integer(1.into()), Formula::Top)]), Formula::Top);
    }

    #[test]
    fn normal_forms_identify_alpha_variants() {
        let f = super::parse_formula("<a(x)>(ref{x} & <~x(y)>T)").unwrap();
        let g = super::parse_formula("<a(z)>(<~z(x)>T & ref{z})").unwrap();
        assert_ne!(f, g);
        assert_eq!(f.normalised(), g.normalised());
        let h = super::parse_formula("<a(z)>(<~a(x)>T & ref{z})").unwrap();
        assert_ne!(f.normalised(), h.normalised());
    }

    #[test]
    fn logic_membership() {
        assert_eq!(parse_formula("<~a b>T").unwrap().logic(), Logic::L);
        assert_eq!(parse_formula("<~a b>ref{a}").unwrap().logic(), Logic::F);
    }
}
