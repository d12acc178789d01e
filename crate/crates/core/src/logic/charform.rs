use std::collections::{BTreeSet, HashMap};

use super::{Formula, Logic};
use crate::dist::{dist_subst, Distribution};
use crate::name::{fresh, Name, Polarity};
use crate::semantics::{label_binder, Lts};
use crate::syntax::{Action, State, Subst};

struct Builder {
    lts: Lts,
    logic: Logic,
    memo: HashMap<(State, BTreeSet<Name>), Formula>,
}

impl Builder {
    fn dist(&mut self, d: &Distribution, alphabet: &BTreeSet<Name>) -> Formula {
        let parts = d.iter().map(|(s, w)| (w.clone(), self.state(s, alphabet))).collect();
        Formula::pdisj(parts)
    }

    /// The body of an input modality. The generic continuation treats the
    /// received name as new; where receiving a known name `n` changes the
    /// behaviour (guards, refusals, communications), the formula of that
    /// instance is selected by a conditional on `binder = n`.
    fn input_body(&mut self, target: &Distribution, binder: &Name, alphabet: &BTreeSet<Name>) -> Formula {
        let mut wider = alphabet.clone();
        wider.insert(binder.clone());
        let generic = self.dist(target, &wider);
        let mut cases = Vec::new();
        for n in alphabet.iter().filter(|n| !n.is_success()) {
            let map = Subst::from([(binder.clone(), n.clone())]);
            let inst = self.dist(&dist_subst(target, &map), alphabet);
            if inst.normalised() != generic.substitute(&map).resolve().normalised() {
                cases.push((n.clone(), inst));
            }
        }
        cases.into_iter().rev().fold(generic, |otherwise, (n, then)| Formula::IfEq {
            left: binder.clone(),
            right: n,
            then: Box::new(then),
            otherwise: Box::new(otherwise),
        })
    }

    fn state(&mut self, s: &State, alphabet: &BTreeSet<Name>) -> Formula {
        let key = (s.clone(), alphabet.clone());
        if let Some(f) = self.memo.get(&key) {
            return f.clone();
        }
        let trans = self.lts.transitions(s);
        let stable = !trans.iter().any(|t| t.label == Action::Tau);
        let mut conj = Vec::new();
        // bound names must also be distinct from every alphabet name
        let own = label_binder(s);
        let mut used = alphabet.clone();
        used.extend(s.free_names());
        let b = fresh(&used);
        let rebind = |target: &Distribution| {
            if b == own {
                target.clone()
            } else {
                dist_subst(target, &Subst::from([(own.clone(), b.clone())]))
            }
        };
        for t in trans.iter() {
            conj.push(match &t.label {
                Action::Tau => self.dist(&t.target, alphabet),
                Action::Input { subject, .. } => Formula::DiaInput {
                    subject: subject.clone(),
                    binder: b.clone(),
                    body: Box::new(self.input_body(&rebind(&t.target), &b, alphabet)),
                },
                Action::FreeOut { subject, object } => Formula::DiaFreeOut {
                    subject: subject.clone(),
                    object: object.clone(),
                    body: Box::new(self.dist(&t.target, alphabet)),
                },
                Action::BoundOut { subject, .. } => {
                    let mut wider = alphabet.clone();
                    wider.insert(b.clone());
                    Formula::DiaBoundOut {
                        subject: subject.clone(),
                        binder: b.clone(),
                        body: Box::new(self.dist(&rebind(&t.target), &wider)),
                    }
                }
                // success actions are not observable by the logic
                Action::Success(_) => continue,
            });
        }
        if stable && self.logic == Logic::F {
            let barbs = self.lts.barbs(s);
            let refused = alphabet
                .iter()
                .filter(|n| !n.is_success())
                .flat_map(|n| [Polarity::In(n.clone()), Polarity::Out(n.clone())])
                .filter(|m| !barbs.contains(m))
                .collect();
            conj.push(Formula::Ref(refused));
        }
        let f = Formula::and(conj);
        self.memo.insert(key, f.clone());
        f
    }
}

/// The characteristic formula of a distribution. Refusal sets only mention
/// names of `alphabet`, extended under each binder by the bound name.
/// Input modalities carry conditionals on the received name wherever the
/// continuation depends on which known name arrives.
pub fn char_formula(d: &Distribution, alphabet: &BTreeSet<Name>, logic: Logic) -> Formula {
    let mut b = Builder { lts: Lts::new(), logic, memo: HashMap::new() };
    b.dist(d, alphabet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::interp;
    use crate::logic::parse_formula;
    use crate::rat::rat;
    use crate::syntax::{parse, ParseOptions};

    fn d(text: &str) -> Distribution {
        interp(&parse(text, &ParseOptions::default()).unwrap())
    }

    fn names(xs: &[&str]) -> BTreeSet<Name> {
        xs.iter().map(|s| Name::channel(s)).collect()
    }

    #[test]
    fn nil_and_single_output() {
        assert_eq!(char_formula(&d("0"), &names(&["a"]), Logic::L), Formula::Top);
        assert_eq!(char_formula(&d("a!b.0"), &names(&["a", "b"]), Logic::L), parse_formula("<~a b>T").unwrap());
        assert_eq!(char_formula(&d("0"), &names(&["a"]), Logic::F), parse_formula("ref{a,~a}").unwrap());
    }

    #[test]
    fn choice_becomes_disjunction() {
        let f = char_formula(&d("a(x).0 (+1/2) 0"), &names(&["a"]), Logic::F);
        let Formula::PDisj(parts) = &f else { panic!("{f}") };
        assert_eq!(parts.len(), 2);
        assert!(parts.iter().all(|(p, _)| *p == rat(1, 2)));
        assert!(parts.iter().any(|(_, g)| *g == parse_formula("ref{a,~a}").unwrap()));
        let input = parts.iter().find(|(_, g)| g.has_ref() && *g != parse_formula("ref{a,~a}").unwrap()).unwrap();
        // stable, so the refusal of the output on a is recorded too
        assert!(input.1.to_string().contains("ref{~a}"), "{}", input.1);
    }

    #[test]
    fn unstable_states_inline_tau_derivatives() {
        let f = char_formula(&d("tau.a!a.0"), &names(&["a"]), Logic::L);
        assert_eq!(f, parse_formula("<~a a>T").unwrap());
    }

    #[test]
    fn inputs_distinguish_known_names() {
        // receiving b disables the output
        let f = char_formula(&d("a(x).[x!=b]b!b.0"), &names(&["a", "b"]), Logic::L);
        assert_eq!(f, parse_formula("<a(n0)>(n0=b ? T : <~b b>T)").unwrap());
        // the output subject is the received name, so its refusal depends on it
        let f = char_formula(&d("a(x).x!x.0"), &names(&["a"]), Logic::F);
        assert!(f.to_string().contains("n0=a ?"), "{f}");
        // nothing depends on the received name
        let f = char_formula(&d("a(x).b!b.0"), &names(&["a", "b"]), Logic::L);
        assert_eq!(f, parse_formula("<a(n0)><~b b>T").unwrap());
    }

    #[test]
    fn bound_names_join_the_alphabet() {
        let f = char_formula(&d("a(x).x!x.0"), &names(&["a"]), Logic::F);
        let Formula::And(parts) = &f else { panic!("{f}") };
        let dia = parts.iter().find(|p| matches!(p, Formula::DiaInput { .. })).unwrap();
        let Formula::DiaInput { binder, body, .. } = dia else { unreachable!() };
        assert!(body.free_names().contains(binder));
    }
}
