//! Invariants of the syntax, semantics, testing and logic layers over seeded
//! random terms.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use proptest::prelude::*;

use pipcalc::dist::{dist_subst, interp, Distribution};
use pipcalc::gen::Gen;
use pipcalc::logic::{char_test, parse_formula, sat_structural, Formula, Logic};
use pipcalc::name::{fresh, Name};
use pipcalc::rat::Rat;
use pipcalc::semantics::{step, weak_tau_vertices};
use pipcalc::syntax::{
    alpha_eq, canonical, is_barendregt, parse, substitute_proc, Action, ParseOptions, Proc, State, Subst,
};
use pipcalc::testing::apply_vector;

fn process(seed: u64, size: usize) -> Proc {
    Gen::new(seed, size).process()
}

fn formula(seed: u64, logic: Logic) -> Formula {
    Gen::new(seed, 8).formula(logic)
}

fn ch(id: &str) -> Name {
    Name::channel(id)
}

/// A map on the default channels; `injective` picks a permutation.
fn channel_map(k: usize, injective: bool) -> Subst {
    let cs = [ch("a"), ch("b"), ch("c")];
    if injective {
        let perms = [[0, 1, 2], [1, 0, 2], [2, 1, 0], [0, 2, 1], [1, 2, 0], [2, 0, 1]];
        let p = perms[k % 6];
        cs.iter().zip(p).map(|(c, i)| (c.clone(), cs[i].clone())).collect()
    } else {
        cs.iter().enumerate().map(|(i, c)| (c.clone(), cs[(k / 3usize.pow(i as u32)) % 3].clone())).collect()
    }
}

/// `rho` after `sigma` as one substitution.
fn compose(sigma: &Subst, rho: &Subst) -> Subst {
    let mut out: Subst = rho.clone();
    for (k, v) in sigma {
        out.insert(k.clone(), rho.get(v).cloned().unwrap_or_else(|| v.clone()));
    }
    out
}

fn proc_alpha_eq(p: &Proc, q: &Proc) -> bool {
    interp(p) == interp(q)
        && match (p, q) {
            (Proc::State(s), Proc::State(t)) => alpha_eq(s, t),
            _ => true,
        }
}

/// Expands nested choices by hand, merging alpha-equivalent states.
fn expand(p: &Proc, w: Rat, out: &mut BTreeMap<State, Rat>) {
    match p {
        Proc::State(s) => *out.entry(canonical(s)).or_insert_with(Rat::zero) += w,
        Proc::Choice { p: q, left, right } => {
            expand(left, &w * q, out);
            expand(right, &w * (Rat::one() - q), out);
        }
    }
}

fn total(d: &Distribution) -> Rat {
    d.iter().map(|(_, w)| w.clone()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printing_round_trips(seed in any::<u64>()) {
        let p = process(seed, 12);
        let q = parse(&p.to_string(), &ParseOptions::default()).unwrap();
        prop_assert!(proc_alpha_eq(&p, &q), "{} reparsed as {}", p, q);
    }

    #[test]
    fn tests_round_trip(seed in any::<u64>()) {
        let t = Gen::new(seed, 12).test();
        let q = parse(&t.to_string(), &ParseOptions::default()).unwrap();
        prop_assert!(proc_alpha_eq(&t, &q), "{} reparsed as {}", t, q);
    }

    #[test]
    fn formulas_round_trip(seed in any::<u64>(), refusals in any::<bool>()) {
        let phi = formula(seed, if refusals { Logic::F } else { Logic::L });
        prop_assert_eq!(parse_formula(&phi.to_string()).unwrap(), phi);
    }

    #[test]
    fn substitution_composes(seed in any::<u64>(), k in 0usize..27, j in 0usize..27) {
        let p = process(seed, 12);
        let (sigma, rho) = (channel_map(k, false), channel_map(j, false));
        let twice = substitute_proc(&substitute_proc(&p, &sigma), &rho);
        let once = substitute_proc(&p, &compose(&sigma, &rho));
        prop_assert!(proc_alpha_eq(&twice, &once));
    }

    #[test]
    fn fresh_names_are_fresh(ids in proptest::collection::btree_set("[a-z]{1,2}[0-9]?", 0..12)) {
        let names: BTreeSet<Name> = ids.iter().map(|s| ch(s)).collect();
        prop_assert!(!names.contains(&fresh(&names)));
    }

    #[test]
    fn parse_and_substitute_keep_binders_apart(seed in any::<u64>(), k in 0usize..27) {
        let p = parse(&process(seed, 12).to_string(), &ParseOptions::default()).unwrap();
        prop_assert!(is_barendregt(&p), "{}", p);
        let q = substitute_proc(&p, &channel_map(k, false));
        prop_assert!(is_barendregt(&q), "{}", q);
    }

    #[test]
    fn interpretation_is_a_distribution(seed in any::<u64>()) {
        let p = process(seed, 12);
        let d = interp(&p);
        prop_assert_eq!(total(&d), Rat::one());
        prop_assert!(d.iter().all(|(_, w)| *w > Rat::zero()));
        let mut by_hand = BTreeMap::new();
        expand(&p, Rat::one(), &mut by_hand);
        by_hand.retain(|_, w| !w.is_zero());
        let from_interp: BTreeMap<State, Rat> = d.iter().map(|(s, w)| (s.clone(), w.clone())).collect();
        prop_assert_eq!(from_interp, by_hand);
    }

    #[test]
    fn substitution_keeps_mass(seed in any::<u64>(), k in 0usize..27) {
        let d = interp(&process(seed, 12));
        prop_assert_eq!(total(&dist_subst(&d, &channel_map(k, false))), Rat::one());
    }

    #[test]
    fn transitions_commute_with_renaming(seed in any::<u64>(), k in 0usize..6) {
        let sigma = channel_map(k, true);
        for s in interp(&process(seed, 12)).support() {
            let renamed = canonical(&pipcalc::syntax::substitute(s, &sigma));
            let mut image: Vec<(Action, Distribution)> =
                step(s).into_iter().map(|t| (t.label.rename(&sigma), dist_subst(&t.target, &sigma))).collect();
            let mut direct: Vec<(Action, Distribution)> = step(&renamed).into_iter().map(|t| (t.label, t.target)).collect();
            image.sort();
            direct.sort();
            prop_assert_eq!(image, direct, "{}", s);
        }
    }

    #[test]
    fn transitions_shrink_terms_and_bind_fresh_names(seed in any::<u64>()) {
        let mut todo: Vec<State> = interp(&process(seed, 12)).support().cloned().collect();
        let mut seen = BTreeSet::new();
        while let Some(s) = todo.pop() {
            if !seen.insert(s.clone()) {
                continue;
            }
            let free = s.free_names();
            for t in step(&s) {
                if let Some(b) = t.label.bound_name() {
                    prop_assert!(!free.contains(b), "{} binds {} in {}", s, b, t.label);
                }
                for u in t.target.support() {
                    prop_assert!(u.size() < s.size(), "{} --{}--> {}", s, t.label, u);
                    todo.push(u.clone());
                }
            }
        }
    }

    #[test]
    fn silent_derivatives_include_the_start(seed in any::<u64>()) {
        let d = interp(&process(seed, 12));
        let w = weak_tau_vertices(&d);
        prop_assert!(w.contains(&d));
        prop_assert!(w.iter().all(|v| total(v) == Rat::one()));
    }

    #[test]
    fn satisfaction_survives_renaming(seed in any::<u64>(), k in 0usize..6, refusals in any::<bool>()) {
        let sigma = channel_map(k, true);
        let d = interp(&process(seed, 8));
        let phi = formula(seed.wrapping_add(1), if refusals { Logic::F } else { Logic::L });
        let before = sat_structural(&d, &phi);
        let after = sat_structural(&dist_subst(&d, &sigma), &phi.substitute(&sigma));
        prop_assert_eq!(before, after, "{}", phi);
    }

    #[test]
    fn characteristic_tests_use_disjoint_success_names(seed in any::<u64>(), refusals in any::<bool>()) {
        let phi = formula(seed, if refusals { Logic::F } else { Logic::L });
        let names: BTreeSet<Name> = [ch("a"), ch("b"), ch("c"), ch("n0")].into();
        let ct = char_test(&phi, &names).unwrap();
        let distinct: BTreeSet<&Name> = ct.omega.iter().collect();
        prop_assert_eq!(distinct.len(), ct.omega.len());
        prop_assert!(ct.test.success_names().iter().all(|w| distinct.contains(w)));
        prop_assert_eq!(ct.target.len(), ct.omega.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn refusal_free_outcomes_sum_to_one(seed in any::<u64>()) {
        let phi = formula(seed, Logic::L);
        let p = process(seed.wrapping_add(7), 6);
        let mut names: BTreeSet<Name> = [ch("a"), ch("b"), ch("c")].into();
        names.insert(fresh(&names));
        let ct = char_test(&phi, &names).unwrap();
        prop_assert_eq!(ct.target.iter().sum::<Rat>(), Rat::one());
        let outcomes = apply_vector(&ct.test, &p, &ct.omega);
        for v in &outcomes.vertices {
            prop_assert_eq!(v.iter().sum::<Rat>(), Rat::one(), "{} on {}", phi, p);
        }
    }
}
