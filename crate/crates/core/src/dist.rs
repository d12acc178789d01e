//! Finite-support distributions over canonical state-based processes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::name::Name;
use crate::rat::{fmt_rat, Rat};
use crate::syntax::{canonical, substitute, Proc, State, Subst};

/// A probability distribution with finite support. Keys are canonical terms,
/// weights are strictly positive and sum to one.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Distribution {
    support: BTreeMap<State, Rat>,
}

impl Distribution {
    /// The point distribution on `s`.
    pub fn point(s: &State) -> Self {
        Distribution { support: BTreeMap::from([(canonical(s), Rat::one())]) }
    }

    /// Builds a distribution from weighted terms, canonicalising and merging
    /// alpha-equivalent entries. Zero weights are dropped. The caller guarantees
    /// that the weights sum to one.
    pub(crate) fn from_weighted<I>(items: I) -> Self
    where
        I: IntoIterator<Item = (State, Rat)>,
    {
        let mut support: BTreeMap<State, Rat> = BTreeMap::new();
        for (s, w) in items {
            if w.is_zero() {
                continue;
            }
            *support.entry(canonical(&s)).or_insert_with(Rat::zero) += w;
        }
        debug_assert!(support.values().sum::<Rat>().is_one(), "weights must sum to one");
        Distribution { support }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&State, &Rat)> {
        self.support.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &State> {
        self.support.keys()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Weight of `s` (compared up to alpha-equivalence).
    pub fn weight(&self, s: &State) -> Rat {
        self.support.get(&canonical(s)).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn total(&self) -> Rat {
        self.support.values().sum()
    }

    pub fn as_point(&self) -> Option<&State> {
        if self.support.len() == 1 {
            self.support.keys().next()
        } else {
            None
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        self.support.keys().flat_map(State::free_names).collect()
    }

    /// Entries as `(term text, "num/den")`, sorted by term text.
    pub fn rendered(&self) -> Vec<(String, String)> {
        let mut rows: Vec<(String, String)> =
            self.support.iter().map(|(s, w)| (s.to_string(), fmt_rat(w))).collect();
        rows.sort();
        rows
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (s, w)) in self.rendered().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s} -> {w}")?;
        }
        f.write_str("}")
    }
}

/// Interpretation of a process term as a distribution over state-based processes.
pub fn interp(p: &Proc) -> Distribution {
    let mut out = Vec::new();
    flatten(p, Rat::one(), &mut out);
    Distribution::from_weighted(out)
}

/// Flattens nested probabilistic choices into weighted state terms, without
/// canonicalising.
pub(crate) fn flatten(p: &Proc, weight: Rat, out: &mut Vec<(State, Rat)>) {
    match p {
        Proc::State(s) => out.push((s.clone(), weight)),
        Proc::Choice { p: q, left, right } => {
            flatten(left, weight.clone() * q, out);
            let rest = Rat::one() - q;
            if !rest.is_zero() {
                flatten(right, weight * rest, out);
            }
        }
    }
}

/// Weighted sum of distributions. Rejects negative weights and weights that do
/// not sum to one.
pub fn mix(parts: &[(Rat, Distribution)]) -> Result<Distribution> {
    let total: Rat = parts.iter().map(|(p, _)| p.clone()).sum();
    if parts.iter().any(|(p, _)| *p < Rat::zero()) || !total.is_one() {
        return Err(Error::Weights(fmt_rat(&total)));
    }
    Ok(combine(parts.iter().map(|(p, d)| (p.clone(), d))))
}

/// Weighted sum without the weight check.
pub(crate) fn combine<'a, I>(parts: I) -> Distribution
where
    I: IntoIterator<Item = (Rat, &'a Distribution)>,
{
    let mut support: BTreeMap<State, Rat> = BTreeMap::new();
    for (p, d) in parts {
        if p.is_zero() {
            continue;
        }
        for (s, w) in d.iter() {
            *support.entry(s.clone()).or_insert_with(Rat::zero) += p.clone() * w;
        }
    }
    support.retain(|_, w| !w.is_zero());
    Distribution { support }
}

/// Product distribution over parallel compositions.
pub fn dist_par(left: &Distribution, right: &Distribution) -> Distribution {
    Distribution::from_weighted(left.iter().flat_map(|(s, p)| {
        right.iter().map(move |(t, q)| (State::par(s.clone(), t.clone()), p.clone() * q))
    }))
}

/// Restricts `x` in every support element.
pub fn dist_restrict(x: &Name, d: &Distribution) -> Distribution {
    Distribution::from_weighted(d.iter().map(|(s, p)| (State::restrict(x.clone(), s.clone()), p.clone())))
}

/// Applies a substitution to every support element; weights of states that
/// become alpha-equivalent are added.
pub fn dist_subst(d: &Distribution, map: &Subst) -> Distribution {
    if map.iter().all(|(k, v)| k == v) {
        return d.clone();
    }
    Distribution::from_weighted(d.iter().map(|(s, p)| (substitute(s, map), p.clone())))
}
