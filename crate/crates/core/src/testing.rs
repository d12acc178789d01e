//! Applying tests to processes: scalar (state-based) and vector (action-based)
//! results gathering, and the Hoare and Smyth comparisons of outcome sets.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};

use crate::dist::{dist_par, dist_restrict, interp, Distribution};
use crate::lp::{Cmp, Lp, Outcome};
use crate::name::Name;
use crate::rat::{fmt_rat, Rat};
use crate::semantics::Lts;
use crate::syntax::{Action, Proc, State};

/// A non-empty finite set of success probabilities.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ScalarOutcomes {
    values: BTreeSet<Rat>,
}

impl ScalarOutcomes {
    pub fn new(values: impl IntoIterator<Item = Rat>) -> Self {
        let values: BTreeSet<Rat> = values.into_iter().collect();
        assert!(!values.is_empty(), "outcome sets are never empty");
        ScalarOutcomes { values }
    }

    pub fn values(&self) -> impl Iterator<Item = &Rat> {
        self.values.iter()
    }

    pub fn max(&self) -> &Rat {
        self.values.last().expect("non-empty")
    }

    pub fn min(&self) -> &Rat {
        self.values.first().expect("non-empty")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, v: &Rat) -> bool {
        self.values.contains(v)
    }
}

pub fn hoare_leq(a: &ScalarOutcomes, b: &ScalarOutcomes) -> bool {
    a.max() <= b.max()
}

pub fn smyth_leq(a: &ScalarOutcomes, b: &ScalarOutcomes) -> bool {
    a.min() <= b.min()
}

/// One outcome tuple, indexed like the `omega` order of its set.
pub type OutcomeVector = Vec<Rat>;

/// A finite generating set of a convex set of outcome tuples.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VectorOutcomes {
    pub omega: Vec<Name>,
    pub vertices: Vec<OutcomeVector>,
}

impl VectorOutcomes {
    pub fn new(omega: Vec<Name>, vertices: Vec<OutcomeVector>) -> Self {
        assert!(!vertices.is_empty(), "outcome sets are never empty");
        debug_assert!(vertices.iter().all(|v| v.len() == omega.len()));
        VectorOutcomes { omega, vertices: prune(vertices) }
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn index_of(&self, w: &Name) -> Option<usize> {
        self.omega.iter().position(|o| o == w)
    }

    pub fn max_component(&self, k: usize) -> Rat {
        self.vertices.iter().map(|v| v[k].clone()).max().expect("non-empty")
    }

    pub fn min_component(&self, k: usize) -> Rat {
        self.vertices.iter().map(|v| v[k].clone()).min().expect("non-empty")
    }

    /// Whether `v` lies in the convex hull of the vertices.
    pub fn hull_contains(&self, v: &[Rat]) -> bool {
        in_hull(&self.vertices, v)
    }

    pub fn rendered(&self) -> Vec<Vec<String>> {
        self.vertices.iter().map(|v| v.iter().map(fmt_rat).collect()).collect()
    }
}

/// Removes duplicates and points lying in the convex hull of the others. The
/// hull itself is unchanged.
fn prune(mut points: Vec<OutcomeVector>) -> Vec<OutcomeVector> {
    points.sort();
    points.dedup();
    if points.len() <= 2 {
        return points;
    }
    match points[0].len() {
        0 => points.truncate(1),
        1 => {
            let lo = points.first().cloned().expect("non-empty");
            let hi = points.last().cloned().expect("non-empty");
            points = vec![lo, hi];
        }
        _ => {
            let mut i = 0;
            while i < points.len() && points.len() > 1 {
                let p = points.remove(i);
                if in_hull(&points, &p) {
                    continue;
                }
                points.insert(i, p);
                i += 1;
            }
        }
    }
    points
}

/// Convex weights over `vertices` plus the given per-component constraint.
fn convex_lp(vertices: &[OutcomeVector], v: &[Rat], cmp: Cmp) -> Lp {
    let mut lp = Lp::new(vertices.len());
    lp.add(vec![Rat::one(); vertices.len()], Cmp::Eq, Rat::one());
    for (k, bound) in v.iter().enumerate() {
        lp.add(vertices.iter().map(|o| o[k].clone()).collect(), cmp, bound.clone());
    }
    lp
}

fn in_hull(vertices: &[OutcomeVector], v: &[Rat]) -> bool {
    !vertices.is_empty() && convex_lp(vertices, v, Cmp::Eq).feasible_point().is_some()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Direction {
    /// Some point of the hull is componentwise at most the bound.
    Leq,
    /// Some point of the hull is componentwise at least the bound.
    Geq,
}

/// Decides whether a convex combination of the vertices is bounded by `v`. A
/// positive answer carries convex weights that have been replayed against the
/// constraints.
pub fn convex_witness(o: &VectorOutcomes, v: &[Rat], dir: Direction) -> Option<Vec<Rat>> {
    let cmp = match dir {
        Direction::Leq => Cmp::Le,
        Direction::Geq => Cmp::Ge,
    };
    let lp = convex_lp(&o.vertices, v, cmp);
    let w = lp.feasible_point()?;
    assert!(lp.certifies(&w));
    Some(w)
}

pub fn convex_exists_leq(o: &VectorOutcomes, v: &[Rat], dir: Direction) -> bool {
    convex_witness(o, v, dir).is_some()
}

/// Every point of the first hull is below some point of the second.
pub fn vector_hoare(a: &VectorOutcomes, b: &VectorOutcomes) -> bool {
    a.vertices.iter().all(|o| convex_exists_leq(b, o, Direction::Geq))
}

/// Every point of the second hull is above some point of the first.
pub fn vector_smyth(a: &VectorOutcomes, b: &VectorOutcomes) -> bool {
    b.vertices.iter().all(|o| convex_exists_leq(a, o, Direction::Leq))
}

/// A replayed LP solution showing that an outcome meets a bound. `point` holds
/// either per-transition scheduler flows (in the order of `explore`; zero on
/// transitions of states that can no longer succeed) or convex weights over
/// outcome vertices; `outcome` is the vector it yields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub point: Vec<Rat>,
    pub outcome: OutcomeVector,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FlowCheck {
    Attained(Certificate),
    Unattainable,
    /// Some run can fire a success name twice, so flows overcount.
    Unsupported,
}

/// Decides whether some outcome of `d` is bounded by `v` by LPs over
/// randomised schedulers of the explored graph. Mass entering a state with
/// transitions must leave through one of them, and component `k` is the mass
/// crossing transitions labelled `omega[k]`. Because outcome sets are convex,
/// one flow variable per transition suffices however often a state is reached.
/// This counts expected firings, which equals the probability of firing only
/// when no run fires the same name twice; otherwise `Unsupported`.
pub fn flow_check(d: &Distribution, omega: &[Name], v: &[Rat], dir: Direction) -> FlowCheck {
    crate::flow::flow_check(d, omega, v, dir)
}

/// Some outcome of `d` is bounded by `v`: by scheduler flows when they are
/// exact, otherwise over the gathered outcome vertices.
pub fn meets_bound(d: &Distribution, omega: &[Name], v: &[Rat], dir: Direction) -> Option<Certificate> {
    match flow_check(d, omega, v, dir) {
        FlowCheck::Attained(c) => Some(c),
        FlowCheck::Unattainable => None,
        FlowCheck::Unsupported => {
            let o = Gatherer::new().gather_vector_dist(d, omega);
            let point = convex_witness(&o, v, dir)?;
            let outcome = (0..omega.len())
                .map(|k| o.vertices.iter().zip(&point).map(|(x, l)| &x[k] * l).sum())
                .collect();
            Some(Certificate { point, outcome })
        }
    }
}

/// Memo tables for one batch of results gathering.
#[derive(Default)]
pub struct Gatherer {
    lts: Lts,
    scalar: HashMap<State, BTreeSet<Rat>>,
    vector: HashMap<(State, Vec<Name>), Vec<OutcomeVector>>,
}

impl Gatherer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lts(&mut self) -> &mut Lts {
        &mut self.lts
    }

    fn scalar_state(&mut self, s: &State) -> BTreeSet<Rat> {
        if let Some(v) = self.scalar.get(s) {
            return v.clone();
        }
        let trans = self.lts.transitions(s);
        let out = if trans.iter().any(|t| matches!(t.label, Action::Success(_))) {
            BTreeSet::from([Rat::one()])
        } else if trans.iter().any(|t| t.label == Action::Tau) {
            let mut out = BTreeSet::new();
            for t in trans.iter().filter(|t| t.label == Action::Tau) {
                out.extend(self.scalar_dist(&t.target));
            }
            out
        } else {
            BTreeSet::from([Rat::zero()])
        };
        self.scalar.insert(s.clone(), out.clone());
        out
    }

    fn scalar_dist(&mut self, d: &Distribution) -> BTreeSet<Rat> {
        let mut acc = BTreeSet::from([Rat::zero()]);
        for (s, w) in d.iter() {
            let here = self.scalar_state(s);
            acc = acc.iter().flat_map(|a| here.iter().map(move |v| a + w * v)).collect();
        }
        acc
    }

    pub fn gather_scalar_dist(&mut self, d: &Distribution) -> ScalarOutcomes {
        ScalarOutcomes::new(self.scalar_dist(d))
    }

    fn vector_state(&mut self, s: &State, omega: &[Name]) -> Vec<OutcomeVector> {
        let key = (s.clone(), omega.to_vec());
        if let Some(v) = self.vector.get(&key) {
            return v.clone();
        }
        let trans = self.lts.transitions(s);
        let out = if trans.is_empty() {
            vec![vec![Rat::zero(); omega.len()]]
        } else {
            let mut all = Vec::new();
            for t in trans.iter() {
                let hit = match &t.label {
                    Action::Success(w) => omega.iter().position(|o| o == w),
                    _ => None,
                };
                for mut v in self.vector_dist(&t.target, omega) {
                    if let Some(k) = hit {
                        v[k] = Rat::one();
                    }
                    all.push(v);
                }
            }
            prune(all)
        };
        self.vector.insert(key, out.clone());
        out
    }

    fn vector_dist(&mut self, d: &Distribution, omega: &[Name]) -> Vec<OutcomeVector> {
        let mut acc: Vec<OutcomeVector> = vec![vec![Rat::zero(); omega.len()]];
        for (s, w) in d.iter() {
            let here = self.vector_state(s, omega);
            let mut next = Vec::with_capacity(acc.len() * here.len());
            for a in &acc {
                for v in &here {
                    next.push(a.iter().zip(v).map(|(x, y)| x + w * y).collect());
                }
            }
            acc = prune(next);
        }
        acc
    }

    pub fn gather_vector_dist(&mut self, d: &Distribution, omega: &[Name]) -> VectorOutcomes {
        VectorOutcomes::new(omega.to_vec(), self.vector_dist(d, omega))
    }

    pub fn apply_scalar(&mut self, test: &Proc, p: &Proc) -> ScalarOutcomes {
        self.gather_scalar_dist(&closed_pair(test, p))
    }

    pub fn apply_vector(&mut self, test: &Proc, p: &Proc, omega: &[Name]) -> VectorOutcomes {
        self.gather_vector_dist(&closed_pair(test, p), omega)
    }
}

/// `⟦ν x⃗.(T | P)⟧` where `x⃗` are the free channel names of both terms.
pub fn closed_pair(test: &Proc, p: &Proc) -> Distribution {
    closed_dist(&dist_par(&interp(test), &interp(p)))
}

/// Restricts every free channel name of `d`, innermost first in name order.
pub fn closed_dist(d: &Distribution) -> Distribution {
    let mut out = d.clone();
    for x in d.free_names().iter().rev().filter(|x| !x.is_success()) {
        out = dist_restrict(x, &out);
    }
    out
}

pub fn gather_scalar(s: &State) -> ScalarOutcomes {
    Gatherer::new().gather_scalar_dist(&Distribution::point(s))
}

pub fn gather_vector(s: &State, omega: &[Name]) -> VectorOutcomes {
    Gatherer::new().gather_vector_dist(&Distribution::point(s), omega)
}

pub fn apply_scalar(test: &Proc, p: &Proc) -> ScalarOutcomes {
    Gatherer::new().apply_scalar(test, p)
}

pub fn apply_vector(test: &Proc, p: &Proc, omega: &[Name]) -> VectorOutcomes {
    Gatherer::new().apply_vector(test, p, omega)
}

/// Largest value of the linear functional `c` over the hull, computed by LP.
pub fn maximize_over(o: &VectorOutcomes, c: &[Rat]) -> Rat {
    let obj: Vec<Rat> = o.vertices.iter().map(|v| v.iter().zip(c).map(|(a, b)| a * b).sum()).collect();
    let mut lp = Lp::new(o.vertices.len());
    lp.add(vec![Rat::one(); o.vertices.len()], Cmp::Eq, Rat::one());
    match lp.maximize(&obj) {
        Outcome::Optimal { value, .. } => value,
        other => unreachable!("bounded feasible program, got {other:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use crate::syntax::{parse, parse_state, ParseOptions};

    fn opts() -> ParseOptions {
        ParseOptions::default()
    }

    fn pr(text: &str) -> Proc {
        parse(text, &opts()).unwrap()
    }

    fn st(text: &str) -> State {
        parse_state(text, &opts()).unwrap()
    }

    fn set(vals: &[Rat]) -> ScalarOutcomes {
        ScalarOutcomes::new(vals.iter().cloned())
    }

    fn w(s: &str) -> Name {
        Name::success(s)
    }

    fn vo(omega: &[&str], pts: &[&[(i64, i64)]]) -> VectorOutcomes {
        VectorOutcomes::new(
            omega.iter().map(|s| w(s)).collect(),
            pts.iter().map(|p| p.iter().map(|(n, d)| rat(*n, *d)).collect()).collect(),
        )
    }

    #[test]
    fn scalar_gathering() {
        assert_eq!(gather_scalar(&st("w.0 + a!b.0")), set(&[rat(1, 1)]));
        assert_eq!(gather_scalar(&State::Nil), set(&[rat(0, 1)]));
        assert_eq!(gather_scalar(&st("tau.w.0 + tau.0")), set(&[rat(0, 1), rat(1, 1)]));
    }

    #[test]
    fn scalar_application() {
        let t = pr("a!c.a(y).w");
        assert_eq!(apply_scalar(&t, &pr("a(x).a!b")), set(&[rat(1, 1)]));
        assert_eq!(apply_scalar(&t, &pr("a(x).[x!=c]tau.a!b")), set(&[rat(0, 1)]));
        assert_eq!(apply_scalar(&pr("w.0"), &pr("a(x).0")), set(&[rat(1, 1)]));
    }

    #[test]
    fn scalar_application_weights_branches() {
        let t = pr("a(y).w");
        let p = pr("a!a.0 (+1/3) 0");
        assert_eq!(apply_scalar(&t, &p), set(&[rat(1, 3)]));
    }

    #[test]
    fn vector_gathering() {
        let om = [w("w")];
        assert_eq!(gather_vector(&State::Nil, &om).vertices, vec![vec![rat(0, 1)]]);
        assert_eq!(gather_vector(&st("w.0"), &om).vertices, vec![vec![rat(1, 1)]]);
        let o = ParseOptions::declared(["w1", "w2"]);
        let s = parse_state("w1.0 + w2.0", &o).unwrap();
        let v = gather_vector(&s, &[w("w1"), w("w2")]);
        assert_eq!(v.vertices, vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]]);
    }

    #[test]
    fn vector_application() {
        let om = [w("w")];
        assert_eq!(apply_vector(&pr("w"), &pr("a(x).0"), &om).vertices, vec![vec![rat(1, 1)]]);
        assert_eq!(apply_vector(&pr("a!a.w"), &pr("a(x).0"), &om).vertices, vec![vec![rat(1, 1)]]);
        assert_eq!(apply_vector(&pr("a(y).w"), &pr("0"), &om).vertices, vec![vec![rat(0, 1)]]);
    }

    #[test]
    fn flows_agree_with_vertices() {
        let o = ParseOptions::declared(["w1", "w2"]);
        let om = [w("w1"), w("w2")];
        let tests = ["w1.0 + a(y).w2.0", "tau.w1.0 + tau.(w2.0 (+1/3) 0)", "a(y).(w1.0 (+1/2) w2.0) + b(y).w1.0"];
        let procs = ["a!a.0", "a!a.0 + b!b.0", "tau.a!a.0 (+1/2) b!a.0", "0"];
        let bounds = [(1, 1), (1, 2), (1, 3), (0, 1)];
        for t in tests {
            for p in procs {
                let d = closed_pair(&parse(t, &o).unwrap(), &pr(p));
                let hull = Gatherer::new().gather_vector_dist(&d, &om);
                for (x, y) in bounds {
                    for (u, v) in bounds {
                        let bound = [rat(x, y), rat(u, v)];
                        for dir in [Direction::Leq, Direction::Geq] {
                            let by_flow = match flow_check(&d, &om, &bound, dir) {
                                FlowCheck::Attained(fw) => {
                                    assert!(hull.hull_contains(&fw.outcome), "{t} | {p}");
                                    true
                                }
                                FlowCheck::Unattainable => false,
                                FlowCheck::Unsupported => panic!("{t}"),
                            };
                            assert_eq!(by_flow, convex_exists_leq(&hull, &bound, dir), "{t} | {p} {dir:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn repeated_success_is_unsupported() {
        let d = Distribution::point(&st("w.w.0"));
        assert_eq!(flow_check(&d, &[w("w")], &[rat(1, 1)], Direction::Geq), FlowCheck::Unsupported);
    }

    #[test]
    fn scalar_orders() {
        let a = set(&[rat(3, 10), rat(1, 2)]);
        let b = set(&[rat(1, 2)]);
        assert!(hoare_leq(&a, &b));
        assert!(smyth_leq(&a, &b));
        assert!(!hoare_leq(&set(&[rat(1, 1)]), &b));
    }

    #[test]
    fn convex_feasibility() {
        let corners = vo(&["w1", "w2"], &[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]]);
        let mid = [rat(1, 2), rat(1, 2)];
        assert!(convex_exists_leq(&corners, &mid, Direction::Leq));
        assert!(convex_exists_leq(&corners, &mid, Direction::Geq));
        let top = vo(&["w1", "w2"], &[&[(1, 1), (1, 1)]]);
        assert!(!convex_exists_leq(&top, &[rat(1, 2), rat(1, 1)], Direction::Leq));
    }

    #[test]
    fn vector_orders() {
        let a = vo(&["w1", "w2"], &[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]]);
        assert!(vector_hoare(&a, &a) && vector_smyth(&a, &a));
        let zero = vo(&["w1", "w2"], &[&[(0, 1), (0, 1)]]);
        assert!(vector_hoare(&zero, &a));
        let x = vo(&["w1", "w2"], &[&[(1, 1), (0, 1)]]);
        let y = vo(&["w1", "w2"], &[&[(0, 1), (1, 1)]]);
        assert!(!vector_hoare(&x, &y));
    }

    #[test]
    fn pruning_keeps_the_hull() {
        let v = vo(&["w1", "w2"], &[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)], &[(1, 2), (1, 2)], &[(1, 1), (0, 1)]]);
        assert_eq!(v.vertices.len(), 2);
        assert!(v.hull_contains(&[rat(1, 4), rat(3, 4)]));
        assert!(!v.hull_contains(&[rat(1, 4), rat(1, 4)]));
        assert_eq!(maximize_over(&v, &[rat(1, 1), rat(2, 1)]), rat(2, 1));
    }
}
