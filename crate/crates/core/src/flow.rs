//! Scheduler flows over an explored transition graph, solved region by region.
//!
//! States that can no longer reach a success name are dropped: whatever mass
//! enters them is irrelevant. The rest is split along the dominator tree. A
//! state `u` roots a closed region when everything reachable from it is
//! dominated by it and every success name fired inside is fired only there.
//! Such a region interacts with the rest only through its inflow, and by
//! scaling the set of workable inflows is an interval: `[min, inf)` when
//! outcomes must reach a bound, `[0, max]` when they must stay below one. Each
//! region becomes one small LP computing that threshold, and a final pass
//! rebuilds concrete flows top down.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};
use rustc_hash::FxHashMap;

use crate::dist::Distribution;
use crate::lp::{Cmp, Lp, Outcome};
use crate::name::Name;
use crate::rat::Rat;
use crate::semantics::explore;
use crate::syntax::{Action, State};
use crate::testing::{Certificate, Direction, FlowCheck};

struct Edge {
    /// Index into the explored edge list.
    orig: usize,
    src: usize,
    targets: Vec<(usize, Rat)>,
    fires: Option<usize>,
}

struct Graph {
    n: usize,
    start: Vec<Rat>,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
    into: Vec<Vec<usize>>,
}

/// Live states in topological order, or `None` if some run can fire the same
/// success name twice.
fn live_graph(d: &Distribution, omega: &[Name]) -> Option<(Graph, usize)> {
    let (states, edges) = explore(d);
    let index: FxHashMap<&State, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let position: HashMap<&Name, usize> = omega.iter().enumerate().map(|(k, w)| (w, k)).collect();
    let fires: Vec<Option<usize>> = edges
        .iter()
        .map(|(_, t)| match &t.label {
            Action::Success(w) => position.get(w).copied(),
            _ => None,
        })
        .collect();
    let mut out = vec![Vec::new(); states.len()];
    let mut indegree = vec![0usize; states.len()];
    for (j, (s, t)) in edges.iter().enumerate() {
        out[index[s]].push(j);
        for u in t.target.support() {
            indegree[index[u]] += 1;
        }
    }
    let mut order = Vec::with_capacity(states.len());
    let mut ready: Vec<usize> = (0..states.len()).filter(|&i| indegree[i] == 0).collect();
    while let Some(i) = ready.pop() {
        order.push(i);
        for &j in &out[i] {
            for u in edges[j].1.target.support() {
                let k = index[u];
                indegree[k] -= 1;
                if indegree[k] == 0 {
                    ready.push(k);
                }
            }
        }
    }
    assert_eq!(order.len(), states.len(), "transition graphs are acyclic");
    let mut reach: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); states.len()];
    for &i in order.iter().rev() {
        let mut here = BTreeSet::new();
        for &j in &out[i] {
            for u in edges[j].1.target.support() {
                let below = &reach[index[u]];
                if fires[j].is_some_and(|k| below.contains(&k)) {
                    return None;
                }
                here.extend(below.iter().copied());
            }
            here.extend(fires[j]);
        }
        reach[i] = here;
    }
    let mut renumber = vec![usize::MAX; states.len()];
    let mut n = 0;
    for &i in &order {
        if !reach[i].is_empty() {
            renumber[i] = n;
            n += 1;
        }
    }
    let mut start = vec![Rat::zero(); n];
    for (s, p) in d.iter() {
        let i = renumber[index[s]];
        if i != usize::MAX {
            start[i] = p.clone();
        }
    }
    let mut g = Graph { n, start, edges: Vec::new(), out: vec![Vec::new(); n], into: vec![Vec::new(); n] };
    for (j, (s, t)) in edges.iter().enumerate() {
        let src = renumber[index[s]];
        if src == usize::MAX {
            continue;
        }
        let targets: Vec<(usize, Rat)> = t
            .target
            .iter()
            .map(|(u, p)| (renumber[index[u]], p.clone()))
            .filter(|(u, _)| *u != usize::MAX)
            .collect();
        let e = g.edges.len();
        g.out[src].push(e);
        for (u, _) in &targets {
            g.into[*u].push(e);
        }
        g.edges.push(Edge { orig: j, src, targets, fires: fires[j] });
    }
    Some((g, edges.len()))
}

/// Region roots in topological order; the virtual root is `n`.
fn weight(g: &Graph, e: usize, t: usize) -> Rat {
    g.edges[e].targets.iter().find(|(x, _)| *x == t).expect("edge reaches target").1.clone()
}

struct Regions {
    roots: Vec<usize>,
    /// Per region root (or `n`): the states it owns, i.e. those whose nearest
    /// region root at or above them it is.
    owned: Vec<Vec<usize>>,
    /// Per region root (or `n`): the region roots directly below it.
    nested: Vec<Vec<usize>>,
}

fn regions(g: &Graph, omega_len: usize) -> Regions {
    let root = g.n;
    let mut idom = vec![root; g.n + 1];
    let mut depth = vec![0usize; g.n + 1];
    let lca = |mut a: usize, mut b: usize, idom: &[usize], depth: &[usize]| {
        while a != b {
            if depth[a] >= depth[b] {
                a = idom[a];
            } else {
                b = idom[b];
            }
        }
        a
    };
    for t in 0..g.n {
        let mut preds = g.into[t].iter().map(|&e| g.edges[e].src);
        let mut dom = if g.start[t].is_zero() { preds.next().expect("live states are reachable") } else { root };
        for s in preds {
            dom = lca(dom, s, &idom, &depth);
        }
        idom[t] = dom;
        depth[t] = depth[dom] + 1;
    }
    // preorder intervals of the dominator tree; children have larger indices
    let mut children = vec![Vec::new(); g.n + 1];
    for t in 0..g.n {
        children[idom[t]].push(t);
    }
    let (mut pre, mut size) = (vec![0usize; g.n + 1], vec![1usize; g.n + 1]);
    let mut stack = vec![root];
    let mut clock = 0;
    while let Some(x) = stack.pop() {
        pre[x] = clock;
        clock += 1;
        stack.extend(children[x].iter().rev());
    }
    for t in (0..g.n).rev() {
        size[idom[t]] += size[t];
    }
    let dominates = |u: usize, x: usize| pre[u] <= pre[x] && pre[x] < pre[u] + size[u];
    let mut open = vec![false; g.n];
    for e in &g.edges {
        for (t, _) in &e.targets {
            let mut x = e.src;
            while !dominates(x, *t) {
                open[x] = true;
                x = idom[x];
            }
        }
    }
    let mut firing: Vec<Vec<usize>> = vec![Vec::new(); omega_len];
    for e in &g.edges {
        if let Some(k) = e.fires {
            firing[k].push(e.src);
        }
    }
    for sources in &firing {
        let Some(&first) = sources.first() else { continue };
        let top = sources.iter().fold(first, |a, &b| lca(a, b, &idom, &depth));
        for &f in sources {
            let mut x = f;
            while x != top {
                open[x] = true;
                x = idom[x];
            }
        }
    }
    let mut owner = vec![root; g.n + 1];
    let mut roots = Vec::new();
    let (mut owned, mut nested) = (vec![Vec::new(); g.n + 1], vec![Vec::new(); g.n + 1]);
    for t in 0..g.n {
        if open[t] {
            owner[t] = owner[idom[t]];
        } else {
            owner[t] = t;
            roots.push(t);
            nested[owner[idom[t]]].push(t);
        }
        owned[owner[t]].push(t);
    }
    Regions { roots, owned, nested }
}

/// The LP of one region over the transitions leaving its states. For a proper
/// region the inflow is the extra last variable; the virtual root has none.
struct RegionLp {
    lp: Lp,
    /// Edge indices of the variables.
    vars: Vec<usize>,
}

/// Threshold solution of a region: its inflow and the flows on `vars`.
struct Solved {
    vars: Vec<usize>,
    inflow: Rat,
    flows: Vec<Rat>,
}

fn region_lp(g: &Graph, r: &Regions, u: usize, solved: &HashMap<usize, Solved>, v: &[Rat], dir: Direction) -> RegionLp {
    let owned = &r.owned[u];
    let vars: Vec<usize> = owned.iter().flat_map(|&s| g.out[s].iter().copied()).collect();
    let col: HashMap<usize, usize> = vars.iter().enumerate().map(|(c, &e)| (e, c)).collect();
    let f_col = vars.len();
    let mut lp = Lp::new(vars.len() + usize::from(u != g.n));
    let incoming = |t: usize| -> Vec<(usize, Rat)> {
        g.into[t].iter().filter_map(|e| Some((*col.get(e)?, weight(g, *e, t)))).collect()
    };
    for &s in owned {
        let out = g.out[s].iter().map(|e| (col[e], Rat::one()));
        let into = incoming(s).into_iter().map(|(c, p)| (c, -p));
        // a region root takes all its mass, start included, from the inflow
        let (source, rhs) = if s == u { (Some((f_col, -Rat::one())), Rat::zero()) } else { (None, g.start[s].clone()) };
        lp.add_sparse(out.chain(into).chain(source), Cmp::Eq, rhs);
    }
    if u != g.n && dir == Direction::Leq {
        // no state is entered with more than all the mass
        lp.add_sparse([(f_col, Rat::one())], Cmp::Le, Rat::one());
    }
    for &c in &r.nested[u] {
        let x = &solved[&c].inflow;
        match dir {
            Direction::Geq if x.is_zero() => {}
            Direction::Geq => lp.add_sparse(incoming(c), Cmp::Ge, x - &g.start[c]),
            Direction::Leq => lp.add_sparse(incoming(c), Cmp::Le, x - &g.start[c]),
        }
    }
    let mut fired: Vec<Vec<(usize, Rat)>> = vec![Vec::new(); v.len()];
    for (c, &e) in vars.iter().enumerate() {
        if let Some(k) = g.edges[e].fires {
            fired[k].push((c, Rat::one()));
        }
    }
    for (k, terms) in fired.into_iter().enumerate() {
        match dir {
            _ if terms.is_empty() => {}
            Direction::Geq if v[k].is_zero() => {}
            Direction::Geq => lp.add_sparse(terms, Cmp::Ge, v[k].clone()),
            Direction::Leq => lp.add_sparse(terms, Cmp::Le, v[k].clone()),
        }
    }
    RegionLp { lp, vars }
}

pub(crate) fn flow_check(d: &Distribution, omega: &[Name], v: &[Rat], dir: Direction) -> FlowCheck {
    let Some((g, explored)) = live_graph(d, omega) else { return FlowCheck::Unsupported };
    let mut fired_anywhere = vec![false; omega.len()];
    for e in &g.edges {
        if let Some(k) = e.fires {
            fired_anywhere[k] = true;
        }
    }
    if dir == Direction::Geq && (0..omega.len()).any(|k| !fired_anywhere[k] && !v[k].is_zero()) {
        return FlowCheck::Unattainable;
    }
    let r = regions(&g, omega.len());
    // least (Geq) or greatest (Leq) workable inflow of each region, bottom up
    let mut solved: HashMap<usize, Solved> = HashMap::new();
    for &u in r.roots.iter().rev() {
        let RegionLp { lp, vars } = region_lp(&g, &r, u, &solved, v, dir);
        let mut objective = vec![Rat::zero(); lp.vars];
        objective[vars.len()] = Rat::one();
        let out = match dir {
            Direction::Geq => lp.minimize(&objective),
            Direction::Leq => lp.maximize(&objective),
        };
        let Outcome::Optimal { value, mut point } = out else {
            // Leq regions admit zero inflow and are capped, so only Geq gets here
            return FlowCheck::Unattainable;
        };
        point.truncate(vars.len());
        solved.insert(u, Solved { vars, inflow: value, flows: point });
    }
    let top = region_lp(&g, &r, g.n, &solved, v, dir);
    let Some(point) = top.lp.feasible_point() else { return FlowCheck::Unattainable };
    let mut flow = vec![Rat::zero(); g.edges.len()];
    for (c, &e) in top.vars.iter().enumerate() {
        flow[e] = point[c].clone();
    }
    // scaling a threshold solution keeps every nested inflow on the right side
    for &u in &r.roots {
        let inflow: Rat = g.start[u].clone() + g.into[u].iter().map(|&e| weight(&g, e, u) * &flow[e]).sum::<Rat>();
        let sol = &solved[&u];
        if inflow.is_zero() {
            continue;
        }
        if !sol.inflow.is_zero() {
            let scale = &inflow / &sol.inflow;
            for (e, x) in sol.vars.iter().zip(&sol.flows) {
                flow[*e] = x * &scale;
            }
            continue;
        }
        // a region without demands: any routing will do
        let mut mass: HashMap<usize, Rat> = HashMap::from([(u, inflow)]);
        for &s in &r.owned[u] {
            let Some(m) = mass.remove(&s) else { continue };
            let e = g.out[s][0];
            for (t, p) in &g.edges[e].targets {
                *mass.entry(*t).or_insert_with(Rat::zero) += p * &m;
            }
            flow[e] = m;
        }
    }
    let mut outcome = vec![Rat::zero(); omega.len()];
    let mut point = vec![Rat::zero(); explored];
    for (e, x) in g.edges.iter().zip(flow) {
        if let Some(k) = e.fires {
            outcome[k] += &x;
        }
        point[e.orig] = x;
    }
    let meets = outcome.iter().zip(v).all(|(o, b)| match dir {
        Direction::Geq => o >= b,
        Direction::Leq => o <= b,
    });
    assert!(meets, "region flows must combine into an outcome meeting the bound");
    FlowCheck::Attained(Certificate { point, outcome })
}
