//! Exact linear programming over the rationals: two-phase primal simplex with
//! Bland's rule. Every variable is implicitly non-negative.

use num_traits::{One, Signed, Zero};

use crate::rat::Rat;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// Sparse row: `(column, coefficient)` pairs sorted by column, no zeros.
pub type Row = Vec<(usize, Rat)>;

fn sparse(terms: impl IntoIterator<Item = (usize, Rat)>) -> Row {
    let mut row: Row = terms.into_iter().collect();
    row.sort_by_key(|(j, _)| *j);
    let mut out: Row = Vec::with_capacity(row.len());
    for (j, v) in row {
        match out.last_mut() {
            Some((k, w)) if *k == j => *w += v,
            _ => out.push((j, v)),
        }
    }
    out.retain(|(_, v)| !v.is_zero());
    out
}

fn entry(row: &Row, j: usize) -> Option<&Rat> {
    row.binary_search_by_key(&j, |(k, _)| *k).ok().map(|i| &row[i].1)
}

/// `row - f * other`, dropping cancelled entries.
fn axpy(row: &Row, f: &Rat, other: &Row) -> Row {
    let mut out = Vec::with_capacity(row.len() + other.len());
    let (mut i, mut k) = (0, 0);
    while i < row.len() || k < other.len() {
        let take_left = k == other.len() || (i < row.len() && row[i].0 < other[k].0);
        let take_right = i == row.len() || (k < other.len() && other[k].0 < row[i].0);
        if take_left {
            out.push(row[i].clone());
            i += 1;
        } else if take_right {
            out.push((other[k].0, -(f * &other[k].1)));
            k += 1;
        } else {
            let v = &row[i].1 - f * &other[k].1;
            if !v.is_zero() {
                out.push((row[i].0, v));
            }
            i += 1;
            k += 1;
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Row,
    pub cmp: Cmp,
    pub rhs: Rat,
}

impl Constraint {
    pub fn holds(&self, x: &[Rat]) -> bool {
        let lhs: Rat = self.coeffs.iter().map(|(j, a)| a * &x[*j]).sum();
        match self.cmp {
            Cmp::Le => lhs <= self.rhs,
            Cmp::Ge => lhs >= self.rhs,
            Cmp::Eq => lhs == self.rhs,
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum Outcome {
    Infeasible,
    Unbounded,
    Optimal { value: Rat, point: Vec<Rat> },
}

/// A linear program in `vars` non-negative variables.
#[derive(Clone, Debug, Default)]
pub struct Lp {
    pub vars: usize,
    pub constraints: Vec<Constraint>,
}

impl Lp {
    pub fn new(vars: usize) -> Self {
        Lp { vars, constraints: Vec::new() }
    }

    /// Adds a constraint given by a dense coefficient vector.
    pub fn add(&mut self, coeffs: Vec<Rat>, cmp: Cmp, rhs: Rat) {
        debug_assert_eq!(coeffs.len(), self.vars);
        self.add_sparse(coeffs.into_iter().enumerate(), cmp, rhs);
    }

    /// Adds a constraint given by `(variable, coefficient)` terms; repeated
    /// variables are summed.
    pub fn add_sparse(&mut self, terms: impl IntoIterator<Item = (usize, Rat)>, cmp: Cmp, rhs: Rat) {
        let coeffs = sparse(terms);
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.vars));
        self.constraints.push(Constraint { coeffs, cmp, rhs });
    }

    /// Checks a candidate point against every constraint and non-negativity.
    pub fn certifies(&self, x: &[Rat]) -> bool {
        x.len() == self.vars && x.iter().all(|v| !v.is_negative()) && self.constraints.iter().all(|c| c.holds(x))
    }

    /// A feasible point, verified against the constraints.
    pub fn feasible_point(&self) -> Option<Vec<Rat>> {
        match self.maximize(&vec![Rat::zero(); self.vars]) {
            Outcome::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }

    pub fn maximize(&self, objective: &[Rat]) -> Outcome {
        let out = Tableau::build(self).solve(objective);
        if let Outcome::Optimal { point, .. } = &out {
            assert!(self.certifies(point), "simplex returned a point that violates its constraints");
        }
        out
    }

    pub fn minimize(&self, objective: &[Rat]) -> Outcome {
        let neg: Vec<Rat> = objective.iter().map(|c| -c).collect();
        match self.maximize(&neg) {
            Outcome::Optimal { value, point } => Outcome::Optimal { value: -value, point },
            other => other,
        }
    }
}

struct Tableau {
    rows: Vec<Row>,
    rhs: Vec<Rat>,
    basis: Vec<usize>,
    vars: usize,
    /// Columns at or beyond this index are artificial.
    first_artificial: usize,
    cols: usize,
}

impl Tableau {
    fn build(lp: &Lp) -> Self {
        let m = lp.constraints.len();
        let slacks = lp.constraints.iter().filter(|c| c.cmp != Cmp::Eq).count();
        let first_artificial = lp.vars + slacks;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut slack = lp.vars;
        let mut art = first_artificial;
        for c in &lp.constraints {
            let mut row = c.coeffs.clone();
            let mut b = c.rhs.clone();
            let slack_col = match c.cmp {
                Cmp::Eq => None,
                Cmp::Le => Some((slack, Rat::one())),
                Cmp::Ge => Some((slack, -Rat::one())),
            };
            if let Some((col, v)) = slack_col.clone() {
                row.push((col, v));
                slack += 1;
            }
            let flip = b.is_negative();
            if flip {
                for (_, v) in row.iter_mut() {
                    *v = -v.clone();
                }
                b = -b;
            }
            // one artificial column per row that lacks a natural basic slack
            if matches!((c.cmp, flip), (Cmp::Le, false) | (Cmp::Ge, true)) {
                basis.push(slack_col.expect("slack").0);
            } else {
                row.push((art, Rat::one()));
                basis.push(art);
                art += 1;
            }
            rows.push(row);
            rhs.push(b);
        }
        Tableau { rows, rhs, basis, vars: lp.vars, first_artificial, cols: art }
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [Rat], obj_val: &mut Rat) {
        let inv = Rat::one() / entry(&self.rows[r], c).expect("pivot entry");
        for (_, v) in self.rows[r].iter_mut() {
            *v *= &inv;
        }
        self.rhs[r] *= &inv;
        let prow = std::mem::take(&mut self.rows[r]);
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let Some(f) = entry(&self.rows[i], c).cloned() else { continue };
            self.rows[i] = axpy(&self.rows[i], &f, &prow);
            self.rhs[i] -= &f * &prhs;
        }
        if !obj[c].is_zero() {
            let f = obj[c].clone();
            for (j, p) in &prow {
                obj[*j] -= &f * p;
            }
            *obj_val -= &f * &prhs;
        }
        self.rows[r] = prow;
        self.basis[r] = c;
    }

    /// Reduced-cost row for maximising `c`, expressed against the current basis.
    fn reduced(&self, c: &[Rat]) -> (Vec<Rat>, Rat) {
        let mut obj: Vec<Rat> = (0..self.cols).map(|j| -c.get(j).cloned().unwrap_or_else(Rat::zero)).collect();
        let mut val = Rat::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            if obj[b].is_zero() {
                continue;
            }
            let f = obj[b].clone();
            for (j, p) in &self.rows[i] {
                obj[*j] -= &f * p;
            }
            val -= &f * &self.rhs[i];
        }
        (obj, val)
    }

    /// Runs simplex iterations over columns `< limit`. Returns false if unbounded.
    fn iterate(&mut self, obj: &mut [Rat], val: &mut Rat, limit: usize) -> bool {
        loop {
            let Some(c) = (0..limit).find(|&j| obj[j].is_negative()) else { return true };
            let mut best: Option<(Rat, usize)> = None;
            for i in 0..self.rows.len() {
                let Some(a) = entry(&self.rows[i], c) else { continue };
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &best {
                    None => true,
                    Some((r, bi)) => ratio < *r || (ratio == *r && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((ratio, i));
                }
            }
            let Some((_, r)) = best else { return false };
            self.pivot(r, c, obj, val);
        }
    }

    fn solve(mut self, objective: &[Rat]) -> Outcome {
        if self.cols > self.first_artificial {
            let phase1: Vec<Rat> =
                (0..self.cols).map(|j| if j >= self.first_artificial { -Rat::one() } else { Rat::zero() }).collect();
            let (mut obj, mut val) = self.reduced(&phase1);
            let cols = self.cols;
            self.iterate(&mut obj, &mut val, cols);
            if !val.is_zero() {
                return Outcome::Infeasible;
            }
            // drive artificial variables out of the basis, dropping redundant rows
            let mut i = 0;
            while i < self.rows.len() {
                if self.basis[i] >= self.first_artificial {
                    match self.rows[i].iter().map(|(j, _)| *j).find(|&j| j < self.first_artificial) {
                        Some(j) => {
                            let mut dummy = vec![Rat::zero(); self.cols];
                            let mut dv = Rat::zero();
                            self.pivot(i, j, &mut dummy, &mut dv);
                        }
                        None => {
                            self.rows.remove(i);
                            self.rhs.remove(i);
                            self.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }
        let (mut obj, mut val) = self.reduced(objective);
        let limit = self.first_artificial;
        if !self.iterate(&mut obj, &mut val, limit) {
            return Outcome::Unbounded;
        }
        let mut point = vec![Rat::zero(); self.vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.vars {
                point[b] = self.rhs[i].clone();
            }
        }
        Outcome::Optimal { value: val, point }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn r(n: i64) -> Rat {
        rat(n, 1)
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        let mut lp = Lp::new(2);
        lp.add(vec![r(1), r(0)], Cmp::Le, r(4));
        lp.add(vec![r(0), r(2)], Cmp::Le, r(12));
        lp.add(vec![r(3), r(2)], Cmp::Le, r(18));
        match lp.maximize(&[r(3), r(5)]) {
            Outcome::Optimal { value, point } => {
                assert_eq!(value, r(36));
                assert_eq!(point, vec![r(2), r(6)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equalities_and_lower_bounds() {
        // x + y = 1, x >= 1/3, minimise x
        let mut lp = Lp::new(2);
        lp.add(vec![r(1), r(1)], Cmp::Eq, r(1));
        lp.add(vec![r(1), r(0)], Cmp::Ge, rat(1, 3));
        match lp.minimize(&[r(1), r(0)]) {
            Outcome::Optimal { value, .. } => assert_eq!(value, rat(1, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = Lp::new(1);
        lp.add(vec![r(1)], Cmp::Le, r(1));
        lp.add(vec![r(1)], Cmp::Ge, r(2));
        assert_eq!(lp.maximize(&[r(1)]), Outcome::Infeasible);
        let mut lp = Lp::new(1);
        lp.add(vec![r(1)], Cmp::Ge, r(2));
        assert_eq!(lp.maximize(&[r(1)]), Outcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = Lp::new(2);
        lp.add(vec![r(1), r(1)], Cmp::Eq, r(1));
        lp.add(vec![r(2), r(2)], Cmp::Eq, r(2));
        lp.add(vec![r(-1), r(0)], Cmp::Le, rat(-1, 2));
        let x = lp.feasible_point().unwrap();
        assert!(lp.certifies(&x));
        assert!(x[0] >= rat(1, 2));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example, which cycles under the largest-coefficient rule
        let mut lp = Lp::new(4);
        lp.add(vec![rat(1, 4), r(-60), rat(-1, 25), r(9)], Cmp::Le, r(0));
        lp.add(vec![rat(1, 2), r(-90), rat(-1, 50), r(3)], Cmp::Le, r(0));
        lp.add(vec![r(0), r(0), r(1), r(0)], Cmp::Le, r(1));
        match lp.maximize(&[rat(3, 4), r(-150), rat(1, 50), r(-6)]) {
            Outcome::Optimal { value, .. } => assert_eq!(value, rat(1, 20)),
            other => panic!("{other:?}"),
        }
    }
}
