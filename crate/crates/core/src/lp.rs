//! Dense two-phase simplex over exact rationals (Bland's rule, so it never cycles).
//!
//! Variables are nonnegative. Problems here are desk scale (tens of variables), so a dense
//! tableau is fine.

use num::{Signed, Zero};

use crate::rational::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Q>,
    pub rel: Rel,
    pub rhs: Q,
}

/// `maximize objective·x` subject to the constraints and `x ≥ 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub vars: usize,
    pub objective: Vec<Q>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<(Vec<Q>, Q)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, value)),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(vars: usize) -> Self {
        LinearProgram { vars, objective: vec![Q::zero(); vars], constraints: vec![] }
    }

    pub fn push(&mut self, coeffs: Vec<Q>, rel: Rel, rhs: Q) {
        debug_assert_eq!(coeffs.len(), self.vars);
        self.constraints.push(Constraint { coeffs, rel, rhs });
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(&self.objective, self.vars)
    }
}

/// Unique solution of a square or overdetermined system `rows·x = rhs`, by exact elimination.
/// `None` when the system is inconsistent or underdetermined.
pub fn solve_unique(mut rows: Vec<Vec<Q>>, mut rhs: Vec<Q>, vars: usize) -> Option<Vec<Q>> {
    let m = rows.len();
    let mut pivots = Vec::with_capacity(vars);
    let mut r = 0;
    for c in 0..vars {
        let Some(p) = (r..m).find(|&i| !rows[i][c].is_zero()) else {
            return None;
        };
        rows.swap(r, p);
        rhs.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            *v *= &inv;
        }
        rhs[r] *= &inv;
        for i in 0..m {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..vars {
                    let d = &f * &rows[r][j];
                    rows[i][j] -= d;
                }
                let d = &f * &rhs[r];
                rhs[i] -= d;
            }
        }
        pivots.push(r);
        r += 1;
    }
    if rhs[r..].iter().any(|x| !x.is_zero()) {
        return None;
    }
    Some(pivots.into_iter().map(|p| rhs[p].clone()).collect())
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    // columns: [structural | slack/surplus | artificial], then rhs
    n_struct: usize,
    n_art_start: usize,
    n_cols: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.constraints.len();
        let n_slack = lp.constraints.iter().filter(|c| c.rel != Rel::Eq).count();
        let n_struct = lp.vars;
        let n_art_start = n_struct + n_slack;
        let n_cols = n_art_start + m;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut slack = n_struct;
        for (i, c) in lp.constraints.iter().enumerate() {
            let mut row = vec![Q::zero(); n_cols + 1];
            row[..n_struct].clone_from_slice(&c.coeffs);
            match c.rel {
                Rel::Le => {
                    row[slack] = Q::from_integer(1.into());
                    slack += 1;
                }
                Rel::Ge => {
                    row[slack] = Q::from_integer((-1).into());
                    slack += 1;
                }
                Rel::Eq => {}
            }
            row[n_cols] = c.rhs.clone();
            if row[n_cols].is_negative() {
                for x in row.iter_mut() {
                    *x = -&*x;
                }
            }
            row[n_art_start + i] = Q::from_integer(1.into());
            rows.push(row);
            basis.push(n_art_start + i);
        }
        Tableau { rows, basis, n_struct, n_art_start, n_cols }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for x in self.rows[r].iter_mut() {
            *x /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost·x` over columns `< limit`; returns false when unbounded.
    fn optimize(&mut self, cost: &[Q], limit: usize) -> bool {
        loop {
            // reduced cost d_j = c_j − Σ c_B a_ij
            let mut entering = None;
            for j in 0..limit {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j].clone();
                for (row, &b) in self.rows.iter().zip(&self.basis) {
                    if !row[j].is_zero() && !cost[b].is_zero() {
                        d -= &cost[b] * &row[j];
                    }
                }
                if d.is_positive() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else { return true };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[j].is_positive() {
                    let ratio = &row[self.n_cols] / &row[j];
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, j),
            }
        }
    }

    fn run(mut self, objective: &[Q], vars: usize) -> LpOutcome {
        // phase 1: maximize −Σ artificials
        let mut cost1 = vec![Q::zero(); self.n_cols];
        for c in cost1.iter_mut().skip(self.n_art_start) {
            *c = Q::from_integer((-1).into());
        }
        self.optimize(&cost1, self.n_cols);
        let infeas: Q = self
            .rows
            .iter()
            .zip(&self.basis)
            .filter(|(_, &b)| b >= self.n_art_start)
            .map(|(r, _)| r[self.n_cols].clone())
            .sum();
        if !infeas.is_zero() {
            return LpOutcome::Infeasible;
        }
        // drive zero-level artificials out of the basis; drop redundant rows
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.n_art_start {
                match (0..self.n_art_start).find(|&j| !self.rows[i][j].is_zero()) {
                    Some(j) => {
                        self.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        let mut cost2 = vec![Q::zero(); self.n_cols];
        cost2[..self.n_struct].clone_from_slice(objective);
        if !self.optimize(&cost2, self.n_art_start) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![Q::zero(); vars];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < vars {
                x[b] = row[self.n_cols].clone();
            }
        }
        let value = x.iter().zip(objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }
}
