//! Polytopes presented as `translate ⊕ conv(S₁) ⊕ … ⊕ conv(S_r)` with finite point sets `S_j`.
//!
//! Support values and ℓ1 distances are exact in any dimension. Explicit vertex lists are
//! produced for dimension ≤ 3 only.

use num::{Signed, Zero};
use serde::Serialize;

use crate::lp::{LinearProgram, Rel};
use crate::rational::{rats, vec as qv, Q, Rat};

#[derive(Clone, Debug, PartialEq)]
pub struct MinkowskiSum {
    pub translate: Vec<Q>,
    pub summands: Vec<Vec<Vec<Q>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Nearest {
    pub distance: Q,
    pub point: Vec<Q>,
    /// Per-summand convex weights realizing `point`.
    pub weights: Vec<Vec<Q>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PolytopeReport {
    pub translate: Vec<Rat>,
    pub vertices: Option<Vec<Vec<Rat>>>,
}

impl MinkowskiSum {
    pub fn dim(&self) -> usize {
        self.translate.len()
    }

    pub fn point(translate: Vec<Q>) -> Self {
        MinkowskiSum { translate, summands: vec![] }
    }

    /// `max_{x ∈ P} d·x`.
    pub fn support(&self, d: &[Q]) -> Q {
        let mut h = qv::dot(d, &self.translate);
        for s in &self.summands {
            h += s.iter().map(|p| qv::dot(d, p)).max().unwrap_or_else(Q::zero);
        }
        h
    }

    /// ℓ1-nearest point of the polytope to `h`, by linear programming.
    pub fn nearest_l1(&self, h: &[Q]) -> Nearest {
        let n = self.dim();
        if self.summands.is_empty() {
            return Nearest { distance: qv::l1(&qv::sub(h, &self.translate)), point: self.translate.clone(), weights: vec![] };
        }
        let lam: usize = self.summands.iter().map(Vec::len).sum();
        let vars = lam + 2 * n;
        let mut lp = LinearProgram::new(vars);
        for i in 0..n {
            lp.objective[lam + i] = Q::from_integer((-1).into());
            lp.objective[lam + n + i] = Q::from_integer((-1).into());
        }
        let target = qv::sub(h, &self.translate);
        for i in 0..n {
            let mut row = vec![Q::zero(); vars];
            let mut col = 0;
            for s in &self.summands {
                for p in s {
                    row[col] = p[i].clone();
                    col += 1;
                }
            }
            row[lam + i] = Q::from_integer((-1).into());
            row[lam + n + i] = Q::from_integer(1.into());
            lp.push(row, Rel::Eq, target[i].clone());
        }
        let mut col = 0;
        for s in &self.summands {
            let mut row = vec![Q::zero(); vars];
            for _ in s {
                row[col] = Q::from_integer(1.into());
                col += 1;
            }
            lp.push(row, Rel::Eq, Q::from_integer(1.into()));
        }
        let (x, value) = lp.solve().optimal().expect("distance program is feasible and bounded");
        let mut weights = Vec::with_capacity(self.summands.len());
        let mut point = self.translate.clone();
        let mut col = 0;
        for s in &self.summands {
            let mut w = Vec::with_capacity(s.len());
            for p in s {
                qv::add_scaled(&mut point, p, &x[col]);
                w.push(x[col].clone());
                col += 1;
            }
            weights.push(w);
        }
        Nearest { distance: -value, point, weights }
    }

    pub fn contains(&self, h: &[Q]) -> bool {
        self.nearest_l1(h).distance.is_zero()
    }

    /// Exact vertex list for dimension ≤ 3.
    pub fn vertices(&self) -> Option<Vec<Vec<Q>>> {
        let n = self.dim();
        match n {
            1 => {
                let lo = -self.support(&[Q::from_integer((-1).into())]);
                let hi = self.support(&[Q::from_integer(1.into())]);
                Some(if lo == hi { vec![vec![lo]] } else { vec![vec![lo], vec![hi]] })
            }
            2 | 3 => {
                let mut verts = vec![self.translate.clone()];
                for s in &self.summands {
                    let sum: Vec<Vec<Q>> = verts.iter().flat_map(|v| s.iter().map(move |p| qv::add(v, p))).collect();
                    verts = if n == 2 { hull_2d(sum) } else { extreme_points(sum) };
                }
                Some(verts)
            }
            _ => None,
        }
    }

    pub fn report(&self) -> PolytopeReport {
        PolytopeReport {
            translate: rats(&self.translate),
            vertices: self.vertices().map(|vs| vs.iter().map(|v| rats(v)).collect()),
        }
    }
}

fn cross(o: &[Q], a: &[Q], b: &[Q]) -> Q {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

/// Convex hull in the plane, counter-clockwise, collinear points dropped.
pub fn hull_2d(mut pts: Vec<Vec<Q>>) -> Vec<Vec<Q>> {
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Vec<Q>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && !cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive() {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Vec<Q>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && !cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive() {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Points not in the convex hull of the others (any dimension), in sorted order.
pub fn extreme_points(mut pts: Vec<Vec<Q>>) -> Vec<Vec<Q>> {
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut keep = Vec::new();
    for (j, p) in pts.iter().enumerate() {
        let others: Vec<Vec<Q>> = pts.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, q)| q.clone()).collect();
        let hull = MinkowskiSum { translate: qv::zeros(p.len()), summands: vec![others] };
        if !hull.contains(p) {
            keep.push(p.clone());
        }
    }
    keep
}
