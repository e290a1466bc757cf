//! Finite-branch correspondences `F(t) = {g_k(t) : k ∈ K}` and their (mixed) selections.

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::measure::{check_shape, MeasureSpace, OnCell, StepFunction};
use crate::rational::{vec as qv, Q};
use crate::steps::Steps;

#[derive(Clone, Debug, PartialEq)]
pub struct Correspondence {
    dim: usize,
    branches: Vec<StepFunction>,
}

impl Correspondence {
    pub fn new(space: &MeasureSpace, branches: Vec<StepFunction>) -> Result<Self> {
        let first = branches.first().ok_or_else(|| Error::InvalidSpace("correspondence needs a branch".into()))?;
        let dim = first.dim();
        for b in &branches {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: b.dim() });
            }
            check_shape(space, b.cells())?;
        }
        Ok(Correspondence { dim, branches })
    }

    /// `{0, 1}` on one cell and `{0}` elsewhere (branch 0 ≡ 0, branch 1 = indicator).
    pub fn zero_one_on(space: &MeasureSpace, cell: usize) -> Self {
        let zero = StepFunction::constant(space, vec![Q::zero()]);
        let ind = StepFunction::on_cell(space, cell, vec![Q::one()]);
        Correspondence { dim: 1, branches: vec![zero, ind] }
    }

    /// Constant branches, one per value.
    pub fn constant(space: &MeasureSpace, values: &[Vec<Q>]) -> Result<Self> {
        Correspondence::new(space, values.iter().map(|v| StepFunction::constant(space, v.clone())).collect())
    }

    /// The unit vectors of ℚ^k as constant branches (pure actions as vertices of the simplex).
    pub fn one_hot(space: &MeasureSpace, k: usize) -> Self {
        let values: Vec<Vec<Q>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
            .collect();
        Correspondence::constant(space, &values).expect("one-hot branches are well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn branches(&self) -> &[StepFunction] {
        &self.branches
    }

    /// Breakpoints of every branch on one cell.
    pub fn cell_cuts(&self, cell: usize) -> Vec<Q> {
        let mut cuts: Vec<Q> = self.branches.iter().flat_map(|b| b.cell(cell).cuts()).collect();
        cuts.sort();
        cuts.dedup();
        cuts
    }

    /// Value of branch `k` at inner point `x` of `cell` (or at the point mass).
    pub fn value_at(&self, cell: usize, k: usize, x: &Q) -> &[Q] {
        match self.branches[k].cell(cell) {
            OnCell::Inner(s) => s.at(x),
            OnCell::Point(v) => v,
        }
    }

    /// Distinct value diameter in the ℓ∞ norm over all branch values.
    pub fn value_diameter(&self) -> Q {
        let vals: Vec<&Vec<Q>> = self.branches.iter().flat_map(|b| b.cells().iter().flat_map(|c| c.values())).collect();
        let mut best = Q::zero();
        for a in &vals {
            for b in &vals {
                for (x, y) in a.iter().zip(b.iter()) {
                    let d = if x > y { x - y } else { y - x };
                    if d > best {
                        best = d;
                    }
                }
            }
        }
        best
    }
}

/// Pure selection: a branch index per piece.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    cells: Vec<OnCell<usize>>,
}

impl Selection {
    pub fn new(space: &MeasureSpace, cells: Vec<OnCell<usize>>) -> Result<Self> {
        check_shape(space, &cells)?;
        Ok(Selection { cells: cells.into_iter().map(OnCell::merged).collect() })
    }

    pub fn constant(space: &MeasureSpace, k: usize) -> Self {
        let cells = space
            .cells()
            .iter()
            .map(|c| if c.kind.has_inner() { OnCell::Inner(Steps::constant(k)) } else { OnCell::Point(k) })
            .collect();
        Selection { cells }
    }

    pub fn cells(&self) -> &[OnCell<usize>] {
        &self.cells
    }

    pub fn cell(&self, idx: usize) -> &OnCell<usize> {
        &self.cells[idx]
    }

    pub(crate) fn from_parts(cells: Vec<OnCell<usize>>) -> Self {
        Selection { cells: cells.into_iter().map(OnCell::merged).collect() }
    }

    /// One-hot mixed selection with the same value.
    pub fn to_mixed(&self, branch_count: usize) -> MixedSelection {
        let hot = |k: &usize| (0..branch_count).map(|j| if j == *k { Q::one() } else { Q::zero() }).collect();
        MixedSelection { cells: self.cells.iter().map(|c| c.map(hot)).collect() }
    }

    fn check(&self, space: &MeasureSpace, count: usize) -> Result<()> {
        check_shape(space, &self.cells)?;
        for c in &self.cells {
            for &k in c.values() {
                if k >= count {
                    return Err(Error::IndexOutOfRange { index: k, count });
                }
            }
        }
        Ok(())
    }
}

/// Mixed selection: a probability vector over branches per piece.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedSelection {
    cells: Vec<OnCell<Vec<Q>>>,
}

impl MixedSelection {
    pub fn new(space: &MeasureSpace, cells: Vec<OnCell<Vec<Q>>>) -> Result<Self> {
        check_shape(space, &cells)?;
        let m = MixedSelection { cells: cells.into_iter().map(OnCell::merged).collect() };
        m.check_weights(space, None)?;
        Ok(m)
    }

    pub fn constant(space: &MeasureSpace, weights: Vec<Q>) -> Result<Self> {
        let cells = space
            .cells()
            .iter()
            .map(|c| {
                if c.kind.has_inner() {
                    OnCell::Inner(Steps::constant(weights.clone()))
                } else {
                    OnCell::Point(weights.clone())
                }
            })
            .collect();
        MixedSelection::new(space, cells)
    }

    pub fn cells(&self) -> &[OnCell<Vec<Q>>] {
        &self.cells
    }

    pub fn cell(&self, idx: usize) -> &OnCell<Vec<Q>> {
        &self.cells[idx]
    }

    pub(crate) fn from_parts(cells: Vec<OnCell<Vec<Q>>>) -> Self {
        MixedSelection { cells: cells.into_iter().map(OnCell::merged).collect() }
    }

    pub fn check_weights(&self, space: &MeasureSpace, count: Option<usize>) -> Result<()> {
        for (c, data) in space.cells().iter().zip(&self.cells) {
            for w in data.values() {
                if let Some(k) = count {
                    if w.len() != k {
                        return Err(Error::WeightInvalid {
                            cell: c.id.clone(),
                            reason: format!("{} weights for {} branches", w.len(), k),
                        });
                    }
                }
                if w.iter().any(|x| *x < Q::zero()) {
                    return Err(Error::WeightInvalid { cell: c.id.clone(), reason: "negative weight".into() });
                }
                if !w.iter().sum::<Q>().is_one() {
                    return Err(Error::WeightInvalid { cell: c.id.clone(), reason: "weights do not sum to 1".into() });
                }
            }
        }
        Ok(())
    }

    /// `α·self + (1−α)·other` piecewise.
    pub fn blend(&self, alpha: &Q, other: &MixedSelection) -> MixedSelection {
        let beta = Q::one() - alpha;
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| {
                a.zip(b, |u, v| qv::add(&qv::scale(u, alpha), &qv::scale(v, &beta)))
                    .expect("blended selections share a space")
                    .merged()
            })
            .collect();
        MixedSelection { cells }
    }

    /// Branch index when every piece of the cell is one-hot.
    pub fn pure_on(&self, cell: usize) -> Option<OnCell<usize>> {
        self.cells[cell].try_map(|w| one_hot_index(w).ok_or(())).ok()
    }
}

pub(crate) fn one_hot_index(w: &[Q]) -> Option<usize> {
    let mut idx = None;
    for (k, x) in w.iter().enumerate() {
        if !x.is_zero() {
            if idx.is_some() || !x.is_one() {
                return None;
            }
            idx = Some(k);
        }
    }
    idx
}

/// Pointwise value of a selection.
pub fn selection_value(space: &MeasureSpace, f: &Correspondence, s: &Selection) -> Result<StepFunction> {
    s.check(space, f.branch_count())?;
    let cells = s
        .cells
        .iter()
        .enumerate()
        .map(|(i, sel)| match sel {
            OnCell::Point(k) => OnCell::Point(f.value_at(i, *k, &Q::zero()).to_vec()),
            OnCell::Inner(steps) => {
                let refined = steps.refine(&f.cell_cuts(i));
                let pieces: Vec<(Q, Vec<Q>)> = refined
                    .pieces()
                    .map(|p| (p.hi.clone(), f.value_at(i, *p.value, &p.lo).to_vec()))
                    .collect();
                OnCell::Inner(Steps::new(pieces).expect("refinement keeps breakpoints valid").merged())
            }
        })
        .collect();
    Ok(StepFunction::from_parts(f.dim(), cells))
}

/// Pointwise `Σ_k w_k g_k`.
pub fn mixed_value(space: &MeasureSpace, f: &Correspondence, m: &MixedSelection) -> Result<StepFunction> {
    check_shape(space, &m.cells)?;
    m.check_weights(space, Some(f.branch_count()))?;
    let blend = |i: usize, w: &[Q], x: &Q| {
        let mut acc = qv::zeros(f.dim());
        for (k, wk) in w.iter().enumerate() {
            if !wk.is_zero() {
                qv::add_scaled(&mut acc, f.value_at(i, k, x), wk);
            }
        }
        acc
    };
    let cells = m
        .cells
        .iter()
        .enumerate()
        .map(|(i, data)| match data {
            OnCell::Point(w) => OnCell::Point(blend(i, w, &Q::zero())),
            OnCell::Inner(steps) => {
                let refined = steps.refine(&f.cell_cuts(i));
                let pieces: Vec<(Q, Vec<Q>)> = refined.pieces().map(|p| (p.hi.clone(), blend(i, p.value, &p.lo))).collect();
                OnCell::Inner(Steps::new(pieces).expect("refinement keeps breakpoints valid").merged())
            }
        })
        .collect();
    Ok(StepFunction::from_parts(f.dim(), cells))
}
