//! Finitely-presented probability spaces with a sub-σ-algebra, step functions and the
//! conditional-expectation operator.
//!
//! A space is an ordered list of cells. Each cell has a positive rational mass and belongs
//! to one g-block; the sub-σ-algebra is generated by the blocks, except that a saturated
//! cell keeps its full fine structure (the two σ-algebras agree there).

use std::collections::BTreeMap;

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{vec as qv, Q};
use crate::steps::Steps;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellKind {
    /// Atomless inner coordinate, strictly finer than the block σ-algebra.
    Rich,
    /// Atomless inner coordinate on which both σ-algebras coincide.
    Saturated,
    /// A single atom of the fine σ-algebra.
    PointMass,
}

impl CellKind {
    pub fn has_inner(self) -> bool {
        !matches!(self, CellKind::PointMass)
    }

    pub fn is_g_atom(self) -> bool {
        !matches!(self, CellKind::Rich)
    }

    pub fn label(self) -> &'static str {
        match self {
            CellKind::Rich => "rich",
            CellKind::Saturated => "saturated",
            CellKind::PointMass => "point_mass",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub id: String,
    pub mass: Q,
    pub kind: CellKind,
    pub g_block: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub label: String,
    pub cells: Vec<usize>,
    pub mass: Q,
}

impl Block {
    pub fn is_saturated(&self, space: &MeasureSpace) -> bool {
        self.cells.iter().any(|&c| space.cells[c].kind == CellKind::Saturated)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpace {
    cells: Vec<Cell>,
    blocks: Vec<Block>,
    block_of: Vec<usize>,
}

impl MeasureSpace {
    pub fn new(cells: Vec<Cell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidSpace("no cells".into()));
        }
        let mut seen = BTreeMap::new();
        let mut total = Q::zero();
        for (i, c) in cells.iter().enumerate() {
            if seen.insert(c.id.clone(), i).is_some() {
                return Err(Error::InvalidSpace(format!("duplicate cell id {:?}", c.id)));
            }
            if c.mass <= Q::zero() {
                return Err(Error::InvalidSpace(format!("cell {:?} has non-positive mass", c.id)));
            }
            total += &c.mass;
        }
        if !total.is_one() {
            return Err(Error::InvalidSpace(format!("masses sum to {total}, expected 1")));
        }

        // blocks in order of first appearance
        let mut blocks: Vec<Block> = Vec::new();
        let mut block_of = Vec::with_capacity(cells.len());
        for (i, c) in cells.iter().enumerate() {
            let b = match blocks.iter().position(|b| b.label == c.g_block) {
                Some(b) => b,
                None => {
                    blocks.push(Block { label: c.g_block.clone(), cells: vec![], mass: Q::zero() });
                    blocks.len() - 1
                }
            };
            blocks[b].cells.push(i);
            blocks[b].mass += &c.mass;
            block_of.push(b);
        }
        for b in &blocks {
            if b.cells.len() > 1 && b.cells.iter().any(|&c| cells[c].kind == CellKind::Saturated) {
                return Err(Error::InvalidSpace(format!(
                    "saturated cells must sit alone in their g-block ({:?})",
                    b.label
                )));
            }
        }
        Ok(MeasureSpace { cells, blocks, block_of })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, idx: usize) -> &Cell {
        &self.cells[idx]
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_of(&self, cell: usize) -> usize {
        self.block_of[cell]
    }

    pub fn cell_index(&self, id: &str) -> Result<usize> {
        self.cells.iter().position(|c| c.id == id).ok_or_else(|| Error::UnknownCell(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// First saturated or point-mass cell, if any.
    pub fn has_g_atom(&self) -> Option<usize> {
        self.cells.iter().position(|c| c.kind.is_g_atom())
    }
}

/// Data attached to one cell: step data on the inner coordinate, or a single value on a
/// point mass.
#[derive(Clone, Debug, PartialEq)]
pub enum OnCell<T> {
    Inner(Steps<T>),
    Point(T),
}

impl<T> OnCell<T> {
    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> OnCell<U> {
        match self {
            OnCell::Inner(s) => OnCell::Inner(s.map(f)),
            OnCell::Point(v) => OnCell::Point(f(v)),
        }
    }

    pub fn try_map<U, E>(&self, mut f: impl FnMut(&T) -> Result<U, E>) -> Result<OnCell<U>, E> {
        Ok(match self {
            OnCell::Inner(s) => OnCell::Inner(s.try_map(f)?),
            OnCell::Point(v) => OnCell::Point(f(v)?),
        })
    }

    pub fn values(&self) -> Box<dyn Iterator<Item = &T> + '_> {
        match self {
            OnCell::Inner(s) => Box::new(s.values()),
            OnCell::Point(v) => Box::new(std::iter::once(v)),
        }
    }

    /// Pieces as `(lo, hi, value)`; a point mass is reported as the whole `[0, 1]`.
    pub fn pieces(&self) -> Vec<(Q, Q, &T)> {
        match self {
            OnCell::Inner(s) => s.pieces().map(|p| (p.lo, p.hi, p.value)).collect(),
            OnCell::Point(v) => vec![(Q::zero(), Q::one(), v)],
        }
    }

    pub fn cuts(&self) -> Vec<Q> {
        match self {
            OnCell::Inner(s) => s.cuts(),
            OnCell::Point(_) => vec![],
        }
    }

    pub fn is_point(&self) -> bool {
        matches!(self, OnCell::Point(_))
    }

    pub fn zip<U, V>(&self, other: &OnCell<U>, mut f: impl FnMut(&T, &U) -> V) -> Option<OnCell<V>> {
        match (self, other) {
            (OnCell::Inner(a), OnCell::Inner(b)) => Some(OnCell::Inner(a.zip(b, f))),
            (OnCell::Point(a), OnCell::Point(b)) => Some(OnCell::Point(f(a, b))),
            _ => None,
        }
    }

    pub fn refine(&self, cuts: &[Q]) -> OnCell<T>
    where
        T: Clone,
    {
        match self {
            OnCell::Inner(s) => OnCell::Inner(s.refine(cuts)),
            OnCell::Point(v) => OnCell::Point(v.clone()),
        }
    }

    pub fn merged(self) -> OnCell<T>
    where
        T: PartialEq,
    {
        match self {
            OnCell::Inner(s) => OnCell::Inner(s.merged()),
            p => p,
        }
    }
}

/// Checks that `data` has one entry per cell with the variant the cell kind requires.
pub(crate) fn check_shape<T>(space: &MeasureSpace, data: &[OnCell<T>]) -> Result<()> {
    if data.len() != space.len() {
        return Err(Error::ShapeMismatch(format!("{} entries for {} cells", data.len(), space.len())));
    }
    for (c, d) in space.cells().iter().zip(data) {
        if c.kind.has_inner() == d.is_point() {
            return Err(Error::ShapeMismatch(c.id.clone()));
        }
    }
    Ok(())
}

/// A piecewise-constant map from the space to ℚⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    dim: usize,
    cells: Vec<OnCell<Vec<Q>>>,
}

impl StepFunction {
    pub fn new(space: &MeasureSpace, dim: usize, cells: Vec<OnCell<Vec<Q>>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        check_shape(space, &cells)?;
        for c in &cells {
            for v in c.values() {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
                }
            }
        }
        Ok(StepFunction { dim, cells })
    }

    pub fn constant(space: &MeasureSpace, value: Vec<Q>) -> Self {
        let cells = space
            .cells()
            .iter()
            .map(|c| {
                if c.kind.has_inner() {
                    OnCell::Inner(Steps::constant(value.clone()))
                } else {
                    OnCell::Point(value.clone())
                }
            })
            .collect();
        StepFunction { dim: value.len(), cells }
    }

    /// Indicator of one cell times `value`, zero elsewhere.
    pub fn on_cell(space: &MeasureSpace, cell: usize, value: Vec<Q>) -> Self {
        let zero = qv::zeros(value.len());
        let mut f = StepFunction::constant(space, zero);
        f.cells[cell] = f.cells[cell].map(|_| value.clone());
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[OnCell<Vec<Q>>] {
        &self.cells
    }

    pub fn cell(&self, idx: usize) -> &OnCell<Vec<Q>> {
        &self.cells[idx]
    }

    pub(crate) fn from_parts(dim: usize, cells: Vec<OnCell<Vec<Q>>>) -> Self {
        StepFunction { dim, cells }
    }

    fn check(&self, space: &MeasureSpace) -> Result<()> {
        check_shape(space, &self.cells)
    }

    /// Length-weighted average over one cell's inner coordinate.
    pub fn cell_average(&self, idx: usize) -> Vec<Q> {
        match &self.cells[idx] {
            OnCell::Point(v) => v.clone(),
            OnCell::Inner(s) => {
                let mut acc = qv::zeros(self.dim);
                for p in s.pieces() {
                    qv::add_scaled(&mut acc, p.value, &p.len());
                }
                acc
            }
        }
    }

    /// Pointwise `a·self + b·other`.
    pub fn lin_comb(&self, a: &Q, other: &StepFunction, b: &Q) -> Result<StepFunction> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut cells = Vec::with_capacity(self.cells.len());
        for (i, (x, y)) in self.cells.iter().zip(&other.cells).enumerate() {
            let z = x
                .zip(y, |u, v| qv::add(&qv::scale(u, a), &qv::scale(v, b)))
                .ok_or_else(|| Error::ShapeMismatch(format!("cell #{i}")))?;
            cells.push(z.merged());
        }
        Ok(StepFunction { dim: self.dim, cells })
    }

    pub fn scale(&self, a: &Q) -> StepFunction {
        StepFunction { dim: self.dim, cells: self.cells.iter().map(|c| c.map(|v| qv::scale(v, a))).collect() }
    }

    /// Structural equality after merging equal neighbours.
    pub fn same_as(&self, other: &StepFunction) -> bool {
        self.dim == other.dim
            && self.cells.iter().zip(&other.cells).all(|(a, b)| a.clone().merged() == b.clone().merged())
    }
}

/// ∫ f dλ.
pub fn integrate(space: &MeasureSpace, f: &StepFunction) -> Result<Vec<Q>> {
    f.check(space)?;
    let mut acc = qv::zeros(f.dim);
    for (i, c) in space.cells().iter().enumerate() {
        qv::add_scaled(&mut acc, &f.cell_average(i), &c.mass);
    }
    Ok(acc)
}

/// Per-block averages `(Σ mass·avg) / mass(block)`; saturated blocks get `None`.
pub fn block_averages(space: &MeasureSpace, f: &StepFunction) -> Result<Vec<Option<Vec<Q>>>> {
    f.check(space)?;
    Ok(space
        .blocks()
        .iter()
        .map(|b| {
            if b.is_saturated(space) {
                return None;
            }
            let mut acc = qv::zeros(f.dim);
            for &c in &b.cells {
                qv::add_scaled(&mut acc, &f.cell_average(c), &space.cell(c).mass);
            }
            Some(qv::scale(&acc, &(Q::one() / &b.mass)))
        })
        .collect())
}

/// E(f | 𝒢): block averages on rich/point-mass blocks, identity on saturated cells.
pub fn conditional_expectation(space: &MeasureSpace, f: &StepFunction) -> Result<StepFunction> {
    let avgs = block_averages(space, f)?;
    let cells = space
        .cells()
        .iter()
        .enumerate()
        .map(|(i, c)| match &avgs[space.block_of(i)] {
            None => f.cells[i].clone().merged(),
            Some(v) if c.kind.has_inner() => OnCell::Inner(Steps::constant(v.clone())),
            Some(v) => OnCell::Point(v.clone()),
        })
        .collect();
    Ok(StepFunction { dim: f.dim, cells })
}
