//! The set of conditional expectations `{E(f|𝒢) : f a selection of F}` and constructive
//! witnesses for its convexity (or the atom that breaks it).
//!
//! On a block without saturated cells every `E(f|𝒢)` is a constant, and the attainable
//! constants form a finite union of polytopes: rich pieces contribute scaled hulls of their
//! branch values, point masses contribute finite sets. On a saturated cell `E(·|𝒢)` is the
//! identity, so the attainable functions are exactly the splices of the branches.

use std::collections::BTreeSet;

use num::{One, Signed, Zero};
use serde::Serialize;

use crate::correspondence::{selection_value, Correspondence, MixedSelection, Selection};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::measure::{conditional_expectation, CellKind, MeasureSpace, OnCell, StepFunction};
use crate::polytope::{MinkowskiSum, PolytopeReport};
use crate::rational::{half, rats, vec as qv, Rat, Q};
use crate::steps::{intervals, Steps};

/// Largest number of point-mass translates kept per block.
pub const MAX_TRANSLATES: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq)]
pub struct BlockRegion {
    pub block: usize,
    pub polytopes: Vec<MinkowskiSum>,
}

impl BlockRegion {
    pub fn dim(&self) -> usize {
        self.polytopes[0].dim()
    }

    pub fn support(&self, d: &[Q]) -> Q {
        self.polytopes.iter().map(|p| p.support(d)).max().expect("region has a polytope")
    }

    /// ℓ1 distance from `h` to the region and the nearest point.
    pub fn nearest(&self, h: &[Q]) -> (Q, Vec<Q>) {
        let mut best: Option<(Q, Vec<Q>)> = None;
        for p in &self.polytopes {
            let n = p.nearest_l1(h);
            if best.as_ref().is_none_or(|(d, _)| n.distance < *d) {
                best = Some((n.distance, n.point));
            }
        }
        best.expect("region has a polytope")
    }

    pub fn contains(&self, h: &[Q]) -> bool {
        self.polytopes.iter().any(|p| p.contains(h))
    }

    /// Exact convexity test; available for a single polytope or in dimension one.
    pub fn is_convex(&self) -> Option<bool> {
        if self.polytopes.len() == 1 {
            return Some(true);
        }
        if self.dim() != 1 {
            return None;
        }
        let mut ivs: Vec<(Q, Q)> = self
            .polytopes
            .iter()
            .map(|p| {
                let hi = p.support(&[Q::one()]);
                let lo = -p.support(&[-Q::one()]);
                (lo, hi)
            })
            .collect();
        ivs.sort();
        let mut reach = ivs[0].1.clone();
        for (lo, hi) in &ivs[1..] {
            if *lo > reach {
                return Some(false);
            }
            if *hi > reach {
                reach = hi.clone();
            }
        }
        Some(true)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Component {
    Region(BlockRegion),
    /// Saturated cell: every splice of the branches is attainable.
    Splices { cell: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CondExpSet {
    pub dim: usize,
    pub components: Vec<Component>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentReport {
    Region { block: String, convex: Option<bool>, polytopes: Vec<PolytopeReport> },
    AllSplices { block: String, cell: String },
}

impl CondExpSet {
    pub fn report(&self, space: &MeasureSpace) -> Vec<ComponentReport> {
        self.components
            .iter()
            .map(|c| match c {
                Component::Region(r) => ComponentReport::Region {
                    block: space.blocks()[r.block].label.clone(),
                    convex: r.is_convex(),
                    polytopes: r.polytopes.iter().map(MinkowskiSum::report).collect(),
                },
                Component::Splices { cell } => ComponentReport::AllSplices {
                    block: space.cell(*cell).g_block.clone(),
                    cell: space.cell(*cell).id.clone(),
                },
            })
            .collect()
    }
}

/// A rich piece of a block: `(cell, lo, hi)` on which every branch is constant.
type RichPiece = (usize, Q, Q);

fn rich_pieces(space: &MeasureSpace, f: &Correspondence, block: usize) -> Vec<RichPiece> {
    let mut out = Vec::new();
    for &c in &space.blocks()[block].cells {
        if space.cell(c).kind == CellKind::Rich {
            for (lo, hi) in intervals(&f.cell_cuts(c)) {
                out.push((c, lo, hi));
            }
        }
    }
    out
}

/// Points `len·mass(c)/mass(B) · g_k(piece)` for every branch, in branch order.
fn piece_points(space: &MeasureSpace, f: &Correspondence, block: usize, piece: &RichPiece) -> Vec<Vec<Q>> {
    let (c, lo, hi) = piece;
    let w = (hi - lo) * &space.cell(*c).mass / &space.blocks()[block].mass;
    (0..f.branch_count()).map(|k| qv::scale(f.value_at(*c, k, lo), &w)).collect()
}

/// The attainable block averages of `f` over one non-saturated block.
pub fn block_set(space: &MeasureSpace, f: &Correspondence, block: usize) -> Result<BlockRegion> {
    let b = &space.blocks()[block];
    if b.is_saturated(space) {
        return Err(Error::SaturatedBlock(b.label.clone()));
    }
    let n = f.dim();
    let mut base = qv::zeros(n);
    let mut summands = Vec::new();
    for piece in rich_pieces(space, f, block) {
        let pts: BTreeSet<Vec<Q>> = piece_points(space, f, block, &piece).into_iter().collect();
        if pts.len() == 1 {
            base = qv::add(&base, pts.first().unwrap());
        } else {
            summands.push(pts.into_iter().collect());
        }
    }
    let mut translates: BTreeSet<Vec<Q>> = BTreeSet::from([base]);
    for &c in &b.cells {
        let cell = space.cell(c);
        if cell.kind != CellKind::PointMass {
            continue;
        }
        let w = &cell.mass / &b.mass;
        let opts: BTreeSet<Vec<Q>> =
            (0..f.branch_count()).map(|k| qv::scale(f.value_at(c, k, &Q::zero()), &w)).collect();
        translates = translates.iter().flat_map(|t| opts.iter().map(move |o| qv::add(t, o))).collect();
        if translates.len() > MAX_TRANSLATES {
            return Err(Error::BudgetExceeded(format!("block {:?} has too many point-mass translates", b.label)));
        }
    }
    let polytopes = translates.into_iter().map(|translate| MinkowskiSum { translate, summands: summands.clone() }).collect();
    Ok(BlockRegion { block, polytopes })
}

/// Every block's component, computed independently per block.
pub fn condexp_set(space: &MeasureSpace, f: &Correspondence, exec: Exec) -> Result<CondExpSet> {
    let comps = exec.map_range(space.blocks().len(), |b| {
        let block = &space.blocks()[b];
        if block.is_saturated(space) {
            Ok(Component::Splices { cell: block.cells[0] })
        } else {
            block_set(space, f, b).map(Component::Region)
        }
    });
    Ok(CondExpSet { dim: f.dim(), components: comps.into_iter().collect::<Result<_>>()? })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub block: String,
    /// L1(λ) distance from `h` to the attainable set, restricted to the block.
    pub distance: Rat,
    /// From `h` towards the nearest attainable value (on a saturated cell: at its worst piece).
    pub direction: Vec<Rat>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    pub failing: Option<Certificate>,
    pub blocks: Vec<Certificate>,
}

fn block_constant(space: &MeasureSpace, h: &StepFunction, block: usize) -> Result<Vec<Q>> {
    let b = &space.blocks()[block];
    let mut value: Option<&Vec<Q>> = None;
    for &c in &b.cells {
        for v in h.cell(c).values() {
            match value {
                None => value = Some(v),
                Some(w) if w != v => return Err(Error::NotGMeasurable(b.label.clone())),
                _ => {}
            }
        }
    }
    Ok(value.expect("blocks are nonempty").clone())
}

/// Whether `h` lies in the set of conditional expectations of selections of `f`.
///
/// `h` is a member when every block's distance is at most `tolerance`.
pub fn membership(space: &MeasureSpace, f: &Correspondence, h: &StepFunction, tolerance: &Q) -> Result<Membership> {
    if h.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: h.dim() });
    }
    crate::measure::integrate(space, h)?;
    let mut blocks = Vec::new();
    for (bi, b) in space.blocks().iter().enumerate() {
        let (distance, direction) = if b.is_saturated(space) {
            saturated_distance(space, f, h, b.cells[0])
        } else {
            let v = block_constant(space, h, bi)?;
            let region = block_set(space, f, bi)?;
            let (d, p) = region.nearest(&v);
            (d * &b.mass, qv::sub(&p, &v))
        };
        blocks.push(Certificate { block: b.label.clone(), distance: Rat(distance), direction: rats(&direction) });
    }
    let failing = blocks.iter().find(|c| c.distance.0 > *tolerance).cloned();
    Ok(Membership { member: failing.is_none(), failing, blocks })
}

fn saturated_distance(space: &MeasureSpace, f: &Correspondence, h: &StepFunction, cell: usize) -> (Q, Vec<Q>) {
    let OnCell::Inner(hs) = h.cell(cell) else { unreachable!("saturated cells carry steps") };
    let mut total = Q::zero();
    let mut worst = (Q::zero(), qv::zeros(f.dim()));
    for p in hs.refine(&f.cell_cuts(cell)).pieces() {
        let (d, g) = (0..f.branch_count())
            .map(|k| {
                let g = f.value_at(cell, k, &p.lo);
                (qv::l1(&qv::sub(p.value, g)), g)
            })
            .min_by(|a, b| a.0.cmp(&b.0))
            .expect("at least one branch");
        if d > worst.0 {
            worst = (d.clone(), qv::sub(g, p.value));
        }
        total += d * p.len();
    }
    (total * &space.cell(cell).mass, worst.1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SplitLayout {
    /// Sub-intervals in branch order, left to right.
    #[default]
    Proportional,
    /// Half of each weight in branch order, then the other half in reverse order; keeps the
    /// integral of any affine function of the inner coordinate.
    Mirrored,
}

/// Splits `[lo, hi)` into sub-intervals with lengths proportional to `weights`, returning
/// `(length, index)` segments for the positive weights only.
pub fn split_interval(lo: &Q, hi: &Q, weights: &[Q], layout: SplitLayout) -> Vec<(Q, usize)> {
    let len = hi - lo;
    let pos: Vec<(usize, &Q)> = weights.iter().enumerate().filter(|(_, w)| w.is_positive()).collect();
    match layout {
        SplitLayout::Proportional => pos.iter().map(|(k, w)| (*w * &len, *k)).collect(),
        SplitLayout::Mirrored => {
            let half_len = &len * half();
            let mut out: Vec<(Q, usize)> = pos.iter().map(|(k, w)| (*w * &half_len, *k)).collect();
            let back: Vec<(Q, usize)> = out.iter().rev().cloned().collect();
            // the middle branch appears twice in a row; fuse it
            let (mid_len, mid_k) = back[0].clone();
            out.last_mut().expect("some weight is positive").0 += mid_len;
            debug_assert_eq!(out.last().unwrap().1, mid_k);
            out.extend(back.into_iter().skip(1));
            out
        }
    }
}

/// Expands per-piece segments into step data on `[0, 1]`.
fn steps_from_pieces(pieces: Vec<Vec<(Q, usize)>>) -> Steps<usize> {
    Steps::from_segments(pieces.into_iter().flatten()).expect("segments cover the cell").merged()
}

/// Pure selection with the same conditional expectation as `m` on every rich piece.
pub fn derandomize_selection(space: &MeasureSpace, f: &Correspondence, m: &MixedSelection) -> Result<Selection> {
    derandomize_with(space, f, m, SplitLayout::Proportional)
}

pub fn derandomize_with(
    space: &MeasureSpace,
    f: &Correspondence,
    m: &MixedSelection,
    layout: SplitLayout,
) -> Result<Selection> {
    crate::measure::check_shape(space, m.cells())?;
    m.check_weights(space, Some(f.branch_count()))?;
    let mut cells = Vec::with_capacity(space.len());
    for (i, c) in space.cells().iter().enumerate() {
        if c.kind.is_g_atom() {
            let pure = m.pure_on(i).ok_or_else(|| Error::AtomObstruction { cell: c.id.clone(), alpha: None })?;
            cells.push(pure);
            continue;
        }
        let OnCell::Inner(w) = m.cell(i) else { unreachable!("rich cells carry steps") };
        let pieces = w.refine(&f.cell_cuts(i)).pieces().map(|p| split_interval(&p.lo, &p.hi, p.value, layout)).collect();
        cells.push(OnCell::Inner(steps_from_pieces(pieces)));
    }
    Ok(Selection::from_parts(cells))
}

fn check_alpha(alpha: &Q) -> Result<()> {
    if alpha.is_negative() || *alpha > Q::one() {
        return Err(Error::InvalidAlpha(alpha.clone()));
    }
    Ok(())
}

fn branches_with_value(f: &Correspondence, cell: usize, x: &Q, target: &[Q]) -> Option<usize> {
    (0..f.branch_count()).find(|&k| f.value_at(cell, k, x) == target)
}

/// A selection `s0` with `E(s0|𝒢) = α·E(s1|𝒢) + (1−α)·E(s2|𝒢)`, or the g-atom obstructing it.
pub fn convexify_witness(
    space: &MeasureSpace,
    f: &Correspondence,
    s1: &Selection,
    s2: &Selection,
    alpha: &Q,
) -> Result<Selection> {
    check_alpha(alpha)?;
    let v1 = selection_value(space, f, s1)?;
    let v2 = selection_value(space, f, s2)?;
    let beta = Q::one() - alpha;
    let obstruct = |cell: usize| Error::AtomObstruction { cell: space.cell(cell).id.clone(), alpha: Some(alpha.clone()) };

    let mut cells: Vec<Option<OnCell<usize>>> = vec![None; space.len()];
    for (i, c) in space.cells().iter().enumerate() {
        let (OnCell::Inner(a), OnCell::Inner(b)) = (s1.cell(i), s2.cell(i)) else { continue };
        let mut cuts = f.cell_cuts(i);
        cuts.extend(a.cuts());
        cuts.extend(b.cuts());
        cuts.sort();
        cuts.dedup();
        let mut pieces = Vec::new();
        for (lo, hi) in intervals(&cuts) {
            let (k1, k2) = (*a.at(&lo), *b.at(&lo));
            if c.kind == CellKind::Rich {
                pieces.push(vec![(alpha * (&hi - &lo), k1), (&beta * (&hi - &lo), k2)]);
                continue;
            }
            let (g1, g2) = (f.value_at(i, k1, &lo), f.value_at(i, k2, &lo));
            let target = qv::add(&qv::scale(g1, alpha), &qv::scale(g2, &beta));
            let k = if target == g1 {
                k1
            } else if target == g2 {
                k2
            } else {
                branches_with_value(f, i, &lo, &target).ok_or_else(|| obstruct(i))?
            };
            pieces.push(vec![(&hi - &lo, k)]);
        }
        cells[i] = Some(OnCell::Inner(steps_from_pieces(pieces)));
    }

    for (bi, b) in space.blocks().iter().enumerate() {
        let points: Vec<usize> = b.cells.iter().copied().filter(|&c| space.cell(c).kind == CellKind::PointMass).collect();
        if points.is_empty() {
            continue;
        }
        let at = |v: &StepFunction, c: usize| v.cell_average(c);
        let mut pm_target = qv::zeros(f.dim());
        let mut total_target = qv::zeros(f.dim());
        for &c in &b.cells {
            let blend = qv::add(&qv::scale(&at(&v1, c), alpha), &qv::scale(&at(&v2, c), &beta));
            let w = &space.cell(c).mass;
            qv::add_scaled(&mut total_target, &blend, w);
            if space.cell(c).kind == CellKind::PointMass {
                qv::add_scaled(&mut pm_target, &blend, w);
            }
        }
        let pm_sum = |choice: &[usize]| {
            let mut acc = qv::zeros(f.dim());
            for (&c, &k) in points.iter().zip(choice) {
                qv::add_scaled(&mut acc, f.value_at(c, k, &Q::zero()), &space.cell(c).mass);
            }
            acc
        };
        let pick = |s: &Selection| -> Vec<usize> {
            points.iter().map(|&c| match s.cell(c) { OnCell::Point(k) => *k, _ => unreachable!() }).collect()
        };
        let (c1, c2) = (pick(s1), pick(s2));
        let direct = [&c1, &c2].into_iter().find(|ch| pm_sum(ch) == pm_target).cloned();
        let direct = direct.or_else(|| product(points.len(), f.branch_count()).find(|ch| pm_sum(ch) == pm_target));
        if let Some(choice) = direct {
            for (&c, k) in points.iter().zip(choice) {
                cells[c] = Some(OnCell::Point(k));
            }
            continue;
        }
        // the rich cells of the block have to absorb the difference
        let pieces = rich_pieces(space, f, bi);
        let unscaled: Vec<Vec<Vec<Q>>> = pieces
            .iter()
            .map(|p| qv_scale_all(piece_points(space, f, bi, p), &b.mass))
            .collect();
        let mut found = None;
        for choice in product(points.len(), f.branch_count()) {
            let residual = qv::sub(&total_target, &pm_sum(&choice));
            let poly = MinkowskiSum { translate: qv::zeros(f.dim()), summands: unscaled.clone() };
            let near = poly.nearest_l1(&residual);
            if near.distance.is_zero() {
                found = Some((choice, near.weights));
                break;
            }
        }
        let Some((choice, weights)) = found else { return Err(obstruct(points[0])) };
        for (&c, k) in points.iter().zip(choice) {
            cells[c] = Some(OnCell::Point(k));
        }
        let mut per_cell: Vec<(usize, Vec<(Q, usize)>)> = Vec::new();
        for ((c, lo, hi), w) in pieces.iter().zip(&weights) {
            let segs = if w.is_empty() {
                vec![(hi - lo, 0)]
            } else {
                split_interval(lo, hi, w, SplitLayout::Proportional)
            };
            match per_cell.last_mut() {
                Some((pc, v)) if pc == c => v.extend(segs),
                _ => per_cell.push((*c, segs)),
            }
        }
        for (c, segs) in per_cell {
            cells[c] = Some(OnCell::Inner(steps_from_pieces(vec![segs])));
        }
    }
    Ok(Selection::from_parts(cells.into_iter().map(|c| c.expect("every cell assigned")).collect()))
}

fn qv_scale_all(pts: Vec<Vec<Q>>, s: &Q) -> Vec<Vec<Q>> {
    pts.iter().map(|p| qv::scale(p, s)).collect()
}

/// All index tuples in `0..k` of length `n`, lexicographically, capped at [`MAX_TRANSLATES`].
fn product(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut cur = Some(vec![0; n]);
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let mut next = out.clone();
        let mut i = n;
        loop {
            if i == 0 {
                cur = None;
                break;
            }
            i -= 1;
            next[i] += 1;
            if next[i] < k {
                cur = Some(next);
                break;
            }
            next[i] = 0;
        }
        Some(out)
    })
    .take(MAX_TRANSLATES)
}

/// φ_m: branch 1 on the even level-`m` dyadic pieces of `cell`, branch 0 elsewhere.
pub fn rademacher_selection(space: &MeasureSpace, cell: usize, m: u32) -> Selection {
    let mut sel = Selection::constant(space, 0);
    let n = 1u64 << m;
    let width = Q::new(1.into(), n.into());
    let steps = Steps::from_segments((0..n).map(|j| (width.clone(), usize::from(j % 2 == 0)))).expect("dyadic pieces");
    let mut cells = sel.cells().to_vec();
    cells[cell] = OnCell::Inner(steps);
    sel = Selection::from_parts(cells);
    sel
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestIdentity {
    pub level: u32,
    pub lhs: Rat,
    pub rhs: Rat,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RademacherReport {
    pub m: u32,
    pub selection: Selection,
    pub integral: Q,
    pub expected_integral: Q,
    pub identities: Vec<TestIdentity>,
}

fn dyadic_level(values: &[Q]) -> Result<u32> {
    if values.is_empty() || !values.len().is_power_of_two() {
        return Err(Error::InvalidBreakpoints(format!(
            "a dyadic test function needs 2^k values, got {}",
            values.len()
        )));
    }
    Ok(values.len().trailing_zeros())
}

fn saturated_cell(space: &MeasureSpace, cell: usize) -> Result<()> {
    let c = space.cell(cell);
    if c.kind != CellKind::Saturated {
        return Err(Error::NotSaturated(c.id.clone()));
    }
    Ok(())
}

/// Builds φ_m on a saturated cell and checks `∫ψφ_m = ½∫ψ·1_D` for each dyadic test function.
pub fn rademacher_escape(space: &MeasureSpace, cell: usize, m: u32, tests: &[Vec<Q>]) -> Result<RademacherReport> {
    saturated_cell(space, cell)?;
    if m == 0 {
        return Err(Error::TestLevelTooFine { level: 0, m });
    }
    let f = Correspondence::zero_one_on(space, cell);
    let selection = rademacher_selection(space, cell, m);
    let value = selection_value(space, &f, &selection)?;
    let mass = &space.cell(cell).mass;
    let integral = crate::measure::integrate(space, &value)?.remove(0);
    let expected_integral = half() * mass;
    let OnCell::Inner(phi) = value.cell(cell) else { unreachable!() };
    let mut identities = Vec::with_capacity(tests.len());
    for psi in tests {
        let level = dyadic_level(psi)?;
        if level >= m {
            return Err(Error::TestLevelTooFine { level, m });
        }
        let width = Q::new(1.into(), (1u64 << level).into());
        let psi_steps = Steps::from_segments(psi.iter().map(|v| (width.clone(), v.clone()))).expect("dyadic pieces");
        let lhs: Q = phi.zip(&psi_steps, |a, b| &a[0] * b).pieces().map(|p| p.value * p.len()).sum::<Q>() * mass;
        let rhs = half() * mass * psi.iter().sum::<Q>() * &width;
        identities.push(TestIdentity { level, holds: lhs == rhs, lhs: Rat(lhs), rhs: Rat(rhs) });
    }
    Ok(RademacherReport { m, selection, integral, expected_integral, identities })
}

/// L1 distance from `½·E(1_D|𝒢)` to the selections of `{0,1}` on a saturated cell `D`.
pub fn limit_escape_certificate(space: &MeasureSpace, cell: usize) -> Result<Q> {
    saturated_cell(space, cell)?;
    let f = Correspondence::zero_one_on(space, cell);
    let limit = half_indicator_limit(space, cell)?;
    let report = membership(space, &f, &limit, &Q::zero())?;
    Ok(report.blocks.iter().map(|c| c.distance.0.clone()).sum())
}

fn half_indicator_limit(space: &MeasureSpace, cell: usize) -> Result<StepFunction> {
    let ind = StepFunction::on_cell(space, cell, vec![Q::one()]);
    Ok(conditional_expectation(space, &ind)?.scale(&half()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UhcReport {
    pub cell: String,
    pub kind: &'static str,
    pub max_m: u32,
    /// Every `E(φ_m|𝒢)` agrees with the limit: exactly on a rich cell, against every coarser
    /// dyadic test function on a saturated cell.
    pub sequence_consistent: bool,
    pub limit_in_h0: bool,
    pub defect: Rat,
    /// A selection of `{0,1}` whose conditional expectation is the limit, when one exists.
    pub witness_matches: Option<bool>,
}

/// Lengths covered by branch 1 in each level-`k` dyadic interval.
fn dyadic_masses(steps: &Steps<usize>, k: u32) -> Vec<Q> {
    let n = 1usize << k;
    let width = Q::new(1.into(), (n as u64).into());
    let cuts: Vec<Q> = (1..n).map(|j| &width * Q::from_integer((j as u64).into())).collect();
    let mut out = vec![Q::zero(); n];
    for p in steps.refine(&cuts).pieces() {
        if *p.value == 1 {
            let bucket = (&p.lo / &width).floor().to_integer();
            let idx: usize = bucket.try_into().expect("bucket index fits");
            out[idx] += p.len();
        }
    }
    out
}

/// Audits the family `F(t, 1/m) = {φ_m(t)}`, `F(t, 0) = {0, 1}·1_D` at `y = 0`.
pub fn uhc_audit(space: &MeasureSpace, cell: usize, max_m: u32) -> Result<UhcReport> {
    let c = space.cell(cell);
    if c.kind == CellKind::PointMass {
        return Err(Error::NoInnerCoordinate(c.id.clone()));
    }
    let f0 = Correspondence::zero_one_on(space, cell);
    let limit = half_indicator_limit(space, cell)?;
    let mut consistent = true;
    for m in 1..=max_m {
        let phi = rademacher_selection(space, cell, m);
        if c.kind == CellKind::Rich {
            let h = conditional_expectation(space, &selection_value(space, &f0, &phi)?)?;
            consistent &= h.same_as(&limit);
        } else {
            let OnCell::Inner(steps) = phi.cell(cell) else { unreachable!() };
            for k in 0..m {
                let width = Q::new(1.into(), (1u64 << k).into());
                consistent &= dyadic_masses(steps, k).iter().all(|x| *x == &width * half());
            }
        }
    }
    let member = membership(space, &f0, &limit, &Q::zero())?;
    let defect: Q = member.blocks.iter().map(|b| b.distance.0.clone()).sum();
    let witness_matches = if member.member {
        let w = MixedSelection::from_parts(
            space
                .cells()
                .iter()
                .enumerate()
                .map(|(i, cc)| {
                    let wts = if i == cell { vec![half(), half()] } else { vec![Q::one(), Q::zero()] };
                    if cc.kind.has_inner() {
                        OnCell::Inner(Steps::constant(wts))
                    } else {
                        OnCell::Point(wts)
                    }
                })
                .collect(),
        );
        let sel = derandomize_selection(space, &f0, &w)?;
        let e = conditional_expectation(space, &selection_value(space, &f0, &sel)?)?;
        Some(e.same_as(&limit))
    } else {
        None
    };
    Ok(UhcReport {
        cell: c.id.clone(),
        kind: c.kind.label(),
        max_m,
        sequence_consistent: consistent,
        limit_in_h0: member.member,
        defect: Rat(defect),
        witness_matches,
    })
}
