//! The `m × m` cyclic matching-pennies game under the triangular prior, in closed form.
//!
//! Types are `(l_1, l_2)` uniform on `{0 ≤ l_1 ≤ l_2 ≤ 1}`, so `ρ = 2·[l_1 ≤ l_2]` against
//! Lebesgue measure, the marginals are `τ_1 = 2(1 − l_1) dl_1` and `τ_2 = 2 l_2 dl_2`, and the
//! density against `τ_1 ⊗ τ_2` is `ρ' = 1 / (2(1 − l_1) l_2)` on the triangle.
//!
//! Integrating `ρ'` against a marginal cancels the marginal density:
//! `∫_E ρ'(l_1, l_2) τ_1(dl_1) = ∫_E ρ(l_1, l_2) / (2 l_2) dl_1 = η(E ∩ [0, l_2]) / l_2`,
//! and symmetrically `η(E ∩ [l_1, 1]) / (1 − l_1)` for player 1. Interim payoffs are therefore
//! ratios of piecewise-linear functions, and after multiplying by the marginal density every
//! ex-ante quantity is the integral of a piecewise-linear function, which is computed exactly.
//!
//! The independent-types variant uses `v_i = u_i·q` with `λ = λ_1 ⊗ λ_2`; its density-weighted
//! payoffs coincide with the first variant, so every number below is shared.

use num::{One, Signed, Zero};
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fixtures::{cyclic_payoff, rng};
use crate::rational::{abs, q, to_f64, Rat, Q};
use crate::steps::Steps;

pub const MAX_BUDGET: usize = 8;
pub const MAX_GRID: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    #[default]
    TypeIrrelevant,
    IndependentTypes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PenniesGame {
    pub m: usize,
    pub variant: Variant,
}

impl PenniesGame {
    pub fn new(m: usize, variant: Variant) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidGame(format!("pennies needs m ≥ 2, got {m}")));
        }
        Ok(PenniesGame { m, variant })
    }

    /// `u_1(a_x, a_y)`; player 2 receives the negative.
    pub fn payoff(&self, x: usize, y: usize) -> i64 {
        cyclic_payoff(self.m, x, y)
    }
}

/// The uniform distribution on the triangle `0 ≤ l_1 ≤ l_2 ≤ 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrianglePrior;

impl TrianglePrior {
    /// `ρ(l_1, l_2)` against Lebesgue measure on the square.
    pub fn density(&self, l1: &Q, l2: &Q) -> Q {
        if l1 <= l2 { q(2, 1) } else { Q::zero() }
    }

    pub fn marginal_1(&self, l1: &Q) -> Q {
        q(2, 1) * (Q::one() - l1)
    }

    pub fn marginal_2(&self, l2: &Q) -> Q {
        q(2, 1) * l2
    }

    /// `dη / dτ_1` on `(0, 1)`.
    pub fn beta_1(&self, l1: &Q) -> Q {
        if l1.is_positive() && *l1 < Q::one() { (q(2, 1) * (Q::one() - l1)).recip() } else { Q::zero() }
    }

    /// `dη / dτ_2` on `(0, 1)`.
    pub fn beta_2(&self, l2: &Q) -> Q {
        if l2.is_positive() && *l2 < Q::one() { (q(2, 1) * l2).recip() } else { Q::zero() }
    }

    /// `ρ' = dτ / d(τ_1 ⊗ τ_2)`.
    pub fn conditional(&self, l1: &Q, l2: &Q) -> Q {
        self.density(l1, l2) * self.beta_1(l1) * self.beta_2(l2)
    }
}

/// The player whose interim weights are computed. `Two` weighs player 1's sets at `l_2`;
/// `One` weighs player 2's sets at `l_1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    One,
    Two,
}

/// A behavioral strategy on `[0, 1]`: action weights per piece.
pub type LabStrategy = Steps<Vec<Q>>;

pub fn pure_strategy(m: usize, actions: &Steps<usize>) -> LabStrategy {
    actions.map(|&a| (0..m).map(|x| if x == a { Q::one() } else { Q::zero() }).collect())
}

pub fn constant_strategy(weights: Vec<Q>) -> LabStrategy {
    Steps::constant(weights)
}

/// Builds the pure strategy whose action `a_j` is played on the union `sets[j]` of
/// intervals; the unions must partition `[0, 1]` up to endpoints.
pub fn partition(sets: &[Vec<(Q, Q)>]) -> Result<Steps<usize>> {
    let mut all: Vec<(Q, Q, usize)> = Vec::new();
    for (j, s) in sets.iter().enumerate() {
        for (lo, hi) in s {
            if lo.is_negative() || *hi > Q::one() || lo >= hi {
                return Err(Error::InvalidPartition(format!("interval [{lo}, {hi}] of action {j} is empty or outside [0, 1]")));
            }
            all.push((lo.clone(), hi.clone(), j));
        }
    }
    all.sort();
    let mut pos = Q::zero();
    for (lo, hi, j) in &all {
        if *lo != pos {
            let what = if *lo < pos { "overlap" } else { "gap" };
            return Err(Error::InvalidPartition(format!("{what} at {pos} before an interval of action {j} starting at {lo}")));
        }
        pos = hi.clone();
    }
    if !pos.is_one() {
        return Err(Error::InvalidPartition(format!("intervals stop at {pos}")));
    }
    Ok(Steps::new(all.into_iter().map(|(_, hi, j)| (hi, j)).collect())?.merged())
}

/// The intervals on which a pure strategy plays each action.
pub fn action_sets(m: usize, f: &Steps<usize>) -> Vec<Vec<(Q, Q)>> {
    let mut out = vec![Vec::new(); m];
    for p in f.pieces() {
        out[*p.value].push((p.lo, p.hi));
    }
    out
}

/// `∫_E ρ' dτ_1` at `l_2` (side `Two`) or `∫_E ρ' dτ_2` at `l_1` (side `One`).
pub fn interim_weight(set: &[(Q, Q)], point: &Q, side: Side) -> Result<Q> {
    if !point.is_positive() || *point >= Q::one() {
        return Err(Error::BoundaryPoint(point.clone()));
    }
    let clip = |lo: &Q, hi: &Q| -> Q {
        let (a, b) = match side {
            Side::Two => (lo.clone(), hi.clone().min(point.clone())),
            Side::One => (lo.clone().max(point.clone()), hi.clone()),
        };
        if b > a { b - a } else { Q::zero() }
    };
    let len: Q = set.iter().map(|(lo, hi)| clip(lo, hi)).sum();
    Ok(match side {
        Side::Two => len / point,
        Side::One => len / (Q::one() - point),
    })
}

/// `Φ_k(x) = ∫_0^x f(s)[k] ds` as exact piecewise-linear data.
struct Cumulative {
    /// `(lo, hi, Φ(lo), slope)`.
    pieces: Vec<(Q, Q, Vec<Q>, Vec<Q>)>,
    total: Vec<Q>,
}

impl Cumulative {
    fn new(f: &LabStrategy) -> Self {
        let m = f.values().next().map_or(0, Vec::len);
        let mut acc = vec![Q::zero(); m];
        let mut pieces = Vec::with_capacity(f.len());
        for p in f.pieces() {
            let start = acc.clone();
            for (a, w) in acc.iter_mut().zip(p.value) {
                *a += w * p.len();
            }
            pieces.push((p.lo, p.hi, start, p.value.clone()));
        }
        Cumulative { pieces, total: acc }
    }

    /// `(a, b)` with `Φ_k(x) = a + b·x` on the piece containing the interval around `mid`.
    fn lines(&self, mid: &Q) -> Vec<(Q, Q)> {
        let idx = self.pieces.partition_point(|p| p.1 <= *mid).min(self.pieces.len() - 1);
        let (lo, _, start, slope) = &self.pieces[idx];
        start.iter().zip(slope).map(|(s, w)| (s - w * lo, w.clone())).collect()
    }

    /// Lines of `∫_0^x` (side `Two`) or `∫_x^1` (side `One`).
    fn side_lines(&self, mid: &Q, side: Side) -> Vec<(Q, Q)> {
        let l = self.lines(mid);
        match side {
            Side::Two => l,
            Side::One => l.into_iter().zip(&self.total).map(|((a, b), t)| (t - a, -b)).collect(),
        }
    }

    fn at(&self, x: &Q, side: Side) -> Vec<Q> {
        self.side_lines(x, side).into_iter().map(|(a, b)| a + b * x).collect()
    }
}

fn combine(lines: &[(Q, Q)], coef: impl Fn(usize) -> i64) -> (Q, Q) {
    let mut a = Q::zero();
    let mut b = Q::zero();
    for (k, (la, lb)) in lines.iter().enumerate() {
        let c = coef(k);
        if c != 0 {
            a += la * Q::from_integer(c.into());
            b += lb * Q::from_integer(c.into());
        }
    }
    (a, b)
}

/// `∫_lo^hi max_k (a_k + b_k x) dx`, exactly.
fn integrate_max(lines: &[(Q, Q)], lo: &Q, hi: &Q) -> Q {
    let mut cuts = vec![lo.clone(), hi.clone()];
    for (i, (ai, bi)) in lines.iter().enumerate() {
        for (aj, bj) in &lines[i + 1..] {
            if bi != bj {
                let x = (aj - ai) / (bi - bj);
                if x > *lo && x < *hi {
                    cuts.push(x);
                }
            }
        }
    }
    cuts.sort();
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let mid = (&w[0] + &w[1]) / q(2, 1);
            let best = lines.iter().map(|(a, b)| a + b * &mid).max().expect("at least one action");
            (&w[1] - &w[0]) * best
        })
        .sum()
}

fn integrate_line(line: &(Q, Q), lo: &Q, hi: &Q) -> Q {
    (hi - lo) * (&line.0 + &line.1 * (lo + hi) / q(2, 1))
}

/// Ex-ante best-response value and played value of the player on `side` (as the
/// receiver of the weights), against the opponent strategy `opp`.
fn side_values(game: &PenniesGame, own: Option<&LabStrategy>, opp: &LabStrategy, side: Side) -> (Q, Q) {
    let m = game.m;
    let cum = Cumulative::new(opp);
    let mut cuts = opp.cuts();
    if let Some(o) = own {
        cuts.extend(o.cuts());
    }
    cuts.push(Q::zero());
    cuts.push(Q::one());
    cuts.sort();
    cuts.dedup();
    let two = q(2, 1);
    let mut best = Q::zero();
    let mut played = Q::zero();
    for w in cuts.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let mid = (lo + hi) / &two;
        let lines = cum.side_lines(&mid, side);
        // payoff line of each own action: player 2 gets −u_1(a_k, a_y), player 1 gets u_1(a_x, a_k)
        let payoff: Vec<(Q, Q)> = (0..m)
            .map(|own_action| match side {
                Side::Two => combine(&lines, |k| -game.payoff(k, own_action)),
                Side::One => combine(&lines, |k| game.payoff(own_action, k)),
            })
            .collect();
        best += &two * integrate_max(&payoff, lo, hi);
        if let Some(o) = own {
            let weights = o.at(&mid);
            for (wx, line) in weights.iter().zip(&payoff) {
                if !wx.is_zero() {
                    played += &two * wx * integrate_line(line, lo, hi);
                }
            }
        }
    }
    (best, played)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProfileValues {
    pub payoff_1: Rat,
    pub payoff_2: Rat,
    pub gain_1: Rat,
    pub gain_2: Rat,
}

/// Ex-ante payoffs and best-deviation gains of a (behavioral) profile.
pub fn profile_values(game: &PenniesGame, f1: &LabStrategy, f2: &LabStrategy) -> ProfileValues {
    let (best1, u1) = side_values(game, Some(f1), f2, Side::One);
    let (best2, u2) = side_values(game, Some(f2), f1, Side::Two);
    ProfileValues { gain_1: Rat(best1 - &u1), gain_2: Rat(best2 - &u2), payoff_1: Rat(u1), payoff_2: Rat(u2) }
}

/// Best-deviation gains `(gain_1, gain_2)` of a profile.
pub fn pure_profile_gain(game: &PenniesGame, f1: &Steps<usize>, f2: &Steps<usize>) -> (Q, Q) {
    let v = profile_values(game, &pure_strategy(game.m, f1), &pure_strategy(game.m, f2));
    (v.gain_1.0, v.gain_2.0)
}

/// Interim payoff of each own action at `point` against `opp`.
pub fn interim_payoffs(game: &PenniesGame, opp: &LabStrategy, point: &Q, side: Side) -> Result<Vec<Q>> {
    let w = interim_weights(opp, point, side)?;
    Ok((0..game.m)
        .map(|own| {
            (0..game.m)
                .map(|k| {
                    let u = match side {
                        Side::Two => -game.payoff(k, own),
                        Side::One => game.payoff(own, k),
                    };
                    &w[k] * Q::from_integer(u.into())
                })
                .sum()
        })
        .collect())
}

/// `∫ f[k] ρ' dτ` at `point` for every action `k` of the opponent strategy `f`.
pub fn interim_weights(f: &LabStrategy, point: &Q, side: Side) -> Result<Vec<Q>> {
    if !point.is_positive() || *point >= Q::one() {
        return Err(Error::BoundaryPoint(point.clone()));
    }
    let raw = Cumulative::new(f).at(point, side);
    let denom = match side {
        Side::Two => point.clone(),
        Side::One => Q::one() - point,
    };
    Ok(raw.into_iter().map(|x| x / &denom).collect())
}

/// The C_j construction: against `f1`, player 2 plays `a_{j+1}` where `j` is the first index
/// whose weight exceeds the next one, otherwise `a_1`; player 1 symmetrically plays `a_j`
/// against `f2`. Each deviation guarantees its player a nonnegative interim payoff.
pub fn cyclic_deviations(game: &PenniesGame, f1: &LabStrategy, f2: &LabStrategy) -> (Steps<usize>, Steps<usize>) {
    let m = game.m;
    let build = |opp: &LabStrategy, side: Side| -> Steps<usize> {
        let cum = Cumulative::new(opp);
        let mut cuts = opp.cuts();
        cuts.push(Q::zero());
        cuts.push(Q::one());
        cuts.sort();
        cuts.dedup();
        let mut segs: Vec<(Q, usize)> = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (&w[0], &w[1]);
            let lines = cum.side_lines(&((lo + hi) / q(2, 1)), side);
            let diffs: Vec<(Q, Q)> =
                (0..m).map(|j| (&lines[j].0 - &lines[(j + 1) % m].0, &lines[j].1 - &lines[(j + 1) % m].1)).collect();
            let mut sub = vec![lo.clone(), hi.clone()];
            for (a, b) in &diffs {
                if !b.is_zero() {
                    let x = -a / b;
                    if x > *lo && x < *hi {
                        sub.push(x);
                    }
                }
            }
            sub.sort();
            sub.dedup();
            for s in sub.windows(2) {
                let mid = (&s[0] + &s[1]) / q(2, 1);
                let first = diffs.iter().position(|(a, b)| (a + b * &mid).is_positive());
                let action = match (first, side) {
                    (Some(j), Side::Two) => (j + 1) % m,
                    (Some(j), Side::One) => j,
                    (None, _) => 0,
                };
                segs.push((s[1].clone(), action));
            }
        }
        Steps::new(segs).expect("sub-pieces are increasing").merged()
    };
    (build(f2, Side::One), build(f1, Side::Two))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BalanceReport {
    pub side: Side,
    /// `∫ max_j |w_j − 1/m| dτ`.
    pub defect: Rat,
    /// `∫ |w_j − 1/m| dτ` per action; zero exactly when `η(E_j ∩ [0, x]) = x/m` a.e.
    pub per_action: Vec<Rat>,
}

/// How far the interim weights of a partition are from the uniform `1/m`.
pub fn balance_defect(m: usize, f: &LabStrategy, side: Side) -> BalanceReport {
    let cum = Cumulative::new(f);
    let mut cuts = f.cuts();
    cuts.push(Q::zero());
    cuts.push(Q::one());
    cuts.sort();
    cuts.dedup();
    let inv_m = q(1, m as i64);
    let two = q(2, 1);
    let mut defect = Q::zero();
    let mut per_action = vec![Q::zero(); m];
    for w in cuts.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let lines = cum.side_lines(&((lo + hi) / &two), side);
        // τ-weighted: 2·|Φ_j(x) − x/m| (side Two) or 2·|Ψ_j(x) − (1 − x)/m| (side One)
        let target = match side {
            Side::Two => (Q::zero(), inv_m.clone()),
            Side::One => (inv_m.clone(), -inv_m.clone()),
        };
        let dev: Vec<(Q, Q)> = lines.iter().map(|(a, b)| (a - &target.0, b - &target.1)).collect();
        let both: Vec<(Q, Q)> = dev.iter().flat_map(|(a, b)| [(a.clone(), b.clone()), (-a, -b)]).collect();
        defect += &two * integrate_max(&both, lo, hi);
        for (j, (a, b)) in dev.iter().enumerate() {
            per_action[j] += &two * integrate_max(&[(a.clone(), b.clone()), (-a, -b)], lo, hi);
        }
    }
    BalanceReport { side, defect: Rat(defect), per_action: per_action.into_iter().map(Rat).collect() }
}

/// Pure strategies with at most `budget` breakpoints on the grid `1/grid`, adjacent pieces
/// playing different actions.
pub fn canonical_strategies(m: usize, budget: usize, grid: usize) -> Vec<Vec<usize>> {
    fn cut_sets(grid: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for c in start..grid {
            cur.push(c);
            cut_sets(grid, k, c + 1, cur, out);
            cur.pop();
        }
    }
    fn labels(m: usize, pieces: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == pieces {
            out.push(cur.clone());
            return;
        }
        for a in 0..m {
            if cur.last() != Some(&a) {
                cur.push(a);
                labels(m, pieces, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    for k in 0..=budget.min(grid - 1) {
        let mut cuts = Vec::new();
        cut_sets(grid, k, 1, &mut Vec::new(), &mut cuts);
        let mut labs = Vec::new();
        labels(m, k + 1, &mut Vec::new(), &mut labs);
        for c in &cuts {
            for l in &labs {
                // expand to one action per grid cell
                let mut cells = Vec::with_capacity(grid);
                let mut piece = 0;
                for cell in 0..grid {
                    if piece < c.len() && cell >= c[piece] {
                        piece += 1;
                    }
                    cells.push(l[piece]);
                }
                out.push(cells);
            }
        }
    }
    out
}

/// The pure strategy playing `cells[c]` on the grid cell `[c/n, (c+1)/n)`.
pub fn grid_strategy(cells: &[usize]) -> Steps<usize> {
    let grid = cells.len() as i64;
    Steps::new(cells.iter().enumerate().map(|(c, &a)| (q(c as i64 + 1, grid), a)).collect())
        .expect("grid cells are increasing")
        .merged()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchReport {
    pub m: usize,
    pub variant: Variant,
    pub budget: usize,
    pub grid: usize,
    pub epsilon: f64,
    pub candidates_per_player: usize,
    pub exhaustive: bool,
    pub profiles: usize,
    /// `min over profiles of max(gain_1, gain_2)`.
    pub min_max_gain: Rat,
    pub argmin: (Vec<usize>, Vec<usize>),
    pub uniform: ProfileValues,
    pub pass: bool,
}

/// Largest candidate list per player before sampling kicks in, scaled by the grid size.
fn candidate_cap(grid: usize) -> usize {
    let work = 2.0e8 / (grid * grid) as f64;
    (work.sqrt() as usize).max(50)
}

/// Searches pure profiles with at most `budget` breakpoints on the `grid` for one with
/// every deviation gain at most `epsilon`. `pass` means none was found.
pub fn no_pure_equilibrium_search(
    game: &PenniesGame,
    budget: usize,
    grid: usize,
    epsilon: f64,
    exec: Exec,
) -> Result<SearchReport> {
    if budget > MAX_BUDGET || !(1..=MAX_GRID).contains(&grid) {
        return Err(Error::BudgetExceeded(format!(
            "budget {budget} (max {MAX_BUDGET}) and grid {grid} (1..={MAX_GRID})"
        )));
    }
    let m = game.m;
    let mut cands = canonical_strategies(m, budget, grid);
    let cap = candidate_cap(grid);
    let exhaustive = cands.len() <= cap;
    if !exhaustive {
        let mut r = rng(0);
        cands.shuffle(&mut r);
        cands.truncate(cap);
        cands.sort();
    }
    let steps: Vec<Steps<usize>> = cands.iter().map(|c| grid_strategy(c)).collect();
    let lab: Vec<LabStrategy> = steps.iter().map(|s| pure_strategy(m, s)).collect();
    // best-response values depend on the opponent only
    let br1: Vec<Q> = exec.map(&lab, |f2| side_values(game, None, f2, Side::One).0);
    let br2: Vec<Q> = exec.map(&lab, |f1| side_values(game, None, f1, Side::Two).0);
    // U_1 on grid cells: τ(cell_i × cell_j)·grid² = 2 above the diagonal, 1 on it
    let payoff: Vec<Vec<i64>> = (0..m).map(|x| (0..m).map(|y| game.payoff(x, y)).collect()).collect();
    let scale = Q::from_integer(((grid * grid) as i64).into());
    let rows: Vec<(Q, usize)> = exec.map_range(cands.len(), |a| {
        let f1 = &cands[a];
        let mut best: Option<(Q, usize)> = None;
        for (b, f2) in cands.iter().enumerate() {
            let mut u: i64 = 0;
            for (i, &x) in f1.iter().enumerate() {
                let row = &payoff[x];
                u += row[f2[i]];
                for &y in &f2[i + 1..] {
                    u += 2 * row[y];
                }
            }
            let u1 = Q::from_integer(u.into()) / &scale;
            let g1 = &br1[b] - &u1;
            let g2 = &br2[a] + &u1;
            let worst = if g1 > g2 { g1 } else { g2 };
            if best.as_ref().is_none_or(|(v, _)| worst < *v) {
                best = Some((worst, b));
            }
        }
        best.expect("at least one candidate")
    });
    let (a, (min, b)) = rows
        .into_iter()
        .enumerate()
        .min_by(|x, y| x.1 .0.cmp(&y.1 .0))
        .expect("at least one candidate");
    let uniform_strategy = constant_strategy(vec![q(1, m as i64); m]);
    let uniform = profile_values(game, &uniform_strategy, &uniform_strategy);
    let pass = to_f64(&min) > epsilon;
    Ok(SearchReport {
        m,
        variant: game.variant,
        budget,
        grid,
        epsilon,
        candidates_per_player: cands.len(),
        exhaustive,
        profiles: cands.len() * cands.len(),
        min_max_gain: Rat(min),
        argmin: (cands[a].clone(), cands[b].clone()),
        uniform,
        pass,
    })
}

/// CSV of the interim weights of `f` at `samples` interior points, header `x,w_1,…,w_m`.
pub fn weights_csv(f: &LabStrategy, side: Side, samples: usize) -> String {
    let m = f.values().next().map_or(0, Vec::len);
    let axis = match side {
        Side::Two => "l2",
        Side::One => "l1",
    };
    let mut out = String::from(axis);
    for j in 1..=m {
        out.push_str(&format!(",w_{j}"));
    }
    out.push('\n');
    for s in 0..samples {
        let x = q(2 * s as i64 + 1, 2 * samples as i64);
        let w = interim_weights(f, &x, side).expect("sample points are interior");
        out.push_str(&format!("{}", to_f64(&x)));
        for v in w {
            out.push_str(&format!(",{}", to_f64(&v)));
        }
        out.push('\n');
    }
    out
}

/// `|a − b|` summed, a convenience for comparing weight vectors.
pub fn l1_gap(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| abs(&(x - y))).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    fn game(m: usize) -> PenniesGame {
        PenniesGame::new(m, Variant::TypeIrrelevant).unwrap()
    }

    fn halves() -> Steps<usize> {
        Steps::new(vec![(q(1, 2), 0), (qi(1), 1)]).unwrap()
    }

    #[test]
    fn weights() {
        let full = vec![(qi(0), qi(1))];
        assert_eq!(interim_weight(&full, &q(1, 3), Side::Two).unwrap(), qi(1));
        assert_eq!(interim_weight(&[(qi(0), q(1, 2))], &q(3, 4), Side::Two).unwrap(), q(2, 3));
        assert_eq!(interim_weight(&[(qi(0), q(1, 2))], &q(1, 4), Side::Two).unwrap(), qi(1));
        assert_eq!(interim_weight(&[(qi(0), q(1, 2))], &q(1, 4), Side::One).unwrap(), q(1, 3));
        assert!(matches!(interim_weight(&full, &qi(0), Side::Two), Err(Error::BoundaryPoint(_))));
        assert!(matches!(interim_weight(&full, &qi(1), Side::One), Err(Error::BoundaryPoint(_))));
    }

    #[test]
    fn partitions() {
        let p = partition(&[vec![(qi(0), q(1, 2))], vec![(q(1, 2), qi(1))]]).unwrap();
        assert_eq!(p, halves());
        assert!(partition(&[vec![(qi(0), q(1, 2))], vec![(q(1, 3), qi(1))]]).is_err());
        assert!(partition(&[vec![(qi(0), q(1, 2))], vec![(q(2, 3), qi(1))]]).is_err());
        assert_eq!(action_sets(2, &p)[1], vec![(q(1, 2), qi(1))]);
    }

    #[test]
    fn balance() {
        let r = balance_defect(2, &pure_strategy(2, &halves()), Side::Two);
        assert_eq!(r.defect.0, q(1, 4));
        let one = balance_defect(1, &constant_strategy(vec![qi(1)]), Side::Two);
        assert_eq!(one.defect.0, qi(0));
        let uniform = balance_defect(3, &constant_strategy(vec![q(1, 3); 3]), Side::One);
        assert_eq!(uniform.defect.0, qi(0));
    }

    #[test]
    fn gains() {
        let g = game(2);
        let all_a1 = Steps::constant(0);
        assert_eq!(pure_profile_gain(&g, &all_a1, &all_a1).1, qi(2));
        let u = constant_strategy(vec![q(1, 2); 2]);
        let v = profile_values(&g, &u, &u);
        assert_eq!((v.gain_1.0, v.gain_2.0, v.payoff_1.0), (qi(0), qi(0), qi(0)));
        let v = profile_values(&g, &pure_strategy(2, &halves()), &pure_strategy(2, &all_a1));
        assert_eq!(v.payoff_1.0, -v.payoff_2.0);
    }

    #[test]
    fn cyclic_deviation_is_safe() {
        let g = game(3);
        let f1 = pure_strategy(3, &Steps::new(vec![(q(1, 4), 2), (q(5, 8), 0), (qi(1), 1)]).unwrap());
        let f2 = pure_strategy(3, &Steps::new(vec![(q(1, 2), 1), (qi(1), 0)]).unwrap());
        let (d1, d2) = cyclic_deviations(&g, &f1, &f2);
        let v = profile_values(&g, &f1, &pure_strategy(3, &d2));
        assert!(!v.payoff_2.0.is_negative());
        let v = profile_values(&g, &pure_strategy(3, &d1), &f2);
        assert!(!v.payoff_1.0.is_negative());
    }

    #[test]
    fn candidate_counts() {
        assert_eq!(canonical_strategies(3, 2, 8).len(), 297);
        assert_eq!(canonical_strategies(2, 2, 8).len(), 58);
    }

    #[test]
    fn small_search_passes() {
        let r = no_pure_equilibrium_search(&game(2), 2, 8, 0.01, Exec::Sequential).unwrap();
        assert!(r.pass);
        assert!(r.exhaustive);
        assert_eq!(r.uniform.gain_1.0, qi(0));
        assert!(matches!(no_pure_equilibrium_search(&game(2), 9, 8, 0.01, Exec::Sequential), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn csv_header() {
        let csv = weights_csv(&pure_strategy(2, &halves()), Side::Two, 4);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("l2,w_1,w_2"));
        assert_eq!(lines.next(), Some("0.125,1,0"));
    }
}
