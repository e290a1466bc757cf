//! Behavioral equilibria through the agent form, exact verification, and improving deviations.
//!
//! Opponents see a player's strategy only through its block averages `g_i = E(f_i | 𝒢_i)`, so
//! a search over block averages is finite dimensional. Given block averages the player's own
//! payoff still depends on how `f_i` is laid out inside a block; [`AgentForm::realize`]
//! picks the best layout with a small transport program.
//!
//! Solvers:
//! - `lp`: two-player zero-sum games whose interim payoffs are constant on every cell;
//!   exact, with `U_1 = v = −U_2`.
//! - `br`: damped best response in floating point, with periodic Newton steps on
//!   `BR(g) − g` for agents whose best response moves smoothly; candidates are snapped to
//!   rationals and accepted only after exact verification.
//! - `enum`: support enumeration for two players with at most four cells each and at most
//!   three actions, under the same constancy requirement as `lp`.

use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::correspondence::{MixedSelection, Selection};
use crate::error::{Error, Result};
use crate::game::{interim_table, AffineValue, BayesianGame, Entry, Profile};
use crate::lp::{solve_unique, LinearProgram, Rel};
use crate::measure::OnCell;
use crate::purification::purify_profile;
use crate::rational::{approx_q, from_f64, half, to_f64, Q};
use crate::steps::Steps;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// `lp` for eligible zero-sum games, otherwise `br` with `enum` as fallback.
    #[default]
    Auto,
    Lp,
    Br,
    Enum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub method: Method,
    /// Accepted exact regret per player.
    pub epsilon: f64,
    pub max_iters: usize,
    pub damping: f64,
    /// `0` starts best response from uniform play; any other seed draws a random start.
    /// Restart rounds always draw their starts from this seed.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { method: Method::Auto, epsilon: 1e-9, max_iters: 5000, damping: 0.1, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumReport {
    pub method: Method,
    /// Block averages `g[i][block][action]`.
    pub blocks: Vec<Vec<Vec<Q>>>,
    pub profile: Profile,
    /// Exact regret per player.
    pub epsilon: Vec<Q>,
    pub iterations: usize,
    pub converged: bool,
    /// Value of player 1 for the zero-sum solver.
    pub value: Option<Q>,
}

impl EquilibriumReport {
    pub fn max_epsilon(&self) -> Q {
        self.epsilon.iter().max().cloned().unwrap_or_else(Q::zero)
    }
}

pub(crate) trait Scalar: Clone + PartialOrd + num::Num {
    fn from_q(q: &Q) -> Self;
}

impl Scalar for f64 {
    fn from_q(q: &Q) -> f64 {
        to_f64(q)
    }
}

impl Scalar for Q {
    fn from_q(q: &Q) -> Q {
        q.clone()
    }
}

/// Upper envelope of `a_x + b_x·s` on `[0, 1]` as `(lo, hi, action)` pieces, lowest action
/// index winning ties. A cell without inner coordinate yields one piece.
pub(crate) fn envelope<T: Scalar>(vals: &[(T, T)], inner: bool) -> Vec<(T, T, usize)> {
    let at = |x: usize, s: &T| vals[x].0.clone() + vals[x].1.clone() * s.clone();
    if !inner {
        let mut w = 0;
        for x in 1..vals.len() {
            if vals[x].0 > vals[w].0 {
                w = x;
            }
        }
        return vec![(T::zero(), T::one(), w)];
    }
    let mut out = Vec::new();
    let mut s0 = T::zero();
    loop {
        let mut w = 0;
        for x in 1..vals.len() {
            let (vx, vw) = (at(x, &s0), at(w, &s0));
            if vx > vw || (vx == vw && vals[x].1 > vals[w].1) {
                w = x;
            }
        }
        let mut next = T::one();
        for y in 0..vals.len() {
            if vals[y].1 > vals[w].1 {
                let s = (vals[w].0.clone() - vals[y].0.clone()) / (vals[y].1.clone() - vals[w].1.clone());
                if s > s0 && s < next {
                    next = s;
                }
            }
        }
        let done = next >= T::one();
        out.push((s0, next.clone(), w));
        if done {
            return out;
        }
        s0 = next;
    }
}

/// The finite game between (player, block) agents.
#[derive(Clone, Debug)]
pub struct AgentForm {
    actions: Vec<usize>,
    mass: Vec<Vec<Q>>,
    inner: Vec<Vec<bool>>,
    saturated: Vec<Vec<bool>>,
    block_of: Vec<Vec<usize>>,
    block_mass: Vec<Vec<Q>>,
    block_cells: Vec<Vec<Vec<usize>>>,
    /// Per player: each opponent tuple as `(player, block, action)` triples.
    tuples: Vec<Vec<Vec<(usize, usize, usize)>>>,
    /// `[i][cell][action][tuple]`: contribution to `V_i` per unit of `Π g_j`.
    coef: Vec<Vec<Vec<Vec<(Q, Q)>>>>,
    coef_f: Vec<Vec<Vec<Vec<(f64, f64)>>>>,
    own_affine: bool,
}

impl AgentForm {
    pub fn new(game: &BayesianGame) -> Self {
        let n = game.player_count();
        let units = game.unit_count();
        let mut af = AgentForm {
            actions: game.players().iter().map(|p| p.actions.len()).collect(),
            mass: vec![],
            inner: vec![],
            saturated: vec![],
            block_of: vec![],
            block_mass: vec![],
            block_cells: vec![],
            tuples: vec![],
            coef: vec![],
            coef_f: vec![],
            own_affine: false,
        };
        for i in 0..n {
            let space = game.type_space(i);
            af.mass.push(space.cells().iter().map(|c| c.mass.clone()).collect());
            af.inner.push(space.cells().iter().map(|c| c.kind.has_inner()).collect());
            af.saturated.push(space.cells().iter().map(|c| c.kind == crate::measure::CellKind::Saturated).collect());
            af.block_of.push((0..space.len()).map(|c| space.block_of(c)).collect());
            af.block_mass.push(space.blocks().iter().map(|b| b.mass.clone()).collect());
            af.block_cells.push(space.blocks().iter().map(|b| b.cells.clone()).collect());
        }
        for i in 0..n {
            let opp: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let radices: Vec<usize> = opp.iter().map(|&j| af.block_mass[j].len() * af.actions[j]).collect();
            let count: usize = radices.iter().product();
            let tuples: Vec<Vec<(usize, usize, usize)>> = (0..count)
                .map(|mut idx| {
                    let mut t = vec![(0, 0, 0); opp.len()];
                    for k in (0..opp.len()).rev() {
                        let d = idx % radices[k];
                        idx /= radices[k];
                        t[k] = (opp[k], d / af.actions[opp[k]], d % af.actions[opp[k]]);
                    }
                    t
                })
                .collect();
            let index_of = |blocks: &[usize], acts: &[usize]| {
                opp.iter().enumerate().fold(0, |acc, (k, &j)| acc * radices[k] + blocks[j] * af.actions[j] + acts[j])
            };
            let mut coef = vec![vec![vec![(Q::zero(), Q::zero()); count]; af.actions[i]]; af.mass[i].len()];
            for u in 0..units {
                let cells = game.unit_cells(u);
                let blocks: Vec<usize> = (0..n).map(|j| af.block_of[j][cells[j]]).collect();
                let w: Q = opp.iter().map(|&j| &af.mass[j][cells[j]]).product();
                for x in 0..game.profile_count() {
                    let acts = game.profile_actions(x);
                    let slot = &mut coef[cells[i]][acts[i]][index_of(&blocks, &acts)];
                    match &game.weighted(i)[x * units + u] {
                        Entry::Const(a) => slot.0 += &w * a,
                        Entry::Affine { a, b, player } if *player == i => {
                            slot.0 += &w * a;
                            slot.1 += &w * b;
                            af.own_affine = true;
                        }
                        Entry::Affine { a, b, .. } => slot.0 += &w * (a + b * half()),
                    }
                }
            }
            af.coef_f.push(
                coef.iter()
                    .map(|c| c.iter().map(|x| x.iter().map(|(a, b)| (to_f64(a), to_f64(b))).collect()).collect())
                    .collect(),
            );
            af.coef.push(coef);
            af.tuples.push(tuples);
        }
        af
    }

    pub fn player_count(&self) -> usize {
        self.actions.len()
    }

    pub fn block_count(&self, i: usize) -> usize {
        self.block_mass[i].len()
    }

    /// Whether some player's interim payoff varies with its own inner coordinate.
    pub fn has_own_affine(&self) -> bool {
        self.own_affine
    }

    fn eval<T: Scalar>(&self, coef: &[Vec<Vec<(T, T)>>], i: usize, g: &[Vec<Vec<T>>]) -> Vec<Vec<(T, T)>> {
        let weights: Vec<T> = self.tuples[i]
            .iter()
            .map(|t| t.iter().fold(T::one(), |acc, &(j, b, x)| acc * g[j][b][x].clone()))
            .collect();
        coef.iter()
            .map(|cell| {
                cell.iter()
                    .map(|row| {
                        let mut a = T::zero();
                        let mut b = T::zero();
                        for ((ca, cb), w) in row.iter().zip(&weights) {
                            if *w != T::zero() {
                                a = a + ca.clone() * w.clone();
                                b = b + cb.clone() * w.clone();
                            }
                        }
                        (a, b)
                    })
                    .collect()
            })
            .collect()
    }

    /// Interim payoffs of player `i` per cell and action against block strategies `g`.
    pub fn interim(&self, i: usize, g: &[Vec<Vec<Q>>]) -> Vec<Vec<AffineValue>> {
        self.eval(&self.coef[i], i, g).into_iter().map(|c| c.into_iter().map(|(a, b)| AffineValue { a, b }).collect()).collect()
    }

    fn block_best_response<T: Scalar>(&self, coef: &[Vec<Vec<(T, T)>>], i: usize, g: &[Vec<Vec<T>>]) -> Vec<Vec<T>> {
        let vals = self.eval(coef, i, g);
        let mut out = vec![vec![T::zero(); self.actions[i]]; self.block_count(i)];
        for (c, v) in vals.iter().enumerate() {
            let m = T::from_q(&self.mass[i][c]);
            let b = self.block_of[i][c];
            for (lo, hi, x) in envelope(v, self.inner[i][c]) {
                out[b][x] = out[b][x].clone() + m.clone() * (hi - lo);
            }
        }
        for (b, row) in out.iter_mut().enumerate() {
            let bm = T::from_q(&self.block_mass[i][b]);
            for v in row.iter_mut() {
                *v = v.clone() / bm.clone();
            }
        }
        out
    }

    /// `E(BR(g) | 𝒢)` for every player, exactly.
    pub fn best_response(&self, g: &[Vec<Vec<Q>>]) -> Vec<Vec<Vec<Q>>> {
        (0..self.player_count()).map(|i| self.block_best_response(&self.coef[i], i, g)).collect()
    }

    fn best_response_f64(&self, g: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
        (0..self.player_count()).map(|i| self.block_best_response(&self.coef_f[i], i, g)).collect()
    }

    /// A behavioral profile with block averages `g` and least regret for each player.
    /// Saturated cells keep their block average so opponents' payoffs stay exact.
    pub fn realize(&self, game: &BayesianGame, g: &[Vec<Vec<Q>>]) -> Result<Profile> {
        let players = (0..self.player_count()).map(|i| self.realize_player(game, i, g)).collect::<Result<_>>()?;
        Profile::new(game, players)
    }

    fn realize_player(&self, game: &BayesianGame, i: usize, g: &[Vec<Vec<Q>>]) -> Result<MixedSelection> {
        let vals = self.eval(&self.coef[i], i, g);
        let k = self.actions[i];
        let mut cells: Vec<Option<OnCell<Vec<Q>>>> = vec![None; self.mass[i].len()];
        for (b, members) in self.block_cells[i].iter().enumerate() {
            // pieces: (cell, lo, hi, mass, mean values)
            let mut pieces: Vec<(usize, Q, Q, Q, Vec<Q>)> = Vec::new();
            for &c in members {
                let env = if self.saturated[i][c] {
                    vec![(Q::zero(), Q::one(), 0)]
                } else {
                    envelope(&vals[c], self.inner[i][c])
                };
                for (lo, hi, _) in env {
                    let mid = (&lo + &hi) * half();
                    let mean = vals[c].iter().map(|(a, bb)| a + bb * &mid).collect();
                    let m = &self.mass[i][c] * (&hi - &lo);
                    pieces.push((c, lo, hi, m, mean));
                }
            }
            let weights: Vec<Vec<Q>> = if members.iter().any(|&c| self.saturated[i][c]) || pieces.len() == 1 {
                pieces.iter().map(|_| g[i][b].clone()).collect()
            } else {
                let vars = pieces.len() * k;
                let mut lp = LinearProgram::new(vars);
                for (p, piece) in pieces.iter().enumerate() {
                    for x in 0..k {
                        lp.objective[p * k + x] = piece.4[x].clone();
                    }
                    let mut row = vec![Q::zero(); vars];
                    row[p * k..(p + 1) * k].fill(Q::one());
                    lp.push(row, Rel::Eq, piece.3.clone());
                }
                for x in 0..k {
                    let mut row = vec![Q::zero(); vars];
                    for p in 0..pieces.len() {
                        row[p * k + x] = Q::one();
                    }
                    lp.push(row, Rel::Eq, &self.block_mass[i][b] * &g[i][b][x]);
                }
                let (y, _) = lp
                    .solve()
                    .optimal()
                    .ok_or_else(|| Error::InvalidStrategy(format!("block averages of player {i} are not a distribution")))?;
                pieces.iter().enumerate().map(|(p, piece)| y[p * k..(p + 1) * k].iter().map(|v| v / &piece.3).collect()).collect()
            };
            for &c in members {
                let segs: Vec<(Q, Vec<Q>)> = pieces
                    .iter()
                    .zip(&weights)
                    .filter(|(p, _)| p.0 == c)
                    .map(|(p, w)| (p.2.clone(), w.clone()))
                    .collect();
                cells[c] = Some(if self.inner[i][c] {
                    OnCell::Inner(Steps::new(segs)?.merged())
                } else {
                    OnCell::Point(segs.into_iter().next().expect("one piece per point cell").1)
                });
            }
        }
        MixedSelection::new(game.type_space(i), cells.into_iter().map(|c| c.expect("every cell is in a block")).collect())
    }

    /// Block averages of a behavioral profile.
    pub fn block_strategies(&self, profile: &Profile) -> Vec<Vec<Vec<Q>>> {
        (0..self.player_count())
            .map(|i| {
                let mut out = vec![vec![Q::zero(); self.actions[i]]; self.block_count(i)];
                for (c, cell) in profile.players[i].cells().iter().enumerate() {
                    let b = self.block_of[i][c];
                    for (lo, hi, w) in cell.pieces() {
                        let m = &self.mass[i][c] * (hi - lo);
                        for (o, wx) in out[b].iter_mut().zip(w) {
                            *o += &m * wx;
                        }
                    }
                }
                for (b, row) in out.iter_mut().enumerate() {
                    for v in row.iter_mut() {
                        *v /= &self.block_mass[i][b];
                    }
                }
                out
            })
            .collect()
    }

    fn cell_constant(&self) -> bool {
        !self.own_affine && self.saturated.iter().flatten().all(|s| !s)
    }
}

/// Crossing points in `(0, 1)` of the affine functions.
fn crossings(values: &[AffineValue]) -> Vec<Q> {
    let mut out = Vec::new();
    for (x, vx) in values.iter().enumerate() {
        for vy in &values[x + 1..] {
            if vx.b != vy.b {
                let s = (&vy.a - &vx.a) / (&vx.b - &vy.b);
                if s.is_positive() && s < Q::one() {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// Per piece of `strategy` refined by all crossings: `(lo, hi, weights, best action, regret density)`.
fn regret_pieces(values: &[AffineValue], strategy: &OnCell<Vec<Q>>) -> Vec<(Q, Q, Vec<Q>, usize, Q)> {
    let refined = strategy.refine(&crossings(values));
    refined
        .pieces()
        .into_iter()
        .map(|(lo, hi, w)| {
            let s = if refined.is_point() { Q::zero() } else { (&lo + &hi) * half() };
            let at: Vec<Q> = values.iter().map(|v| v.at(&s)).collect();
            let mut best = 0;
            for x in 1..at.len() {
                if at[x] > at[best] {
                    best = x;
                }
            }
            let played: Q = w.iter().zip(&at).map(|(wx, v)| wx * v).sum();
            let gap = (&at[best] - played) * (&hi - &lo);
            (lo, hi, w.clone(), best, gap)
        })
        .collect()
}

/// `ε_i = ∫ (max_x V_i(x, t) − V_i(f_i(t), t)) dλ_i(t)` for every player, exactly.
pub fn verify_equilibrium(game: &BayesianGame, profile: &Profile) -> Vec<Q> {
    (0..game.player_count())
        .map(|i| {
            let table = interim_table(game, i, profile);
            game.players()[i]
                .types
                .iter()
                .enumerate()
                .map(|(c, t)| {
                    &t.mass * regret_pieces(&table[c], profile.players[i].cell(c)).into_iter().map(|p| p.4).sum::<Q>()
                })
                .sum()
        })
        .collect()
}

/// Pointwise best response of player `i`: the played weights where they are already optimal,
/// otherwise the first maximizing action. Returns the strategy and its gain `ε_i`.
pub fn improving_deviation(game: &BayesianGame, profile: &Profile, i: usize) -> Result<(MixedSelection, Q)> {
    if i >= game.player_count() {
        return Err(Error::IndexOutOfRange { index: i, count: game.player_count() });
    }
    let table = interim_table(game, i, profile);
    let k = game.players()[i].actions.len();
    let mut gain = Q::zero();
    let mut cells = Vec::new();
    for (c, t) in game.players()[i].types.iter().enumerate() {
        let strategy = profile.players[i].cell(c);
        let pieces = regret_pieces(&table[c], strategy);
        let chosen: Vec<(Q, Vec<Q>)> = pieces
            .into_iter()
            .map(|(_, hi, w, best, r)| {
                gain += &t.mass * &r;
                if r.is_zero() {
                    (hi, w)
                } else {
                    (hi, (0..k).map(|x| if x == best { Q::one() } else { Q::zero() }).collect())
                }
            })
            .collect();
        cells.push(if strategy.is_point() {
            OnCell::Point(chosen.into_iter().next().expect("one piece").1)
        } else {
            OnCell::Inner(Steps::new(chosen)?.merged())
        });
    }
    Ok((MixedSelection::new(game.type_space(i), cells)?, gain))
}

fn not_applicable(method: &str, reason: &str) -> Error {
    Error::MethodNotApplicable { method: method.into(), reason: reason.into() }
}

/// Searches for a behavioral equilibrium whose block averages are a fixed point of the
/// conditioned best response.
pub fn solve_behavioral(game: &BayesianGame, options: &SolveOptions) -> Result<EquilibriumReport> {
    let af = AgentForm::new(game);
    match options.method {
        Method::Lp => solve_lp(game, &af),
        Method::Enum => solve_enum(game, &af),
        Method::Br => solve_br(game, &af, options),
        Method::Auto => {
            if game.is_two_player_zero_sum() && af.cell_constant() {
                return solve_lp(game, &af);
            }
            let report = solve_br(game, &af, options)?;
            if !report.converged {
                if let Ok(e) = solve_enum(game, &af) {
                    if e.converged {
                        return Ok(e);
                    }
                }
            }
            Ok(report)
        }
    }
}

fn finish(
    game: &BayesianGame,
    af: &AgentForm,
    method: Method,
    profile: Profile,
    iterations: usize,
    tolerance: &Q,
    value: Option<Q>,
) -> EquilibriumReport {
    let epsilon = verify_equilibrium(game, &profile);
    let converged = epsilon.iter().all(|e| e <= tolerance);
    EquilibriumReport { method, blocks: af.block_strategies(&profile), profile, epsilon, iterations, converged, value }
}

/// Cell-level payoff matrix of player `i` against the other player's cell strategies,
/// rows `(cell, action)` and columns `(opponent cell, opponent action)`.
fn cell_matrix(af: &AgentForm, i: usize) -> Vec<Vec<Q>> {
    let j = 1 - i;
    let (ki, kj) = (af.actions[i], af.actions[j]);
    let cols = af.mass[j].len() * kj;
    let mut out = vec![vec![Q::zero(); cols]; af.mass[i].len() * ki];
    for c in 0..af.mass[i].len() {
        for x in 0..ki {
            for (t, tuple) in af.tuples[i].iter().enumerate() {
                let (_, b, y) = tuple[0];
                let a = &af.coef[i][c][x][t].0;
                if a.is_zero() {
                    continue;
                }
                for &cj in &af.block_cells[j][b] {
                    let share = &af.mass[j][cj] / &af.block_mass[j][b];
                    out[c * ki + x][cj * kj + y] += &af.mass[i][c] * a * share;
                }
            }
        }
    }
    out
}

fn cell_profile(game: &BayesianGame, af: &AgentForm, p: &[Vec<Vec<Q>>]) -> Result<Profile> {
    let players = (0..2)
        .map(|i| {
            let cells = p[i]
                .iter()
                .enumerate()
                .map(|(c, w)| if af.inner[i][c] { OnCell::Inner(Steps::constant(w.clone())) } else { OnCell::Point(w.clone()) })
                .collect();
            MixedSelection::new(game.type_space(i), cells)
        })
        .collect::<Result<_>>()?;
    Profile::new(game, players)
}

fn maximin(a: &[Vec<Q>], cells: usize, k: usize, opp_cells: usize, opp_k: usize) -> (Vec<Vec<Q>>, Q) {
    let own = cells * k;
    let vars = own + 2 * opp_cells;
    let mut lp = LinearProgram::new(vars);
    for c in 0..opp_cells {
        lp.objective[own + c] = Q::one();
        lp.objective[own + opp_cells + c] = -Q::one();
    }
    for c in 0..opp_cells {
        for y in 0..opp_k {
            let mut row = vec![Q::zero(); vars];
            for (r, a_row) in a.iter().enumerate() {
                row[r] = -a_row[c * opp_k + y].clone();
            }
            row[own + c] = Q::one();
            row[own + opp_cells + c] = -Q::one();
            lp.push(row, Rel::Le, Q::zero());
        }
    }
    for c in 0..cells {
        let mut row = vec![Q::zero(); vars];
        row[c * k..(c + 1) * k].fill(Q::one());
        lp.push(row, Rel::Eq, Q::one());
    }
    let (x, v) = lp.solve().optimal().expect("a finite matrix game has a value");
    ((0..cells).map(|c| x[c * k..(c + 1) * k].to_vec()).collect(), v)
}

fn solve_lp(game: &BayesianGame, af: &AgentForm) -> Result<EquilibriumReport> {
    if !game.is_two_player_zero_sum() {
        return Err(not_applicable("lp", "the game is not two-player zero-sum"));
    }
    if !af.cell_constant() {
        return Err(not_applicable("lp", "interim payoffs vary inside a type cell"));
    }
    let (a1, a2) = (cell_matrix(af, 0), cell_matrix(af, 1));
    let (p1, v1) = maximin(&a1, af.mass[0].len(), af.actions[0], af.mass[1].len(), af.actions[1]);
    let (p2, _) = maximin(&a2, af.mass[1].len(), af.actions[1], af.mass[0].len(), af.actions[0]);
    let profile = cell_profile(game, af, &[p1, p2])?;
    Ok(finish(game, af, Method::Lp, profile, 0, &Q::zero(), Some(v1)))
}

fn subsets(k: usize) -> Vec<Vec<usize>> {
    (1..1usize << k).map(|m| (0..k).filter(|x| m >> x & 1 == 1).collect()).collect()
}

fn product_of(lists: &[Vec<Vec<usize>>]) -> Vec<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for l in lists {
        out = out.into_iter().flat_map(|p| l.iter().map(move |s| [p.clone(), vec![s.clone()]].concat())).collect();
    }
    out
}

/// Opponent cell strategies making every own support indifferent and optimal, if unique.
fn indifference(a: &[Vec<Q>], own: &[Vec<usize>], opp: &[Vec<usize>], k: usize, opp_k: usize) -> Option<Vec<Vec<Q>>> {
    let cols: Vec<(usize, usize)> = opp.iter().enumerate().flat_map(|(c, s)| s.iter().map(move |&y| (c, y))).collect();
    let vars = cols.len() + own.len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (c, s) in own.iter().enumerate() {
        for &x in s {
            let mut row: Vec<Q> = cols.iter().map(|&(cj, y)| a[c * k + x][cj * opp_k + y].clone()).collect();
            row.extend((0..own.len()).map(|d| if d == c { -Q::one() } else { Q::zero() }));
            rows.push(row);
            rhs.push(Q::zero());
        }
    }
    for c in 0..opp.len() {
        let mut row: Vec<Q> = cols.iter().map(|&(cj, _)| if cj == c { Q::one() } else { Q::zero() }).collect();
        row.extend(std::iter::repeat_n(Q::zero(), own.len()));
        rows.push(row);
        rhs.push(Q::one());
    }
    let sol = solve_unique(rows, rhs, vars)?;
    if sol[..cols.len()].iter().any(Signed::is_negative) {
        return None;
    }
    let mut p = vec![vec![Q::zero(); opp_k]; opp.len()];
    for (&(c, y), v) in cols.iter().zip(&sol) {
        p[c][y] = v.clone();
    }
    for (c, s) in own.iter().enumerate() {
        let v = &sol[cols.len() + c];
        for x in (0..k).filter(|x| !s.contains(x)) {
            let payoff: Q = (0..opp.len()).flat_map(|cj| (0..opp_k).map(move |y| (cj, y))).map(|(cj, y)| &a[c * k + x][cj * opp_k + y] * &p[cj][y]).sum();
            if payoff > *v {
                return None;
            }
        }
    }
    Some(p)
}

fn solve_enum(game: &BayesianGame, af: &AgentForm) -> Result<EquilibriumReport> {
    if af.player_count() != 2 {
        return Err(not_applicable("enum", "support enumeration needs two players"));
    }
    if !af.cell_constant() {
        return Err(not_applicable("enum", "interim payoffs vary inside a type cell"));
    }
    if af.mass.iter().any(|m| m.len() > 4) || af.actions.iter().any(|&k| k > 3) {
        return Err(not_applicable("enum", "at most four cells and three actions per player"));
    }
    let (k1, k2) = (af.actions[0], af.actions[1]);
    let (a1, a2) = (cell_matrix(af, 0), cell_matrix(af, 1));
    let s1 = product_of(&vec![subsets(k1); af.mass[0].len()]);
    let s2 = product_of(&vec![subsets(k2); af.mass[1].len()]);
    let mut tried = 0;
    for sup1 in &s1 {
        for sup2 in &s2 {
            tried += 1;
            let Some(p2) = indifference(&a1, sup1, sup2, k1, k2) else { continue };
            let Some(p1) = indifference(&a2, sup2, sup1, k2, k1) else { continue };
            let profile = cell_profile(game, af, &[p1, p2])?;
            let report = finish(game, af, Method::Enum, profile, tried, &Q::zero(), None);
            if report.converged {
                return Ok(report);
            }
        }
    }
    Err(not_applicable("enum", "no nondegenerate support pair"))
}

/// Rounds a float distribution to nearby simple fractions summing to 1.
fn snap(v: &[f64]) -> Option<Vec<Q>> {
    snap_within(v, 1e-9)
}

fn snap_within(v: &[f64], tol: f64) -> Option<Vec<Q>> {
    let mut out: Vec<Q> = v[..v.len() - 1].iter().map(|&x| approx_q(x.clamp(0.0, 1.0), tol)).collect();
    let last = Q::one() - out.iter().sum::<Q>();
    if last.is_negative() {
        return None;
    }
    out.push(last);
    Some(out)
}

fn flatten(g: &[Vec<Vec<f64>>]) -> Vec<f64> {
    g.iter().flatten().flatten().copied().collect()
}

fn unflatten_like(x: &[f64], shape: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    let mut it = x.iter().copied();
    shape.iter().map(|gi| gi.iter().map(|gb| gb.iter().map(|_| it.next().expect("same length")).collect()).collect()).collect()
}

fn residual(af: &AgentForm, g: &[Vec<Vec<f64>>]) -> Vec<f64> {
    flatten(&af.best_response_f64(g)).iter().zip(flatten(g)).map(|(b, x)| b - x).collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton steps on `BR(g) − g` with a forward-difference Jacobian, kept while the residual drops.
fn newton_polish(af: &AgentForm, g: &[Vec<Vec<f64>>], steps: usize) -> (Vec<Vec<Vec<f64>>>, f64) {
    const H: f64 = 1e-7;
    let mut cur = g.to_vec();
    let mut r = residual(af, &cur);
    for _ in 0..steps {
        let norm = sup(&r);
        if norm < 1e-14 {
            break;
        }
        let x = flatten(&cur);
        let n = x.len();
        let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut xp = x.clone();
            xp[j] += H;
            let rp = residual(af, &unflatten_like(&xp, &cur));
            for i in 0..n {
                jac[(i, j)] = (rp[i] - r[i]) / H;
            }
        }
        let rhs = nalgebra::DVector::from_iterator(n, r.iter().map(|v| -v));
        let Some(step) = jac.lu().solve(&rhs) else { break };
        let mut next = unflatten_like(&x.iter().zip(step.iter()).map(|(a, d)| a + d).collect::<Vec<_>>(), &cur);
        for gb in next.iter_mut().flatten() {
            gb.iter_mut().for_each(|v| *v = v.max(0.0));
            let s: f64 = gb.iter().sum();
            if s <= 0.0 {
                return (cur, norm);
            }
            gb.iter_mut().for_each(|v| *v /= s);
        }
        let rn = residual(af, &next);
        if sup(&rn) >= norm {
            break;
        }
        cur = next;
        r = rn;
    }
    let norm = sup(&r);
    (cur, norm)
}

#[derive(Clone, Copy, Debug)]
enum Bound {
    Fixed(f64),
    Cross(usize, usize),
}

/// One envelope piece of a cell: actions in `group` tie on it, `group[0]` takes the remainder
/// and the others take shares `u[share..]`.
#[derive(Clone, Debug)]
struct Piece {
    cell: usize,
    lo: Bound,
    hi: Bound,
    group: Vec<usize>,
    share: usize,
}

/// Envelope pattern of every player at `g`: near-coincident lines are grouped.
fn structure(af: &AgentForm, g: &[Vec<Vec<f64>>], tol: f64, next: &mut usize) -> Option<Vec<Vec<Piece>>> {
    let mut out = Vec::new();
    for i in 0..af.player_count() {
        if af.saturated[i].iter().any(|&s| s) {
            return None;
        }
        let vals = af.eval(&af.coef_f[i], i, g);
        let mut pieces = Vec::new();
        for (c, v) in vals.iter().enumerate() {
            let k = v.len();
            let mut groups: Vec<Vec<usize>> = Vec::new();
            for x in 0..k {
                let same = |y: &usize| (v[x].0 - v[*y].0).abs() < tol && (v[x].1 - v[*y].1).abs() < tol;
                match groups.iter_mut().find(|grp| same(&grp[0])) {
                    Some(grp) => grp.push(x),
                    None => groups.push(vec![x]),
                }
            }
            let reps: Vec<(f64, f64)> = groups.iter().map(|grp| v[grp[0]]).collect();
            let env = envelope(&reps, af.inner[i][c]);
            let mut prev: Option<usize> = None;
            for (lo, hi, r) in env {
                if (hi - lo < tol && af.inner[i][c]) || prev == Some(r) {
                    continue;
                }
                let lo_b = match prev {
                    Some(p) => Bound::Cross(groups[p][0], groups[r][0]),
                    None => Bound::Fixed(0.0),
                };
                if let (Some(last), Some(_)) = (pieces.last_mut(), prev) {
                    let last: &mut Piece = last;
                    last.hi = lo_b;
                }
                pieces.push(Piece { cell: c, lo: lo_b, hi: Bound::Fixed(1.0), group: groups[r].clone(), share: *next });
                *next += groups[r].len() - 1;
                prev = Some(r);
            }
        }
        out.push(pieces);
    }
    Some(out)
}

fn bound_at(b: Bound, vals: &[(f64, f64)]) -> f64 {
    match b {
        Bound::Fixed(s) => s,
        Bound::Cross(w, y) => ((vals[w].0 - vals[y].0) / (vals[y].1 - vals[w].1)).clamp(0.0, 1.0),
    }
}

/// `g − Φ(g, u)` followed by the indifference conditions of tied groups.
fn structural_residual(af: &AgentForm, shape: &[Vec<Vec<f64>>], pieces: &[Vec<Piece>], u: &[f64]) -> Vec<f64> {
    let n = shape.iter().flatten().flatten().count();
    let g = unflatten_like(&u[..n], shape);
    let mut phi: Vec<Vec<Vec<f64>>> = shape.iter().map(|gi| gi.iter().map(|gb| vec![0.0; gb.len()]).collect()).collect();
    let mut tied = Vec::new();
    for (i, ps) in pieces.iter().enumerate() {
        let vals = af.eval(&af.coef_f[i], i, &g);
        for p in ps {
            let v = &vals[p.cell];
            let (lo, hi) = (bound_at(p.lo, v), bound_at(p.hi, v));
            let len = (hi - lo).max(0.0) * to_f64(&af.mass[i][p.cell]);
            let shares = &u[n + p.share..n + p.share + p.group.len() - 1];
            let b = af.block_of[i][p.cell];
            phi[i][b][p.group[0]] += len * (1.0 - shares.iter().sum::<f64>());
            let mid = if af.inner[i][p.cell] { (lo + hi) / 2.0 } else { 0.0 };
            let at = |x: usize| v[x].0 + v[x].1 * mid;
            for (&x, w) in p.group[1..].iter().zip(shares) {
                phi[i][b][x] += len * w;
                tied.push(at(x) - at(p.group[0]));
            }
        }
        for (b, row) in phi[i].iter_mut().enumerate() {
            let bm = to_f64(&af.block_mass[i][b]);
            row.iter_mut().for_each(|v| *v /= bm);
        }
    }
    u[..n].iter().zip(flatten(&phi)).map(|(a, b)| a - b).chain(tied).collect()
}

/// Solves the fixed-point equations with the envelope pattern of `g` held fixed.
fn solve_pattern(af: &AgentForm, g: &[Vec<Vec<f64>>], tol: f64) -> Option<Vec<Vec<Vec<f64>>>> {
    const H: f64 = 1e-7;
    let mut extra = 0;
    let pieces = structure(af, g, tol, &mut extra)?;
    let mut u = flatten(g);
    let n = u.len();
    u.extend(std::iter::repeat_n(0.5, extra));
    let mut r = structural_residual(af, g, &pieces, &u);
    for _ in 0..30 {
        if sup(&r) < 1e-14 {
            break;
        }
        let mut jac = nalgebra::DMatrix::<f64>::zeros(r.len(), u.len());
        for j in 0..u.len() {
            let mut up = u.clone();
            up[j] += H;
            let rp = structural_residual(af, g, &pieces, &up);
            for (row, (a, b)) in rp.iter().zip(&r).enumerate() {
                jac[(row, j)] = (a - b) / H;
            }
        }
        let rhs = nalgebra::DVector::from_iterator(r.len(), r.iter().map(|v| -v));
        let step = jac.svd(true, true).solve(&rhs, 1e-12).ok()?;
        u.iter_mut().zip(step.iter()).for_each(|(a, d)| *a += d);
        r = structural_residual(af, g, &pieces, &u);
        if !r.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    let feasible = u[..n].iter().all(|&v| v > -1e-9) && u[n..].iter().all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v));
    (sup(&r) < 1e-11 && feasible).then(|| unflatten_like(&u[..n], g))
}

/// Fixed points found by solving with the envelope pattern of `g`, then re-reading the pattern
/// at each solution.
fn structural_solve(af: &AgentForm, g: &[Vec<Vec<f64>>], tol: f64) -> Vec<Vec<Vec<Vec<f64>>>> {
    let mut out = Vec::new();
    let mut cur = g.to_vec();
    for _ in 0..4 {
        let Some(next) = solve_pattern(af, &cur, tol) else { break };
        let moved = sup(&flatten(&next).iter().zip(flatten(&cur)).map(|(a, b)| a - b).collect::<Vec<_>>());
        out.push(next.clone());
        if moved < 1e-12 {
            break;
        }
        cur = next;
    }
    out
}

/// Number of restart rounds the iteration budget is split into.
const BR_ROUNDS: usize = 5;
/// Damping used by restart rounds after the first.
const RESTART_DAMPING: [f64; 4] = [0.5, 0.02, 0.2, 0.05];

fn start_point(af: &AgentForm, rng: Option<&mut ChaCha8Rng>) -> Vec<Vec<Vec<f64>>> {
    let mut rng = rng;
    (0..af.player_count())
        .map(|i| {
            (0..af.block_count(i))
                .map(|_| {
                    let k = af.actions[i];
                    match rng.as_deref_mut() {
                        None => vec![1.0 / k as f64; k],
                        Some(r) => {
                            let raw: Vec<f64> = (0..k).map(|_| -r.gen_range(f64::EPSILON..1.0f64).ln()).collect();
                            let s: f64 = raw.iter().sum();
                            raw.iter().map(|x| x / s).collect()
                        }
                    }
                })
                .collect()
        })
        .collect()
}

fn solve_br(game: &BayesianGame, af: &AgentForm, options: &SolveOptions) -> Result<EquilibriumReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let tolerance = from_f64(options.epsilon.max(0.0));
    let mut best: Option<EquilibriumReport> = None;
    let consider = |cand: Vec<Vec<Vec<Q>>>, it: usize, best: &mut Option<EquilibriumReport>| -> Result<bool> {
        let profile = af.realize(game, &cand)?;
        let report = finish(game, af, Method::Br, profile, it, &tolerance, None);
        let done = report.converged;
        if best.as_ref().is_none_or(|b| report.max_epsilon() < b.max_epsilon()) {
            *best = Some(report);
        }
        Ok(done)
    };
    let rounds = BR_ROUNDS.min(options.max_iters.max(1));
    let per_round = options.max_iters.div_ceil(rounds);
    let mut it = 0;
    for round in 0..rounds {
        let (mut g, eta) = if round == 0 {
            let start = if options.seed == 0 { start_point(af, None) } else { start_point(af, Some(&mut rng)) };
            (start, options.damping.clamp(f64::EPSILON, 1.0))
        } else {
            (start_point(af, Some(&mut rng)), RESTART_DAMPING[(round - 1) % RESTART_DAMPING.len()])
        };
        let end = (it + per_round).min(options.max_iters);
        let first = it + 1;
        let mut window = vec![0.0; flatten(&g).len()];
        while it < end {
            it += 1;
            let br = af.best_response_f64(&g);
            let mut diff = 0.0f64;
            for (gi, bi) in g.iter_mut().zip(&br) {
                for (gb, bb) in gi.iter_mut().zip(bi) {
                    for (x, y) in gb.iter_mut().zip(bb) {
                        diff = diff.max((*x - y).abs());
                        *x = (1.0 - eta) * *x + eta * y;
                    }
                }
            }
            window.iter_mut().zip(flatten(&g)).for_each(|(w, x)| *w += x);
            let last = it == end;
            if (it - first + 1) % 100 == 0 || last {
                let count = ((it - first) % 100 + 1) as f64;
                let mean = unflatten_like(&window.iter().map(|w| w / count).collect::<Vec<_>>(), &g);
                window.fill(0.0);
                let (polished, norm) = newton_polish(af, &g, 12);
                let mut candidates = Vec::new();
                if norm < 1e-10 {
                    candidates.push(polished);
                }
                for start in [&g, &mean] {
                    for tol in [1e-6, 1e-3] {
                        candidates.extend(structural_solve(af, start, tol));
                    }
                }
                for cand in candidates {
                    for digits in [1e-9, 1e-13] {
                        let snapped: Option<Vec<Vec<Vec<Q>>>> = cand
                            .iter()
                            .map(|gi| gi.iter().map(|gb| snap_within(gb, digits)).collect::<Option<Vec<_>>>())
                            .collect();
                        if let Some(gq) = snapped {
                            if consider(gq, it, &mut best)? {
                                return Ok(best.expect("a candidate was recorded"));
                            }
                        }
                    }
                }
            }
            if (diff < 1e-6 && (it % 10 == 0 || diff < 1e-12)) || last {
                let snapped: Option<Vec<Vec<Vec<Q>>>> =
                    g.iter().map(|gi| gi.iter().map(|gb| snap(gb)).collect::<Option<Vec<_>>>()).collect();
                if let Some(gq) = snapped {
                    let exact = af.best_response(&gq);
                    if consider(exact, it, &mut best)? || consider(gq, it, &mut best)? {
                        return Ok(best.expect("a candidate was recorded"));
                    }
                }
            }
        }
    }
    match best {
        Some(b) => Ok(b),
        None => {
            let uniform = Profile::uniform(game);
            Ok(finish(game, af, Method::Br, uniform, options.max_iters, &tolerance, None))
        }
    }
}

/// Pure profile with the same block averages as the report's behavioral profile, verified
/// again from scratch.
pub fn purify_equilibrium(game: &BayesianGame, report: &EquilibriumReport) -> Result<(Vec<Selection>, EquilibriumReport)> {
    let (pure, profile) = purify_profile(game, &report.profile)?;
    let af = AgentForm::new(game);
    let epsilon = verify_equilibrium(game, &profile);
    let converged = report.converged && epsilon.iter().zip(&report.epsilon).all(|(a, b)| a <= b);
    let out = EquilibriumReport {
        method: report.method,
        blocks: af.block_strategies(&profile),
        profile,
        epsilon,
        iterations: report.iterations,
        converged,
        value: report.value.clone(),
    };
    Ok((pure, out))
}
