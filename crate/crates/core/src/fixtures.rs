//! Seeded random generators and named example games.
//!
//! Breakpoints and weights are drawn on small dyadic or decimal grids so everything stays
//! exactly representable and fast to integrate.

use num::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::correspondence::{Correspondence, MixedSelection, Selection};
use crate::game::{BayesianGame, Entry, Player, Profile, TypeCell};
use crate::measure::{Cell, CellKind, MeasureSpace, OnCell, StepFunction};
use crate::rational::{q, qi, Q};
use crate::steps::Steps;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Positive masses with denominator `den` summing to 1.
pub fn random_masses<R: Rng + ?Sized>(rng: &mut R, n: usize, den: i64) -> Vec<Q> {
    assert!(n as i64 <= den);
    let mut cuts: Vec<i64> = (1..den).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<i64> = cuts[..n - 1].to_vec();
    cuts.sort();
    cuts.push(den);
    let mut prev = 0;
    cuts.into_iter()
        .map(|c| {
            let m = q(c - prev, den);
            prev = c;
            m
        })
        .collect()
}

/// A probability vector over `k` entries with denominator `den`.
pub fn random_weights<R: Rng + ?Sized>(rng: &mut R, k: usize, den: i64) -> Vec<Q> {
    let mut left = den;
    let mut out = vec![Q::zero(); k];
    let order: Vec<usize> = {
        let mut o: Vec<usize> = (0..k).collect();
        o.shuffle(rng);
        o
    };
    for (n, &x) in order.iter().enumerate() {
        let take = if n + 1 == k { left } else { rng.gen_range(0..=left) };
        out[x] = q(take, den);
        left -= take;
    }
    out
}

/// Step data with at most `max_pieces` pieces on the grid `1/grid`.
pub fn random_steps<R: Rng + ?Sized, T>(
    rng: &mut R,
    grid: i64,
    max_pieces: usize,
    mut value: impl FnMut(&mut R) -> T,
) -> Steps<T> {
    let pieces = rng.gen_range(1..=max_pieces.min(grid as usize));
    let mut cuts: Vec<i64> = (1..grid).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<i64> = cuts[..pieces - 1].to_vec();
    cuts.sort();
    cuts.push(grid);
    Steps::new(cuts.into_iter().map(|c| (q(c, grid), value(rng))).collect()).expect("grid cuts are increasing")
}

/// A space with `cells` cells grouped into at most `blocks` blocks. With `atoms` some cells
/// are point masses or saturated.
pub fn random_space<R: Rng + ?Sized>(rng: &mut R, cells: usize, blocks: usize, atoms: bool) -> MeasureSpace {
    let masses = random_masses(rng, cells, 24);
    let mut out: Vec<Cell> = Vec::new();
    for (c, mass) in masses.into_iter().enumerate() {
        let kind = if atoms {
            match rng.gen_range(0..4) {
                0 => CellKind::PointMass,
                1 => CellKind::Saturated,
                _ => CellKind::Rich,
            }
        } else {
            CellKind::Rich
        };
        let g_block = if kind == CellKind::Saturated { format!("s{c}") } else { format!("b{}", rng.gen_range(0..blocks.max(1))) };
        out.push(Cell { id: format!("c{c}"), mass, kind, g_block });
    }
    MeasureSpace::new(out).expect("generated space is valid")
}

fn on_cells<R: Rng + ?Sized, T: Clone>(
    rng: &mut R,
    space: &MeasureSpace,
    grid: i64,
    max_pieces: usize,
    mut value: impl FnMut(&mut R) -> T,
) -> Vec<OnCell<T>> {
    space
        .cells()
        .iter()
        .map(|c| {
            if c.kind.has_inner() {
                OnCell::Inner(random_steps(rng, grid, max_pieces, &mut value))
            } else {
                OnCell::Point(value(rng))
            }
        })
        .collect()
}

fn small_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Q> {
    (0..dim).map(|_| q(rng.gen_range(-8..=8), 4)).collect()
}

pub fn random_step_function<R: Rng + ?Sized>(rng: &mut R, space: &MeasureSpace, dim: usize) -> StepFunction {
    let cells = on_cells(rng, space, 8, 3, |r| small_vector(r, dim));
    StepFunction::new(space, dim, cells).expect("generated function has the right shape")
}

pub fn random_correspondence<R: Rng + ?Sized>(
    rng: &mut R,
    space: &MeasureSpace,
    dim: usize,
    branches: usize,
) -> Correspondence {
    let b = (0..branches).map(|_| random_step_function(rng, space, dim)).collect();
    Correspondence::new(space, b).expect("generated correspondence is valid")
}

pub fn random_selection<R: Rng + ?Sized>(rng: &mut R, space: &MeasureSpace, branches: usize) -> Selection {
    let cells = on_cells(rng, space, 8, 3, |r| r.gen_range(0..branches));
    Selection::new(space, cells).expect("generated selection is valid")
}

pub fn random_mixed<R: Rng + ?Sized>(rng: &mut R, space: &MeasureSpace, branches: usize) -> MixedSelection {
    let cells = on_cells(rng, space, 8, 3, |r| random_weights(r, branches, 6));
    MixedSelection::new(space, cells).expect("generated weights are valid")
}

pub fn random_profile<R: Rng + ?Sized>(rng: &mut R, game: &BayesianGame) -> Profile {
    let players =
        (0..game.player_count()).map(|i| random_mixed(rng, game.type_space(i), game.players()[i].actions.len())).collect();
    Profile::new(game, players).expect("generated profile is valid")
}

/// `count` deviations `(player, strategy)`, cycling through the players.
pub fn sample_deviations(game: &BayesianGame, count: usize, seed: u64) -> Vec<(usize, MixedSelection)> {
    let mut r = rng(seed);
    (0..count)
        .map(|d| {
            let i = d % game.player_count();
            (i, random_mixed(&mut r, game.type_space(i), game.players()[i].actions.len()))
        })
        .collect()
}

fn rich_player(name: &str, actions: usize, masses: &[Q]) -> Player {
    Player {
        name: name.into(),
        actions: (1..=actions).map(|a| format!("a{a}")).collect(),
        types: masses
            .iter()
            .enumerate()
            .map(|(c, m)| TypeCell { id: format!("t{c}"), mass: m.clone(), kind: CellKind::Rich })
            .collect(),
    }
}

/// `u_1(a_j, a_j) = 1`, `u_1(a_j, a_{j+1 mod m}) = −1`, otherwise 0.
pub fn cyclic_payoff(m: usize, x1: usize, x2: usize) -> i64 {
    if x1 == x2 {
        1
    } else if x2 == (x1 + 1) % m {
        -1
    } else {
        0
    }
}

/// Type-irrelevant `m × m` cyclic matching pennies with independent uniform types.
pub fn cyclic_pennies(m: usize, masses1: &[Q], masses2: &[Q]) -> BayesianGame {
    let players = vec![rich_player("1", m, masses1), rich_player("2", m, masses2)];
    BayesianGame::type_irrelevant(players, |i, x| {
        let v = qi(cyclic_payoff(m, x[0], x[1]));
        if i == 0 { v } else { -v }
    })
    .expect("cyclic pennies is a valid game")
}

/// Matching pennies with a density that is affine in player 1's coordinate on one cell and
/// in player 2's coordinate on another, so both players have a saturated cell.
pub fn injective_pennies() -> BayesianGame {
    let players = vec![rich_player("1", 2, &[q(1, 2), q(1, 2)]), rich_player("2", 2, &[q(1, 3), q(1, 3), q(1, 3)])];
    let (s1, s2) = (0, 1);
    // rows: player 1 cells; columns: player 2 cells
    let density = vec![
        Entry::affine(q(1, 2), qi(1), s1),
        Entry::affine(q(3, 2), qi(-1), s1),
        Entry::affine(q(1, 2), qi(1), s2),
        Entry::Const(qi(1)),
        Entry::Const(qi(1)),
        Entry::affine(q(3, 2), qi(-1), s2),
    ];
    let units = density.len();
    let payoffs = (0..2)
        .map(|i| {
            (0..4)
                .flat_map(|x| {
                    let v = qi(cyclic_payoff(2, x / 2, x % 2));
                    let v = if i == 0 { v } else { -v };
                    std::iter::repeat_n(Entry::Const(v), units)
                })
                .collect()
        })
        .collect();
    BayesianGame::new(players, density, payoffs).expect("injective pennies is a valid game")
}

/// A two-player zero-sum game with random constant payoffs per unit.
pub fn random_zero_sum<R: Rng + ?Sized>(rng: &mut R, cells: [usize; 2], actions: [usize; 2]) -> BayesianGame {
    let players = vec![
        rich_player("1", actions[0], &random_masses(rng, cells[0], 12)),
        rich_player("2", actions[1], &random_masses(rng, cells[1], 12)),
    ];
    let units = cells[0] * cells[1];
    let profiles = actions[0] * actions[1];
    let u1: Vec<Entry> = (0..units * profiles).map(|_| Entry::Const(q(rng.gen_range(-6..=6), 2))).collect();
    let u2 = u1.iter().map(Entry::neg).collect();
    BayesianGame::new(players, vec![Entry::Const(Q::one()); units], vec![u1, u2]).expect("zero-sum game is valid")
}

/// `u_i(x, t) = Φ(x, t) + p_i(x_i, t_i)` with a common potential `Φ` and private terms; with
/// `affine`, each private term is affine in the player's own coordinate.
pub fn random_potential<R: Rng + ?Sized>(rng: &mut R, cells: &[usize], actions: &[usize], affine: bool) -> BayesianGame {
    let players: Vec<Player> = cells
        .iter()
        .zip(actions)
        .enumerate()
        .map(|(i, (&c, &k))| rich_player(&format!("{}", i + 1), k, &random_masses(rng, c, 12)))
        .collect();
    let n = players.len();
    let shell = BayesianGame::type_irrelevant(players.clone(), |_, _| Q::zero()).expect("shell game is valid");
    let units = shell.unit_count();
    let profiles = shell.profile_count();
    let phi: Vec<Q> = (0..units * profiles).map(|_| q(rng.gen_range(-4..=4), 2)).collect();
    let private: Vec<Vec<Vec<(Q, Q)>>> = (0..n)
        .map(|i| {
            (0..cells[i])
                .map(|_| {
                    (0..actions[i])
                        .map(|_| {
                            let b = if affine { q(rng.gen_range(-4..=4), 2) } else { Q::zero() };
                            (q(rng.gen_range(-4..=4), 4), b)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let payoffs = (0..n)
        .map(|i| {
            let mut t = Vec::with_capacity(units * profiles);
            for x in 0..profiles {
                let acts = shell.profile_actions(x);
                for u in 0..units {
                    let c = shell.unit_cells(u)[i];
                    let (a, b) = &private[i][c][acts[i]];
                    t.push(Entry::affine(&phi[x * units + u] + a, b.clone(), i));
                }
            }
            t
        })
        .collect();
    BayesianGame::new(players, vec![Entry::Const(Q::one()); units], payoffs).expect("potential game is valid")
}
