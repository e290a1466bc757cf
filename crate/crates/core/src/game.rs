//! Finite-action Bayesian games with finitely-presented type spaces.
//!
//! Every player's type space is a list of cells of total mass 1. The prior is given by a
//! density `q` against the product of the type measures, one entry per tuple of cells, and
//! each payoff `u_i` has one entry per (action profile, cell tuple). An entry is either a
//! constant or affine in a single player's inner coordinate. Payoffs enter the analysis only
//! through the density-weighted payoffs `w_i = u_i·q`, so a product of two affine entries
//! (which would be quadratic) is rejected.
//!
//! The inter-player information `𝒢_i` is derived from the data: two cells of player `i`
//! share a block when every opponent's `w_j` agrees on them, and a cell on which some
//! opponent's `w_j` is affine in `i`'s own coordinate is saturated.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};
use serde::Serialize;

use crate::correspondence::MixedSelection;
use crate::error::{Error, Result};
use crate::measure::{check_shape, conditional_expectation, Cell, CellKind, MeasureSpace, OnCell, StepFunction};
use crate::rational::{half, Rat, Q};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entry {
    Const(Q),
    /// `a + b·s` where `s` is `player`'s inner coordinate in its cell.
    Affine { a: Q, b: Q, player: usize },
}

impl Entry {
    pub fn affine(a: Q, b: Q, player: usize) -> Entry {
        if b.is_zero() {
            Entry::Const(a)
        } else {
            Entry::Affine { a, b, player }
        }
    }

    /// Average over the inner coordinate.
    pub fn mean(&self) -> Q {
        match self {
            Entry::Const(a) => a.clone(),
            Entry::Affine { a, b, .. } => a + b * half(),
        }
    }

    pub fn affine_in(&self) -> Option<usize> {
        match self {
            Entry::Const(_) => None,
            Entry::Affine { player, .. } => Some(*player),
        }
    }

    fn parts(&self) -> (Q, Q) {
        match self {
            Entry::Const(a) => (a.clone(), Q::zero()),
            Entry::Affine { a, b, .. } => (a.clone(), b.clone()),
        }
    }

    pub fn mul(&self, other: &Entry) -> Option<Entry> {
        match (self, other) {
            (Entry::Const(x), Entry::Const(y)) => Some(Entry::Const(x * y)),
            (Entry::Const(c), Entry::Affine { a, b, player }) | (Entry::Affine { a, b, player }, Entry::Const(c)) => {
                Some(Entry::affine(a * c, b * c, *player))
            }
            _ => None,
        }
    }

    pub fn neg(&self) -> Entry {
        match self {
            Entry::Const(a) => Entry::Const(-a),
            Entry::Affine { a, b, player } => Entry::Affine { a: -a, b: -b, player: *player },
        }
    }
}

/// `a + b·s` on a player's own inner coordinate.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineValue {
    pub a: Q,
    pub b: Q,
}

impl AffineValue {
    pub fn at(&self, s: &Q) -> Q {
        &self.a + &self.b * s
    }

    /// `∫_lo^hi (a + b·s) ds`.
    pub fn integral(&self, lo: &Q, hi: &Q) -> Q {
        (hi - lo) * self.at(&((lo + hi) * half()))
    }

    pub fn is_constant(&self) -> bool {
        self.b.is_zero()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeCell {
    pub id: String,
    pub mass: Q,
    pub kind: CellKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Player {
    pub name: String,
    pub actions: Vec<String>,
    pub types: Vec<TypeCell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BayesianGame {
    players: Vec<Player>,
    density: Vec<Entry>,
    payoffs: Vec<Vec<Entry>>,
    weighted: Vec<Vec<Entry>>,
    info: InterPlayerInfo,
}

/// Mixed-radix indexing helper.
fn unflatten(mut idx: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for (o, &r) in out.iter_mut().zip(radices).rev() {
        *o = idx % r;
        idx /= r;
    }
    out
}

fn flatten(digits: &[usize], radices: &[usize]) -> usize {
    digits.iter().zip(radices).fold(0, |acc, (&d, &r)| acc * r + d)
}

impl BayesianGame {
    /// `density[u]` per cell tuple `u`; `payoffs[i][x·units + u]` per action profile `x`.
    pub fn new(players: Vec<Player>, density: Vec<Entry>, payoffs: Vec<Vec<Entry>>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidGame(msg));
        if players.len() < 2 {
            return bad("a game needs at least two players".into());
        }
        for (i, p) in players.iter().enumerate() {
            if p.actions.is_empty() {
                return bad(format!("players[{i}] has no actions"));
            }
            if p.types.is_empty() {
                return bad(format!("players[{i}] has no type cells"));
            }
            let mut ids: Vec<&str> = p.types.iter().map(|t| t.id.as_str()).collect();
            ids.sort();
            ids.dedup();
            if ids.len() != p.types.len() {
                return bad(format!("players[{i}] has duplicate type ids"));
            }
            if p.types.iter().any(|t| !t.mass.is_positive()) {
                return bad(format!("players[{i}] has a type cell of non-positive mass"));
            }
            if !p.types.iter().map(|t| &t.mass).sum::<Q>().is_one() {
                return bad(format!("players[{i}] type masses do not sum to 1"));
            }
            if p.types.iter().any(|t| t.kind == CellKind::Saturated) {
                return bad(format!("players[{i}]: saturation is derived, not declared"));
            }
        }
        let mut game = BayesianGame { players, density, payoffs, weighted: vec![], info: InterPlayerInfo::default() };
        let units = game.unit_count();
        let profiles = game.profile_count();
        if game.density.len() != units {
            return bad(format!("density has {} entries, expected {units}", game.density.len()));
        }
        if game.payoffs.len() != game.players.len() {
            return bad(format!("{} payoff tables for {} players", game.payoffs.len(), game.players.len()));
        }
        for (i, t) in game.payoffs.iter().enumerate() {
            if t.len() != units * profiles {
                return bad(format!("payoffs[{i}] has {} entries, expected {}", t.len(), units * profiles));
            }
        }
        for u in 0..units {
            let cells = game.unit_cells(u);
            let check = |e: &Entry, what: &str| -> Result<()> {
                if let Some(k) = e.affine_in() {
                    if k >= game.players.len() {
                        return Err(Error::InvalidGame(format!("{what}: affine in unknown player {k}")));
                    }
                    if game.players[k].types[cells[k]].kind == CellKind::PointMass {
                        return Err(Error::InvalidGame(format!("{what}: affine in a point-mass coordinate")));
                    }
                }
                Ok(())
            };
            check(&game.density[u], &format!("density[{u}]"))?;
            for (i, t) in game.payoffs.iter().enumerate() {
                for x in 0..profiles {
                    check(&t[x * units + u], &format!("payoffs[{i}][{}]", x * units + u))?;
                }
            }
            let (a, b) = game.density[u].parts();
            if a.is_negative() || (&a + &b).is_negative() {
                return bad(format!("density[{u}] is negative somewhere"));
            }
        }
        game.check_marginals()?;
        let mut weighted = Vec::with_capacity(game.players.len());
        for (i, t) in game.payoffs.iter().enumerate() {
            let mut w = Vec::with_capacity(t.len());
            for (idx, e) in t.iter().enumerate() {
                let q = &game.density[idx % units];
                w.push(e.mul(q).ok_or_else(|| {
                    Error::InvalidGame(format!("payoffs[{i}][{idx}] and the density are both affine"))
                })?);
            }
            weighted.push(w);
        }
        game.weighted = weighted;
        game.info = derive_info(&game)?;
        Ok(game)
    }

    /// Payoff matrices that do not depend on types, with a constant density of 1.
    pub fn type_irrelevant(players: Vec<Player>, payoff: impl Fn(usize, &[usize]) -> Q) -> Result<Self> {
        let mut g = BayesianGame { players, density: vec![], payoffs: vec![], weighted: vec![], info: InterPlayerInfo::default() };
        let units = g.unit_count();
        let profiles = g.profile_count();
        let payoffs = (0..g.players.len())
            .map(|i| {
                (0..profiles)
                    .flat_map(|x| {
                        let v = payoff(i, &g.profile_actions(x));
                        std::iter::repeat_n(Entry::Const(v), units)
                    })
                    .collect()
            })
            .collect();
        g.density = vec![Entry::Const(Q::one()); units];
        BayesianGame::new(g.players, g.density, payoffs)
    }

    fn check_marginals(&self) -> Result<()> {
        let units = self.unit_count();
        for (i, p) in self.players.iter().enumerate() {
            let mut acc = vec![AffineValue::default(); p.types.len()];
            for u in 0..units {
                let cells = self.unit_cells(u);
                let w: Q = cells.iter().enumerate().filter(|(j, _)| *j != i).map(|(j, &c)| &self.players[j].types[c].mass).product();
                let e = &self.density[u];
                let slot = &mut acc[cells[i]];
                match e.affine_in() {
                    Some(k) if k == i => {
                        let (a, b) = e.parts();
                        slot.a += &w * a;
                        slot.b += &w * b;
                    }
                    _ => slot.a += &w * e.mean(),
                }
            }
            for (c, v) in acc.iter().enumerate() {
                if !v.a.is_one() || !v.b.is_zero() {
                    return Err(Error::InvalidGame(format!(
                        "marginal condition fails for player {} at type {:?}",
                        p.name, p.types[c].id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn player_count(&self) -> usize {
        self.players.len()
    }

    pub fn density(&self) -> &[Entry] {
        &self.density
    }

    pub fn payoffs(&self, i: usize) -> &[Entry] {
        &self.payoffs[i]
    }

    /// Density-weighted payoffs `w_i = u_i·q`, indexed like the payoff tables.
    pub fn weighted(&self, i: usize) -> &[Entry] {
        &self.weighted[i]
    }

    pub fn info(&self) -> &InterPlayerInfo {
        &self.info
    }

    fn type_radices(&self) -> Vec<usize> {
        self.players.iter().map(|p| p.types.len()).collect()
    }

    fn action_radices(&self) -> Vec<usize> {
        self.players.iter().map(|p| p.actions.len()).collect()
    }

    pub fn unit_count(&self) -> usize {
        self.players.iter().map(|p| p.types.len()).product()
    }

    pub fn profile_count(&self) -> usize {
        self.players.iter().map(|p| p.actions.len()).product()
    }

    pub fn unit_cells(&self, u: usize) -> Vec<usize> {
        unflatten(u, &self.type_radices())
    }

    pub fn unit_index(&self, cells: &[usize]) -> usize {
        flatten(cells, &self.type_radices())
    }

    pub fn profile_actions(&self, x: usize) -> Vec<usize> {
        unflatten(x, &self.action_radices())
    }

    pub fn profile_index(&self, actions: &[usize]) -> usize {
        flatten(actions, &self.action_radices())
    }

    /// Player `i`'s type cells as a measure space with the derived information blocks.
    pub fn type_space(&self, i: usize) -> &MeasureSpace {
        &self.info.players[i].space
    }

    pub fn is_two_player_zero_sum(&self) -> bool {
        self.players.len() == 2 && self.weighted[0].iter().zip(&self.weighted[1]).all(|(a, b)| *a == b.neg())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InterPlayerInfo {
    pub players: Vec<PlayerSpace>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlayerSpace {
    /// Type cells with their derived blocks and kinds.
    pub space: MeasureSpace,
}

fn derive_info(game: &BayesianGame) -> Result<InterPlayerInfo> {
    let n = game.players.len();
    let units = game.unit_count();
    let profiles = game.profile_count();
    let mut players = Vec::with_capacity(n);
    for i in 0..n {
        let p = &game.players[i];
        let mut keys: Vec<Vec<&Entry>> = vec![Vec::new(); p.types.len()];
        let mut saturated = vec![false; p.types.len()];
        for j in (0..n).filter(|&j| j != i) {
            for x in 0..profiles {
                for u in 0..units {
                    let c = game.unit_cells(u)[i];
                    let e = &game.weighted[j][x * units + u];
                    if e.affine_in() == Some(i) {
                        saturated[c] = true;
                    }
                    keys[c].push(e);
                }
            }
        }
        let mut labels: BTreeMap<&Vec<&Entry>, usize> = BTreeMap::new();
        let mut next = 0;
        let mut cells = Vec::with_capacity(p.types.len());
        for (c, t) in p.types.iter().enumerate() {
            let block = if saturated[c] {
                next += 1;
                next - 1
            } else {
                *labels.entry(&keys[c]).or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            };
            let kind = if saturated[c] { CellKind::Saturated } else { t.kind };
            cells.push(Cell { id: t.id.clone(), mass: t.mass.clone(), kind, g_block: format!("b{block}") });
        }
        players.push(PlayerSpace { space: MeasureSpace::new(cells)? });
    }
    Ok(InterPlayerInfo { players })
}

/// The derived inter-player information of every player.
pub fn derive_interplayer_info(game: &BayesianGame) -> InterPlayerInfo {
    game.info.clone()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockReport {
    pub label: String,
    pub cells: Vec<String>,
    pub mass: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlayerInfoReport {
    pub player: String,
    pub blocks: Vec<BlockReport>,
    pub kinds: BTreeMap<String, &'static str>,
}

impl InterPlayerInfo {
    pub fn report(&self, game: &BayesianGame) -> Vec<PlayerInfoReport> {
        self.players
            .iter()
            .zip(game.players())
            .map(|(ps, p)| PlayerInfoReport {
                player: p.name.clone(),
                blocks: ps
                    .space
                    .blocks()
                    .iter()
                    .map(|b| BlockReport {
                        label: b.label.clone(),
                        cells: b.cells.iter().map(|&c| ps.space.cell(c).id.clone()).collect(),
                        mass: Rat(b.mass.clone()),
                    })
                    .collect(),
                kinds: ps.space.cells().iter().map(|c| (c.id.clone(), c.kind.label())).collect(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoarserInfo {
    pub player: String,
    pub passes: bool,
    pub witness: Option<String>,
}

/// A player passes when its type space has no atom of its derived information.
pub fn coarser_info_check(game: &BayesianGame) -> Vec<CoarserInfo> {
    game.players
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let space = game.type_space(i);
            let witness = space.has_g_atom().map(|c| space.cell(c).id.clone());
            CoarserInfo { player: p.name.clone(), passes: witness.is_none(), witness }
        })
        .collect()
}

/// A behavioral strategy per player: action weights per piece of each type cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub players: Vec<MixedSelection>,
}

impl Profile {
    pub fn new(game: &BayesianGame, players: Vec<MixedSelection>) -> Result<Self> {
        if players.len() != game.player_count() {
            return Err(Error::InvalidStrategy(format!("{} strategies for {} players", players.len(), game.player_count())));
        }
        for (i, m) in players.iter().enumerate() {
            check_shape(game.type_space(i), m.cells())?;
            m.check_weights(game.type_space(i), Some(game.players[i].actions.len()))?;
        }
        Ok(Profile { players })
    }

    /// Every player mixing uniformly at every type.
    pub fn uniform(game: &BayesianGame) -> Self {
        let players = game
            .players
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let k = p.actions.len();
                let w = vec![Q::new(1.into(), (k as i64).into()); k];
                MixedSelection::constant(game.type_space(i), w).expect("uniform weights are valid")
            })
            .collect();
        Profile { players }
    }

    /// Every player takes the given action at every type.
    pub fn pure_constant(game: &BayesianGame, actions: &[usize]) -> Self {
        let players = actions
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let k = game.players[i].actions.len();
                let w = (0..k).map(|j| if j == a { Q::one() } else { Q::zero() }).collect();
                MixedSelection::constant(game.type_space(i), w).expect("one-hot weights are valid")
            })
            .collect();
        Profile { players }
    }

    pub fn with_player(&self, i: usize, m: MixedSelection) -> Profile {
        let mut players = self.players.clone();
        players[i] = m;
        Profile { players }
    }
}

/// `E(f_i | 𝒢_i)` of a behavioral strategy, as a strategy again.
pub fn conditional_strategy(game: &BayesianGame, i: usize, m: &MixedSelection) -> Result<MixedSelection> {
    let space = game.type_space(i);
    let k = game.players[i].actions.len();
    let f = StepFunction::new(space, k, m.cells().to_vec())?;
    let e = conditional_expectation(space, &f)?;
    Ok(MixedSelection::from_parts(e.cells().to_vec()))
}

/// Replaces every strategy by its conditional expectation given the player's information.
pub fn condition_profile(game: &BayesianGame, profile: &Profile) -> Result<Profile> {
    let players =
        profile.players.iter().enumerate().map(|(i, m)| conditional_strategy(game, i, m)).collect::<Result<_>>()?;
    Ok(Profile { players })
}

/// Per player, cell and action: `∫ f(s)(x) ds` and `∫ s·f(s)(x) ds` over the cell.
struct Moments {
    mass: Vec<Vec<Vec<Q>>>,
    first: Vec<Vec<Vec<Q>>>,
}

fn moments(game: &BayesianGame, profile: &Profile) -> Moments {
    let mut mass = Vec::new();
    let mut first = Vec::new();
    for (i, m) in profile.players.iter().enumerate() {
        let k = game.players[i].actions.len();
        let (mut pm, mut pf) = (Vec::new(), Vec::new());
        for cell in m.cells() {
            let mut f0 = vec![Q::zero(); k];
            let mut f1 = vec![Q::zero(); k];
            match cell {
                OnCell::Point(w) => f0.clone_from(w),
                OnCell::Inner(steps) => {
                    for p in steps.pieces() {
                        let len = p.len();
                        let m1 = (&p.hi * &p.hi - &p.lo * &p.lo) * half();
                        for x in 0..k {
                            f0[x] += &p.value[x] * &len;
                            f1[x] += &p.value[x] * &m1;
                        }
                    }
                }
            }
            pm.push(f0);
            pf.push(f1);
        }
        mass.push(pm);
        first.push(pf);
    }
    Moments { mass, first }
}

/// `V_i(x_i, ·)` on every cell of player `i`, as affine functions of `i`'s own coordinate.
/// Indexed `[cell][action]`.
pub fn interim_table(game: &BayesianGame, i: usize, profile: &Profile) -> Vec<Vec<AffineValue>> {
    let mo = moments(game, profile);
    let n = game.player_count();
    let units = game.unit_count();
    let k = game.players[i].actions.len();
    let mut table = vec![vec![AffineValue::default(); k]; game.players[i].types.len()];
    for u in 0..units {
        let cells = game.unit_cells(u);
        let w: Q = (0..n).filter(|&j| j != i).map(|j| &game.players[j].types[cells[j]].mass).product();
        for x in 0..game.profile_count() {
            let acts = game.profile_actions(x);
            let e = &game.weighted[i][x * units + u];
            let affine = e.affine_in();
            let mut factor = w.clone();
            for j in (0..n).filter(|&j| j != i && Some(j) != affine) {
                factor *= &mo.mass[j][cells[j]][acts[j]];
                if factor.is_zero() {
                    break;
                }
            }
            if factor.is_zero() {
                continue;
            }
            let slot = &mut table[cells[i]][acts[i]];
            match e {
                Entry::Const(a) => slot.a += factor * a,
                Entry::Affine { a, b, player } if *player == i => {
                    slot.a += &factor * a;
                    slot.b += factor * b;
                }
                Entry::Affine { a, b, player } => {
                    let j = *player;
                    slot.a += factor * (a * &mo.mass[j][cells[j]][acts[j]] + b * &mo.first[j][cells[j]][acts[j]]);
                }
            }
        }
    }
    table
}

/// `V_i(x_i, ·)` on one cell.
pub fn interim_payoff(game: &BayesianGame, i: usize, action: usize, cell: usize, profile: &Profile) -> AffineValue {
    interim_table(game, i, profile)[cell][action].clone()
}

/// `∫ Σ_x f(s)(x)·V_x(s) ds` over one cell.
pub fn played_value(values: &[AffineValue], strategy: &OnCell<Vec<Q>>) -> Q {
    match strategy {
        OnCell::Point(w) => w.iter().zip(values).map(|(wx, v)| wx * &v.a).sum(),
        OnCell::Inner(steps) => steps
            .pieces()
            .map(|p| p.value.iter().zip(values).map(|(wx, v)| wx * v.integral(&p.lo, &p.hi)).sum::<Q>())
            .sum(),
    }
}

/// `U_i(f)` for every player.
pub fn expected_payoff(game: &BayesianGame, profile: &Profile) -> Vec<Q> {
    (0..game.player_count())
        .map(|i| {
            let table = interim_table(game, i, profile);
            game.players[i]
                .types
                .iter()
                .enumerate()
                .map(|(c, t)| &t.mass * played_value(&table[c], profile.players[i].cell(c)))
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};
    use crate::steps::Steps;

    fn player(name: &str, actions: &[&str], types: &[(&str, Q)]) -> Player {
        Player {
            name: name.into(),
            actions: actions.iter().map(|s| s.to_string()).collect(),
            types: types.iter().map(|(id, m)| TypeCell { id: id.to_string(), mass: m.clone(), kind: CellKind::Rich }).collect(),
        }
    }

    fn pennies() -> BayesianGame {
        let p1 = player("1", &["a1", "a2"], &[("A", qi(1))]);
        let p2 = player("2", &["a1", "a2"], &[("A", qi(1))]);
        BayesianGame::type_irrelevant(vec![p1, p2], |i, x| {
            let v = if x[0] == x[1] { qi(1) } else { qi(-1) };
            if i == 0 { v } else { -v }
        })
        .unwrap()
    }

    #[test]
    fn matching_pennies_payoffs() {
        let g = pennies();
        let uniform = Profile::uniform(&g);
        assert_eq!(interim_table(&g, 0, &uniform)[0], vec![AffineValue::default(); 2]);
        assert_eq!(expected_payoff(&g, &uniform), vec![qi(0), qi(0)]);

        let both_a1 = Profile::pure_constant(&g, &[0, 0]);
        let v = interim_table(&g, 0, &both_a1);
        assert_eq!(v[0][0].a, qi(1));
        assert_eq!(v[0][1].a, qi(-1));
        assert_eq!(expected_payoff(&g, &both_a1), vec![qi(1), qi(-1)]);

        let mixed = Profile::pure_constant(&g, &[0, 0])
            .with_player(1, MixedSelection::constant(g.type_space(1), vec![q(3, 4), q(1, 4)]).unwrap());
        assert_eq!(interim_payoff(&g, 0, 0, 0, &mixed).a, q(1, 2));

        let p1_a1 = Profile::uniform(&g).with_player(0, Profile::pure_constant(&g, &[0, 0]).players[0].clone());
        assert_eq!(expected_payoff(&g, &p1_a1), vec![qi(0), qi(0)]);
        assert!(g.is_two_player_zero_sum());
    }

    #[test]
    fn trivial_information_for_type_irrelevant_games() {
        let p1 = player("1", &["a1", "a2"], &[("A", q(1, 2)), ("B", q(1, 2))]);
        let p2 = player("2", &["a1", "a2"], &[("A", q(1, 3)), ("B", q(2, 3))]);
        let g = BayesianGame::type_irrelevant(vec![p1, p2], |_, x| qi(x[0] as i64 + x[1] as i64)).unwrap();
        for i in 0..2 {
            assert_eq!(g.type_space(i).blocks().len(), 1);
            assert_eq!(g.type_space(i).has_g_atom(), None);
        }
        assert!(coarser_info_check(&g).iter().all(|c| c.passes));
    }

    #[test]
    fn blocks_group_equal_profiles() {
        // player 2's payoff depends on player 1's cell C only
        let p1 = player("1", &["a"], &[("A", q(1, 3)), ("B", q(1, 3)), ("C", q(1, 3))]);
        let p2 = player("2", &["a"], &[("A", qi(1))]);
        let units = 3;
        let density = vec![Entry::Const(qi(1)); units];
        let u1 = vec![Entry::Const(qi(0)); units];
        let u2 = vec![Entry::Const(qi(0)), Entry::Const(qi(0)), Entry::Const(qi(5))];
        let g = BayesianGame::new(vec![p1, p2], density, vec![u1, u2]).unwrap();
        let blocks: Vec<Vec<usize>> = g.type_space(0).blocks().iter().map(|b| b.cells.clone()).collect();
        assert_eq!(blocks, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn injective_payoffs_saturate() {
        let p1 = player("1", &["a"], &[("A", qi(1))]);
        let p2 = player("2", &["a", "b"], &[("A", qi(1))]);
        let density = vec![Entry::Const(qi(1))];
        let u1 = vec![Entry::Const(qi(0)); 2];
        let u2 = vec![Entry::affine(qi(0), qi(1), 0), Entry::Const(qi(0))];
        let g = BayesianGame::new(vec![p1, p2], density, vec![u1, u2]).unwrap();
        assert_eq!(g.type_space(0).cell(0).kind, CellKind::Saturated);
        let check = coarser_info_check(&g);
        assert!(!check[0].passes && check[1].passes);
        assert_eq!(check[0].witness.as_deref(), Some("A"));
    }

    #[test]
    fn rejects_bad_densities() {
        let p = || vec![player("1", &["a"], &[("A", qi(1))]), player("2", &["a"], &[("A", qi(1))])];
        let zero = vec![Entry::Const(qi(0))];
        assert!(BayesianGame::new(p(), vec![Entry::Const(qi(2))], vec![zero.clone(), zero.clone()]).is_err());
        assert!(BayesianGame::new(p(), vec![Entry::affine(qi(1), qi(1), 0)], vec![zero.clone(), zero.clone()]).is_err());
        let aff = vec![Entry::affine(qi(0), qi(1), 1)];
        let dens = vec![Entry::affine(q(1, 2), qi(1), 0)];
        // marginal for player 1 is affine in its own coordinate, so the game is rejected first
        assert!(BayesianGame::new(p(), dens, vec![aff.clone(), aff]).is_err());
    }

    #[test]
    fn opponent_affine_entries_use_first_moments() {
        // u1 = s2 (player 2's coordinate); player 2 plays a on [0, 1/2), b on [1/2, 1)
        let p1 = player("1", &["a"], &[("A", qi(1))]);
        let p2 = player("2", &["a", "b"], &[("A", qi(1))]);
        let u1 = vec![Entry::affine(qi(0), qi(1), 1), Entry::Const(qi(0))];
        let u2 = vec![Entry::Const(qi(0)); 2];
        let g = BayesianGame::new(vec![p1, p2], vec![Entry::Const(qi(1))], vec![u1, u2]).unwrap();
        let s2 = MixedSelection::new(
            g.type_space(1),
            vec![OnCell::Inner(Steps::new(vec![(q(1, 2), vec![qi(1), qi(0)]), (qi(1), vec![qi(0), qi(1)])]).unwrap())],
        )
        .unwrap();
        let prof = Profile::uniform(&g).with_player(1, s2);
        // ∫_0^½ s ds = 1/8
        assert_eq!(expected_payoff(&g, &prof)[0], q(1, 8));
    }
}
