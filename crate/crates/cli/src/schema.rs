//! JSON input documents and their conversion into library objects.
//!
//! Rationals are `"p/q"` strings or integers. Data attached to a cell is either a list of
//! `{upto, ...}` pieces (cells with an inner coordinate) or a bare value (point masses).
//! Every error carries the JSON path of the offending value.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use condexp::correspondence::{Correspondence, MixedSelection, Selection};
use condexp::game::{BayesianGame, Entry, Player, Profile, TypeCell};
use condexp::measure::{Cell, CellKind, MeasureSpace, OnCell, StepFunction};
use condexp::rational::unrats;
use condexp::steps::Steps;
use condexp::{Rat, Q};

#[derive(Debug)]
pub struct InputError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for InputError {}

pub type Parsed<T> = Result<T, InputError>;

fn at(path: impl Into<String>, message: impl fmt::Display) -> InputError {
    InputError { path: path.into(), message: message.to_string() }
}

/// Parses `text` into `T`, reporting the JSON path of the first schema violation.
pub fn parse<T: DeserializeOwned>(text: &str) -> Parsed<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let p = e.path().to_string();
        let path = if p == "." { "$".to_string() } else { format!("$.{p}") };
        at(path, e.into_inner())
    })
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum KindDoc {
    Rich,
    Saturated,
    PointMass,
}

impl From<KindDoc> for CellKind {
    fn from(k: KindDoc) -> Self {
        match k {
            KindDoc::Rich => CellKind::Rich,
            KindDoc::Saturated => CellKind::Saturated,
            KindDoc::PointMass => CellKind::PointMass,
        }
    }
}

impl From<CellKind> for KindDoc {
    fn from(k: CellKind) -> Self {
        match k {
            CellKind::Rich => KindDoc::Rich,
            CellKind::Saturated => KindDoc::Saturated,
            CellKind::PointMass => KindDoc::PointMass,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CellDoc {
    pub id: String,
    pub mass: Rat,
    pub kind: KindDoc,
    pub g_block: String,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDoc {
    pub cells: Vec<CellDoc>,
}

impl SpaceDoc {
    pub fn build(&self, path: &str) -> Parsed<MeasureSpace> {
        let cells = self
            .cells
            .iter()
            .map(|c| Cell { id: c.id.clone(), mass: c.mass.0.clone(), kind: c.kind.into(), g_block: c.g_block.clone() })
            .collect();
        MeasureSpace::new(cells).map_err(|e| at(format!("{path}.cells"), e))
    }

    pub fn from_space(space: &MeasureSpace) -> Self {
        SpaceDoc {
            cells: space
                .cells()
                .iter()
                .map(|c| CellDoc { id: c.id.clone(), mass: Rat(c.mass.clone()), kind: c.kind.into(), g_block: c.g_block.clone() })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VecPiece {
    pub upto: Rat,
    pub v: Vec<Rat>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IndexPiece {
    pub upto: Rat,
    pub k: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WeightPiece {
    pub upto: Rat,
    pub w: Vec<Rat>,
}

/// Pieces on an inner coordinate, or one value on a point mass.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum CellData<P, V> {
    Pieces(Vec<P>),
    Point(V),
}

trait PieceDoc {
    type Value;
    fn upto(&self) -> &Rat;
    fn value(&self) -> Self::Value;
}

impl PieceDoc for VecPiece {
    type Value = Vec<Q>;
    fn upto(&self) -> &Rat {
        &self.upto
    }
    fn value(&self) -> Vec<Q> {
        unrats(&self.v)
    }
}

impl PieceDoc for IndexPiece {
    type Value = usize;
    fn upto(&self) -> &Rat {
        &self.upto
    }
    fn value(&self) -> usize {
        self.k
    }
}

impl PieceDoc for WeightPiece {
    type Value = Vec<Q>;
    fn upto(&self) -> &Rat {
        &self.upto
    }
    fn value(&self) -> Vec<Q> {
        unrats(&self.w)
    }
}

fn on_cells<P: PieceDoc, V>(
    space: &MeasureSpace,
    values: &BTreeMap<String, CellData<P, V>>,
    path: &str,
    point: impl Fn(&V) -> P::Value,
) -> Parsed<Vec<OnCell<P::Value>>> {
    for id in values.keys() {
        if space.cell_index(id).is_err() {
            return Err(at(format!("{path}.{id}"), "unknown cell"));
        }
    }
    space
        .cells()
        .iter()
        .map(|c| {
            let p = format!("{path}.{}", c.id);
            match (values.get(&c.id), c.kind.has_inner()) {
                (None, _) => Err(at(p, "missing value for cell")),
                (Some(CellData::Pieces(ps)), true) => {
                    let pieces = ps.iter().map(|x| (x.upto().0.clone(), x.value())).collect();
                    Steps::new(pieces).map(OnCell::Inner).map_err(|e| at(p, e))
                }
                (Some(CellData::Point(v)), false) => Ok(OnCell::Point(point(v))),
                (Some(CellData::Point(v)), true) => Ok(OnCell::Inner(Steps::constant(point(v)))),
                (Some(CellData::Pieces(_)), false) => Err(at(p, "point-mass cell takes a single value, not pieces")),
            }
        })
        .collect()
}

fn cell_data<T, P, V>(cell: &OnCell<T>, piece: impl Fn(Rat, &T) -> P, point: impl Fn(&T) -> V) -> CellData<P, V> {
    match cell {
        OnCell::Inner(s) => CellData::Pieces(s.pieces().map(|p| piece(Rat(p.hi), p.value)).collect()),
        OnCell::Point(v) => CellData::Point(point(v)),
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StepDoc {
    pub dim: usize,
    pub values: BTreeMap<String, CellData<VecPiece, Vec<Rat>>>,
}

impl StepDoc {
    pub fn build(&self, space: &MeasureSpace, path: &str) -> Parsed<StepFunction> {
        let cells = on_cells(space, &self.values, &format!("{path}.values"), |v: &Vec<Rat>| unrats(v))?;
        StepFunction::new(space, self.dim, cells).map_err(|e| at(path, e))
    }

    pub fn from_function(space: &MeasureSpace, f: &StepFunction) -> Self {
        let values = space
            .cells()
            .iter()
            .zip(f.cells())
            .map(|(c, d)| (c.id.clone(), cell_data(d, |upto, v| VecPiece { upto, v: condexp::rational::rats(v) }, |v| condexp::rational::rats(v))))
            .collect();
        StepDoc { dim: f.dim(), values }
    }
}

/// A pure selection: branch (or action) index per piece.
pub type SelectionDoc = BTreeMap<String, CellData<IndexPiece, usize>>;

/// A mixed selection: weight vector per piece.
pub type MixedDoc = BTreeMap<String, CellData<WeightPiece, Vec<Rat>>>;

pub fn build_selection(space: &MeasureSpace, doc: &SelectionDoc, path: &str) -> Parsed<Selection> {
    let cells = on_cells(space, doc, path, |k: &usize| *k)?;
    Selection::new(space, cells).map_err(|e| at(path, e))
}

pub fn build_mixed(space: &MeasureSpace, doc: &MixedDoc, path: &str) -> Parsed<MixedSelection> {
    let cells = on_cells(space, doc, path, |v: &Vec<Rat>| unrats(v))?;
    MixedSelection::new(space, cells).map_err(|e| at(path, e))
}

pub fn selection_doc(space: &MeasureSpace, s: &Selection) -> SelectionDoc {
    space.cells().iter().zip(s.cells()).map(|(c, d)| (c.id.clone(), cell_data(d, |upto, k| IndexPiece { upto, k: *k }, |k| *k))).collect()
}

pub fn mixed_doc(space: &MeasureSpace, m: &MixedSelection) -> MixedDoc {
    space
        .cells()
        .iter()
        .zip(m.cells())
        .map(|(c, d)| (c.id.clone(), cell_data(d, |upto, w| WeightPiece { upto, w: condexp::rational::rats(w) }, |w| condexp::rational::rats(w))))
        .collect()
}

/// Input of `condexp-set` and `convexify`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrespondenceDoc {
    pub space: SpaceDoc,
    pub branches: Vec<StepDoc>,
    /// Candidate conditional expectation for the membership test.
    #[serde(default)]
    pub h: Option<StepDoc>,
    #[serde(default)]
    pub s1: Option<SelectionDoc>,
    #[serde(default)]
    pub s2: Option<SelectionDoc>,
}

pub struct CorrespondenceInput {
    pub space: MeasureSpace,
    pub f: Correspondence,
    pub h: Option<StepFunction>,
    pub s1: Option<Selection>,
    pub s2: Option<Selection>,
}

impl CorrespondenceDoc {
    pub fn build(&self) -> Parsed<CorrespondenceInput> {
        let space = self.space.build("$.space")?;
        let branches = self
            .branches
            .iter()
            .enumerate()
            .map(|(k, b)| b.build(&space, &format!("$.branches[{k}]")))
            .collect::<Parsed<Vec<_>>>()?;
        let f = Correspondence::new(&space, branches).map_err(|e| at("$.branches", e))?;
        let h = self.h.as_ref().map(|h| h.build(&space, "$.h")).transpose()?;
        let s1 = self.s1.as_ref().map(|s| build_selection(&space, s, "$.s1")).transpose()?;
        let s2 = self.s2.as_ref().map(|s| build_selection(&space, s, "$.s2")).transpose()?;
        for (s, p) in [(&s1, "$.s1"), (&s2, "$.s2")] {
            if let Some(s) = s {
                let top = s.cells().iter().flat_map(|c| c.values().copied().collect::<Vec<_>>()).max().unwrap_or(0);
                if top >= f.branch_count() {
                    return Err(at(p, format!("branch index {top} out of range ({} branches)", f.branch_count())));
                }
            }
        }
        Ok(CorrespondenceInput { space, f, h, s1, s2 })
    }
}

/// A payoff or density entry: a constant, or `a + b·s` in `player`'s inner coordinate.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum EntryDoc {
    Const(Rat),
    Affine { a: Rat, b: Rat, player: usize },
}

impl EntryDoc {
    fn build(&self) -> Entry {
        match self {
            EntryDoc::Const(c) => Entry::Const(c.0.clone()),
            EntryDoc::Affine { a, b, player } => Entry::affine(a.0.clone(), b.0.clone(), *player),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TypeDoc {
    pub id: String,
    pub mass: Rat,
    #[serde(default = "rich")]
    pub kind: KindDoc,
}

fn rich() -> KindDoc {
    KindDoc::Rich
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerDoc {
    pub name: String,
    pub actions: Vec<String>,
    pub types: Vec<TypeDoc>,
}

/// A finite-action Bayesian game.
///
/// `density[u]` is indexed by cell tuples and `payoffs[i][x·units + u]` by action profile `x`
/// and cell tuple `u`, both in mixed radix with player 1 most significant. A payoff list of
/// length `profiles` is taken to be type-independent; a missing density is `1`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GameDoc {
    pub players: Vec<PlayerDoc>,
    #[serde(default)]
    pub density: Option<Vec<EntryDoc>>,
    pub payoffs: Vec<Vec<EntryDoc>>,
}

impl GameDoc {
    pub fn build(&self) -> Parsed<BayesianGame> {
        let players: Vec<Player> = self
            .players
            .iter()
            .map(|p| Player {
                name: p.name.clone(),
                actions: p.actions.clone(),
                types: p.types.iter().map(|t| TypeCell { id: t.id.clone(), mass: t.mass.0.clone(), kind: t.kind.into() }).collect(),
            })
            .collect();
        let units: usize = players.iter().map(|p| p.types.len()).product();
        let profiles: usize = players.iter().map(|p| p.actions.len()).product();
        let density = match &self.density {
            Some(d) if d.len() != units => {
                return Err(at("$.density", format!("expected {units} entries (one per cell tuple), found {}", d.len())))
            }
            Some(d) => d.iter().map(EntryDoc::build).collect(),
            None => vec![Entry::Const(Q::from_integer(1.into())); units],
        };
        if self.payoffs.len() != players.len() {
            return Err(at("$.payoffs", format!("expected {} payoff lists, found {}", players.len(), self.payoffs.len())));
        }
        let mut payoffs = Vec::with_capacity(players.len());
        for (i, u) in self.payoffs.iter().enumerate() {
            let row: Vec<Entry> = if u.len() == profiles {
                u.iter().flat_map(|e| std::iter::repeat_n(e.build(), units)).collect()
            } else if u.len() == profiles * units {
                u.iter().map(EntryDoc::build).collect()
            } else {
                return Err(at(
                    format!("$.payoffs[{i}]"),
                    format!("expected {profiles} or {} entries, found {}", profiles * units, u.len()),
                ));
            };
            payoffs.push(row);
        }
        BayesianGame::new(players, density, payoffs).map_err(|e| at("$", e))
    }
}

/// A behavioral profile: one mixed selection per player, keyed by type-cell id.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDoc {
    pub strategies: Vec<MixedDoc>,
}

impl ProfileDoc {
    pub fn build(&self, game: &BayesianGame) -> Parsed<Profile> {
        if self.strategies.len() != game.player_count() {
            return Err(at(
                "$.strategies",
                format!("expected {} strategies, found {}", game.player_count(), self.strategies.len()),
            ));
        }
        let players = self
            .strategies
            .iter()
            .enumerate()
            .map(|(i, s)| build_mixed(game.type_space(i), s, &format!("$.strategies[{i}]")))
            .collect::<Parsed<Vec<_>>>()?;
        Profile::new(game, players).map_err(|e| at("$.strategies", e))
    }

    pub fn from_profile(game: &BayesianGame, p: &Profile) -> Self {
        ProfileDoc { strategies: p.players.iter().enumerate().map(|(i, m)| mixed_doc(game.type_space(i), m)).collect() }
    }
}
