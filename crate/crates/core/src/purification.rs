//! Strong purification of behavioral profiles and the equivalence audits.
//!
//! Each piece of a mixed strategy is cut into sub-intervals, one per action in its support,
//! with lengths proportional to the weights. On cells where the interim payoff varies with
//! the player's own coordinate the mirrored layout is used, which also keeps the integral
//! of every affine function of that coordinate.

use num::{Signed, Zero};
use serde::Serialize;

use crate::condexp::{split_interval, SplitLayout};
use crate::correspondence::{MixedSelection, Selection};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::game::{coarser_info_check, conditional_strategy, expected_payoff, interim_table, BayesianGame, Profile};
use crate::measure::OnCell;
use crate::rational::{abs, Rat, Q};
use crate::steps::Steps;

pub const SAMPLED_DEVIATIONS: usize = 16;
pub const DEVIATION_SEED: u64 = 0x5eed;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrongResidual {
    pub player: usize,
    pub deviation: usize,
    pub residual: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BeliefViolation {
    pub player: usize,
    pub mass: Rat,
    pub cells: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquivalenceAudit {
    /// `|U_i(f) − U_i(g)|`.
    pub payoff: Vec<Rat>,
    /// `|U_i(h_i, f_{−i}) − U_i(h_i, g_{−i})|` per sampled deviation.
    pub strong: Vec<StrongResidual>,
    /// `∫ f_i − ∫ g_i` per action.
    pub distribution: Vec<Vec<Rat>>,
    /// Mass on which `g_i` uses an action outside the support of `f_i`, when positive.
    pub belief: Vec<BeliefViolation>,
    /// `∫ ‖E(f_i | 𝒢_i) − E(g_i | 𝒢_i)‖₁ dλ_i`.
    pub structural: Vec<Rat>,
}

impl EquivalenceAudit {
    pub fn payoff_equivalent(&self) -> bool {
        self.payoff.iter().all(|r| r.0.is_zero())
    }

    pub fn strongly_payoff_equivalent(&self) -> bool {
        self.payoff_equivalent()
            && self.strong.iter().all(|r| r.residual.0.is_zero())
            && self.structural.iter().all(|r| r.0.is_zero())
    }

    pub fn distribution_equivalent(&self) -> bool {
        self.distribution.iter().flatten().all(|r| r.0.is_zero())
    }

    pub fn belief_consistent(&self) -> bool {
        self.belief.is_empty()
    }

    pub fn passes(&self) -> bool {
        self.strongly_payoff_equivalent() && self.distribution_equivalent() && self.belief_consistent()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PurificationCertificate {
    pub pure: Vec<Selection>,
    pub profile: Profile,
    pub audit: EquivalenceAudit,
}

fn require_coarser(game: &BayesianGame) -> Result<()> {
    for c in coarser_info_check(game) {
        if let Some(w) = c.witness {
            return Err(Error::AtomObstruction { cell: w, alpha: None });
        }
    }
    Ok(())
}

/// Pure profile with the same per-piece action distribution as `f`, laid out so that own
/// interim payoffs integrate to the same values.
pub fn purify_profile(game: &BayesianGame, f: &Profile) -> Result<(Vec<Selection>, Profile)> {
    require_coarser(game)?;
    let mut pure = Vec::new();
    let mut mixed = Vec::new();
    for (i, p) in game.players().iter().enumerate() {
        let k = p.actions.len();
        let table = interim_table(game, i, f);
        let mut cells = Vec::new();
        for (c, strategy) in f.players[i].cells().iter().enumerate() {
            let layout = if table[c].iter().all(|v| v.is_constant()) { SplitLayout::Proportional } else { SplitLayout::Mirrored };
            let OnCell::Inner(steps) = strategy else {
                return Err(Error::AtomObstruction { cell: p.types[c].id.clone(), alpha: None });
            };
            let segs: Vec<(Q, usize)> =
                steps.pieces().flat_map(|piece| split_interval(&piece.lo, &piece.hi, piece.value, layout)).collect();
            cells.push(OnCell::Inner(Steps::from_segments(segs)?.merged()));
        }
        let sel = Selection::new(game.type_space(i), cells)?;
        mixed.push(sel.to_mixed(k));
        pure.push(sel);
    }
    Ok((pure, Profile::new(game, mixed)?))
}

/// Purifies `f` and audits the result against sixteen seeded random deviations.
pub fn strong_purify(game: &BayesianGame, f: &Profile) -> Result<PurificationCertificate> {
    let (pure, profile) = purify_profile(game, f)?;
    let deviations = fixtures::sample_deviations(game, SAMPLED_DEVIATIONS, DEVIATION_SEED);
    let audit = audit_equivalence(game, f, &profile, &deviations)?;
    Ok(PurificationCertificate { pure, profile, audit })
}

fn integral(game: &BayesianGame, i: usize, m: &MixedSelection) -> Vec<Q> {
    let k = game.players()[i].actions.len();
    let mut out = vec![Q::zero(); k];
    for (c, cell) in m.cells().iter().enumerate() {
        let mass = &game.players()[i].types[c].mass;
        for (lo, hi, w) in cell.pieces() {
            for (o, wx) in out.iter_mut().zip(w) {
                *o += mass * (&hi - &lo) * wx;
            }
        }
    }
    out
}

/// Residuals of payoff, strong payoff, distribution and belief equivalence between `f` and `g`.
pub fn audit_equivalence(
    game: &BayesianGame,
    f: &Profile,
    g: &Profile,
    deviations: &[(usize, MixedSelection)],
) -> Result<EquivalenceAudit> {
    let n = game.player_count();
    let uf = expected_payoff(game, f);
    let ug = expected_payoff(game, g);
    let payoff = uf.iter().zip(&ug).map(|(a, b)| Rat(abs(&(a - b)))).collect();

    let mut strong = Vec::new();
    for (d, (i, h)) in deviations.iter().enumerate() {
        if *i >= n {
            return Err(Error::IndexOutOfRange { index: *i, count: n });
        }
        let hf = Profile::new(game, f.players.clone())?.with_player(*i, h.clone());
        let hg = Profile::new(game, g.players.clone())?.with_player(*i, h.clone());
        let r = &expected_payoff(game, &hf)[*i] - &expected_payoff(game, &hg)[*i];
        strong.push(StrongResidual { player: *i, deviation: d, residual: Rat(abs(&r)) });
    }

    let mut distribution = Vec::new();
    let mut belief = Vec::new();
    let mut structural = Vec::new();
    for i in 0..n {
        let (fi, gi) = (&f.players[i], &g.players[i]);
        distribution.push(integral(game, i, fi).iter().zip(integral(game, i, gi)).map(|(a, b)| Rat(a - b)).collect());

        let mut mass = Q::zero();
        let mut cells = Vec::new();
        for (c, t) in game.players()[i].types.iter().enumerate() {
            let bad = fi
                .cell(c)
                .zip(gi.cell(c), |wf, wg| wf.iter().zip(wg).any(|(a, b)| a.is_zero() && b.is_positive()))
                .ok_or_else(|| Error::ShapeMismatch(t.id.clone()))?;
            let m: Q = bad.pieces().into_iter().filter(|p| *p.2).map(|(lo, hi, _)| hi - lo).sum();
            if m.is_positive() {
                mass += &t.mass * m;
                cells.push(t.id.clone());
            }
        }
        if mass.is_positive() {
            belief.push(BeliefViolation { player: i, mass: Rat(mass), cells });
        }

        let (ef, eg) = (conditional_strategy(game, i, fi)?, conditional_strategy(game, i, gi)?);
        let mut s = Q::zero();
        for (c, t) in game.players()[i].types.iter().enumerate() {
            let d = ef.cell(c).zip(eg.cell(c), |a, b| a.iter().zip(b).map(|(x, y)| abs(&(x - y))).sum::<Q>());
            let d = d.ok_or_else(|| Error::ShapeMismatch(t.id.clone()))?;
            s += &t.mass * d.pieces().into_iter().map(|(lo, hi, v)| (hi - lo) * v).sum::<Q>();
        }
        structural.push(Rat(s));
    }
    Ok(EquivalenceAudit { payoff, strong, distribution, belief, structural })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Player, TypeCell};
    use crate::measure::CellKind;
    use crate::rational::{q, qi};

    fn pennies() -> BayesianGame {
        let p = |name: &str| Player {
            name: name.into(),
            actions: vec!["a1".into(), "a2".into()],
            types: vec![TypeCell { id: "T".into(), mass: qi(1), kind: CellKind::Rich }],
        };
        BayesianGame::type_irrelevant(vec![p("1"), p("2")], |i, x| {
            let v = if x[0] == x[1] { qi(1) } else { qi(-1) };
            if i == 0 { v } else { -v }
        })
        .unwrap()
    }

    fn steps(pieces: Vec<(Q, Vec<Q>)>) -> OnCell<Vec<Q>> {
        OnCell::Inner(Steps::new(pieces).unwrap())
    }

    #[test]
    fn proportional_split() {
        let g = pennies();
        let f1 = MixedSelection::constant(g.type_space(0), vec![q(3, 4), q(1, 4)]).unwrap();
        let f = Profile::uniform(&g).with_player(0, f1);
        let cert = strong_purify(&g, &f).unwrap();
        assert_eq!(cert.pure[0].cell(0), &OnCell::Inner(Steps::new(vec![(q(3, 4), 0), (qi(1), 1)]).unwrap()));
        assert!(cert.audit.passes(), "{:?}", cert.audit);
        assert_eq!(cert.audit.strong.len(), SAMPLED_DEVIATIONS);
    }

    #[test]
    fn pure_profiles_are_fixed() {
        let g = pennies();
        let f = Profile::pure_constant(&g, &[0, 1]);
        let cert = strong_purify(&g, &f).unwrap();
        assert_eq!(cert.profile, f);
        assert!(cert.audit.passes());
    }

    #[test]
    fn piecewise_split() {
        let g = pennies();
        let f1 = MixedSelection::new(
            g.type_space(0),
            vec![steps(vec![(q(1, 2), vec![q(1, 2), q(1, 2)]), (qi(1), vec![qi(0), qi(1)])])],
        )
        .unwrap();
        let f = Profile::uniform(&g).with_player(0, f1);
        let cert = strong_purify(&g, &f).unwrap();
        assert_eq!(cert.pure[0].cell(0), &OnCell::Inner(Steps::new(vec![(q(1, 4), 0), (qi(1), 1)]).unwrap()));
        assert!(cert.audit.belief_consistent());
        assert!(cert.audit.passes());
    }

    #[test]
    fn belief_violation_is_located() {
        let g = pennies();
        let f = Profile::pure_constant(&g, &[0, 0]);
        let half_other = MixedSelection::new(
            g.type_space(0),
            vec![steps(vec![(q(1, 2), vec![qi(1), qi(0)]), (qi(1), vec![qi(0), qi(1)])])],
        )
        .unwrap();
        let h = f.with_player(0, half_other);
        let audit = audit_equivalence(&g, &f, &h, &[]).unwrap();
        assert_eq!(audit.belief, vec![BeliefViolation { player: 0, mass: Rat(q(1, 2)), cells: vec!["T".into()] }]);
        assert!(!audit.distribution_equivalent());
        let same = audit_equivalence(&g, &f, &f, &[]).unwrap();
        assert!(same.passes());
    }

    #[test]
    fn obstruction_without_coarser_information() {
        let g = fixtures::injective_pennies();
        let f = Profile::uniform(&g);
        assert!(matches!(strong_purify(&g, &f), Err(Error::AtomObstruction { .. })));
    }
}
