use condexp::correspondence::MixedSelection;
use condexp::equilibrium::{purify_equilibrium, solve_behavioral, verify_equilibrium, Method, SolveOptions};
use condexp::fixtures::{cyclic_pennies, injective_pennies, random_potential, random_profile, random_zero_sum, rng};
use condexp::game::{
    coarser_info_check, conditional_strategy, expected_payoff, BayesianGame, Entry, Player, Profile, TypeCell,
};
use condexp::measure::{CellKind, OnCell};
use condexp::purification::{purify_profile, strong_purify};
use condexp::rational::{q, Q};
use num::Zero;
use proptest::prelude::*;
use rand::Rng;

fn random_game(seed: u64) -> BayesianGame {
    let mut r = rng(seed);
    let n = if seed.is_multiple_of(3) { 3 } else { 2 };
    let cells: Vec<usize> = (0..n).map(|_| r.gen_range(1..=3)).collect();
    let actions: Vec<usize> = (0..n).map(|_| r.gen_range(2..=3)).collect();
    random_potential(&mut r, &cells, &actions, seed % 2 == 1)
}

/// The game with player `i`'s actions relabeled: new action `perm[x]` is old action `x`.
fn relabel(game: &BayesianGame, i: usize, perm: &[usize]) -> BayesianGame {
    let mut players = game.players().to_vec();
    let mut names = players[i].actions.clone();
    for (x, &p) in perm.iter().enumerate() {
        names[p] = players[i].actions[x].clone();
    }
    players[i].actions = names;
    let units = game.unit_count();
    let payoffs = (0..game.player_count())
        .map(|j| {
            let old = game.payoffs(j);
            let mut out = old.to_vec();
            for x in 0..game.profile_count() {
                let mut acts = game.profile_actions(x);
                acts[i] = perm[acts[i]];
                let y = game.profile_index(&acts);
                out[y * units..(y + 1) * units].clone_from_slice(&old[x * units..(x + 1) * units]);
            }
            out
        })
        .collect();
    BayesianGame::new(players, game.density().to_vec(), payoffs).unwrap()
}

fn relabel_profile(game: &BayesianGame, profile: &Profile, i: usize, perm: &[usize]) -> Profile {
    let mut out = profile.clone();
    let cells = profile.players[i]
        .cells()
        .iter()
        .map(|c| {
            c.map(|w| {
                let mut v = w.clone();
                for (x, &p) in perm.iter().enumerate() {
                    v[p] = w[x].clone();
                }
                v
            })
        })
        .collect();
    out.players[i] = MixedSelection::new(game.type_space(i), cells).unwrap();
    out
}

/// Mass of each action on every piece of `f`'s cells, read off the pure profile `g`.
fn action_mass(f: &OnCell<Vec<Q>>, g: &OnCell<Vec<Q>>, k: usize) -> Vec<Vec<Q>> {
    f.pieces()
        .into_iter()
        .map(|(lo, hi, _)| {
            let mut out = vec![Q::zero(); k];
            for (glo, ghi, w) in g.pieces() {
                let a = if glo > lo { glo } else { lo.clone() };
                let b = if ghi < hi { ghi } else { hi.clone() };
                if a < b {
                    for (o, wx) in out.iter_mut().zip(w) {
                        *o += (&b - &a) * wx;
                    }
                }
            }
            out
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn substitution_identity(seed in any::<u64>()) {
        let game = if seed % 4 == 0 { injective_pennies() } else { random_game(seed) };
        let mut r = rng(seed ^ 7);
        let profile = random_profile(&mut r, &game);
        let base = expected_payoff(&game, &profile);
        for i in 0..game.player_count() {
            let mut conditioned = profile.clone();
            for j in (0..game.player_count()).filter(|&j| j != i) {
                conditioned.players[j] = conditional_strategy(&game, j, &profile.players[j]).unwrap();
            }
            prop_assert_eq!(&expected_payoff(&game, &conditioned)[i], &base[i]);
        }
    }

    #[test]
    fn zero_sum_payoffs_cancel(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cells = [r.gen_range(1..=3), r.gen_range(1..=3)];
        let actions = [r.gen_range(2..=3), r.gen_range(2..=3)];
        let game = random_zero_sum(&mut r, cells, actions);
        let profile = random_profile(&mut r, &game);
        let u = expected_payoff(&game, &profile);
        prop_assert!((&u[0] + &u[1]).is_zero());
    }

    #[test]
    fn lp_value_is_attained(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cells = [r.gen_range(1..=3), r.gen_range(1..=3)];
        let game = random_zero_sum(&mut r, cells, [2, 3]);
        let report = solve_behavioral(&game, &SolveOptions { method: Method::Lp, ..SolveOptions::default() }).unwrap();
        let u = expected_payoff(&game, &report.profile);
        let v = report.value.clone().unwrap();
        prop_assert!(report.converged);
        prop_assert_eq!(&u[0], &v);
        prop_assert_eq!(&u[1], &-v);
    }

    #[test]
    fn purification_residuals_vanish(seed in any::<u64>()) {
        let game = random_game(seed);
        let mut r = rng(seed ^ 9);
        let cert = strong_purify(&game, &random_profile(&mut r, &game)).unwrap();
        prop_assert!(cert.audit.passes(), "{:?}", cert.audit);
    }

    #[test]
    fn purification_commutes_with_relabeling(seed in any::<u64>(), rot in 1usize..3) {
        let game = random_game(seed);
        let mut r = rng(seed ^ 11);
        let profile = random_profile(&mut r, &game);
        let k = game.players()[0].actions.len();
        let perm: Vec<usize> = (0..k).map(|x| (x + rot) % k).collect();
        let game2 = relabel(&game, 0, &perm);
        let profile2 = relabel_profile(&game2, &profile, 0, &perm);
        let (_, pure) = purify_profile(&game, &profile).unwrap();
        let (_, pure2) = purify_profile(&game2, &profile2).unwrap();
        prop_assert_eq!(expected_payoff(&game, &pure), expected_payoff(&game2, &pure2));
        for (c, cell) in profile.players[0].cells().iter().enumerate() {
            let m1 = action_mass(cell, pure.players[0].cell(c), k);
            let m2 = action_mass(profile2.players[0].cell(c), pure2.players[0].cell(c), k);
            for (a, b) in m1.iter().zip(&m2) {
                for x in 0..k {
                    prop_assert_eq!(&a[x], &b[perm[x]]);
                }
            }
        }
        prop_assert!(strong_purify(&game2, &profile2).unwrap().audit.passes());
    }
}

#[test]
fn purified_equilibria_stay_equilibria() {
    for seed in 0..12 {
        let game = random_game(seed);
        let report = solve_behavioral(&game, &SolveOptions::default()).unwrap();
        assert!(report.converged, "game {seed}");
        let (_, pure) = purify_equilibrium(&game, &report).unwrap();
        assert!(pure.converged);
        for (a, b) in pure.epsilon.iter().zip(&report.epsilon) {
            assert!(a <= b);
        }
        assert_eq!(verify_equilibrium(&game, &pure.profile), pure.epsilon);
    }
}

#[test]
fn marginal_condition_is_enforced() {
    let player = |name: &str| Player {
        name: name.into(),
        actions: vec!["a".into(), "b".into()],
        types: vec![TypeCell { id: "t".into(), mass: Q::from_integer(1.into()), kind: CellKind::Rich }],
    };
    let payoffs = vec![vec![Entry::Const(Q::zero()); 4]; 2];
    assert!(BayesianGame::new(vec![player("1"), player("2")], vec![Entry::Const(q(1, 2))], payoffs).is_err());
}

/// Matching pennies padded with a third player who has one action, one type and payoff zero.
#[test]
fn dummy_player_padding() {
    let base = cyclic_pennies(2, &[q(1, 2), q(1, 2)], &[Q::from_integer(1.into())]);
    let mut players = base.players().to_vec();
    players.push(Player {
        name: "dummy".into(),
        actions: vec!["stay".into()],
        types: vec![TypeCell { id: "d".into(), mass: Q::from_integer(1.into()), kind: CellKind::Rich }],
    });
    let mut payoffs: Vec<Vec<Entry>> = (0..2).map(|i| base.payoffs(i).to_vec()).collect();
    payoffs.push(vec![Entry::Const(Q::zero()); base.payoffs(0).len()]);
    let game = BayesianGame::new(players, base.density().to_vec(), payoffs).unwrap();

    assert!(coarser_info_check(&game).iter().all(|c| c.witness.is_none()));
    let report = solve_behavioral(&game, &SolveOptions::default()).unwrap();
    assert!(report.converged);
    let (pure, checked) = purify_equilibrium(&game, &report).unwrap();
    assert!(checked.converged);
    assert_eq!(pure.len(), 3);
    let u = expected_payoff(&game, &checked.profile);
    assert_eq!(u, vec![Q::zero(), Q::zero(), Q::zero()]);
}
