use condexp::exec::Exec;
use condexp::fixtures::{random_steps, rng};
use condexp::pennies::{
    balance_defect, constant_strategy, no_pure_equilibrium_search, profile_values, pure_strategy, PenniesGame, Side,
    TrianglePrior, Variant,
};
use condexp::rational::{q, Q};
use num::{Signed, Zero};
use proptest::prelude::*;
use rand::Rng;

fn variant(flag: bool) -> Variant {
    if flag { Variant::IndependentTypes } else { Variant::TypeIrrelevant }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_factors_through_marginals(a in 1i64..48, b in 1i64..48) {
        let p = TrianglePrior;
        let (l1, l2) = (q(a.min(b), 48), q(a.max(b), 48));
        prop_assert_eq!(p.conditional(&l1, &l2) * p.marginal_1(&l1) * p.marginal_2(&l2), p.density(&l1, &l2));
        prop_assert!(p.conditional(&l2, &l1).is_zero() || l1 == l2);
    }

    #[test]
    fn partitions_are_unbalanced(seed in any::<u64>(), m in 2usize..=3, side in any::<bool>()) {
        let mut r = rng(seed);
        let f = random_steps(&mut r, 24, 6, |r| r.gen_range(0..m));
        let side = if side { Side::One } else { Side::Two };
        prop_assert!(balance_defect(m, &pure_strategy(m, &f), side).defect.0.is_positive());
    }

    #[test]
    fn pure_profiles_are_zero_sum(seed in any::<u64>(), m in 2usize..=3, flag in any::<bool>()) {
        let game = PenniesGame::new(m, variant(flag)).unwrap();
        let mut r = rng(seed);
        let f1 = random_steps(&mut r, 16, 4, |r| r.gen_range(0..m));
        let f2 = random_steps(&mut r, 16, 4, |r| r.gen_range(0..m));
        let v = profile_values(&game, &pure_strategy(m, &f1), &pure_strategy(m, &f2));
        prop_assert!((&v.payoff_1.0 + &v.payoff_2.0).is_zero());
        prop_assert!(!v.gain_1.0.is_negative() && !v.gain_2.0.is_negative());
    }
}

#[test]
fn triangle_integrates_to_one() {
    let p = TrianglePrior;
    // the density is 2 on a triangle of area 1/2; the marginals are affine
    assert_eq!(p.density(&q(1, 3), &q(2, 3)) * q(1, 2), Q::from_integer(1.into()));
    assert_eq!(p.marginal_1(&q(1, 2)), Q::from_integer(1.into()));
    assert_eq!(p.marginal_2(&q(1, 2)), Q::from_integer(1.into()));
}

#[test]
fn uniform_play_has_no_gain() {
    for m in 2..=3 {
        for flag in [false, true] {
            let game = PenniesGame::new(m, variant(flag)).unwrap();
            let u = constant_strategy(vec![q(1, m as i64); m]);
            let v = profile_values(&game, &u, &u);
            assert!(v.gain_1.0.is_zero() && v.gain_2.0.is_zero());
            assert!(v.payoff_1.0.is_zero());
        }
    }
}

#[test]
fn search_is_independent_of_execution() {
    let game = PenniesGame::new(3, Variant::TypeIrrelevant).unwrap();
    let seq = no_pure_equilibrium_search(&game, 2, 6, 0.01, Exec::Sequential).unwrap();
    let par = no_pure_equilibrium_search(&game, 2, 6, 0.01, Exec::Parallel).unwrap();
    assert_eq!(seq, par);
    assert!(seq.pass);
}
