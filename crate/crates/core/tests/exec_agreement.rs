use condexp::condexp::condexp_set;
use condexp::exec::Exec;
use condexp::fixtures::{random_correspondence, random_space, rng};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn condexp_set_is_independent_of_execution(seed in any::<u64>()) {
        let mut r = rng(seed);
        let space = random_space(&mut r, (seed % 6 + 1) as usize, 3, seed % 3 == 0);
        let f = random_correspondence(&mut r, &space, 2, 3);
        let seq = condexp_set(&space, &f, Exec::Sequential).unwrap();
        let par = condexp_set(&space, &f, Exec::Parallel).unwrap();
        prop_assert_eq!(seq, par);
    }
}

#[test]
fn map_keeps_order() {
    let items: Vec<u64> = (0..1000).collect();
    let sq = |x: &u64| x * x;
    assert_eq!(Exec::Sequential.map(&items, sq), Exec::Parallel.map(&items, sq));
    assert_eq!(Exec::Parallel.map_range(10, |i| i), (0..10).collect::<Vec<_>>());
}
