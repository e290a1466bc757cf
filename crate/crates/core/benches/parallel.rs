use std::hint::black_box;

use condexp::condexp::condexp_set;
use condexp::exec::Exec;
use condexp::fixtures::{random_correspondence, random_space, rng};
use condexp::pennies::{no_pure_equilibrium_search, PenniesGame, Variant};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn pennies_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("pennies_search");
    group.sample_size(10);
    for m in [2, 3] {
        let game = PenniesGame::new(m, Variant::TypeIrrelevant).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, m), &game, |b, game| {
                b.iter(|| no_pure_equilibrium_search(black_box(game), 2, 8, 0.01, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn block_sets(c: &mut Criterion) {
    let mut group = c.benchmark_group("condexp_set");
    let mut r = rng(42);
    let space = random_space(&mut r, 6, 6, false);
    let f = random_correspondence(&mut r, &space, 3, 4);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| condexp_set(black_box(&space), black_box(&f), exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, pennies_search, block_sets);
criterion_main!(benches);
