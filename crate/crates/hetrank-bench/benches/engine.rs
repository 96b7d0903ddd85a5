//! Engine benchmarks: gap-tree construction, one vote-level comparison, and
//! a full adaptive ranking run.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hetrank_core::{
    atc, build_pit, make_logistic_source, run_adaptive, ActiveSet, ItemId, Opponent, QueryCtx,
    ResponseLedger, RunRng, TrueRanking,
};

fn bench_build_pit(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_pit");
    for len in [15usize, 63, 255] {
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, &len| {
            b.iter(|| build_pit(black_box(len)).unwrap());
        });
    }
    group.finish();
}

fn bench_atc(c: &mut Criterion) {
    c.bench_function("atc_noisy_adjacent_pair", |b| {
        let mut rng = RunRng::new(7);
        let truth = TrueRanking::sample(16, &mut rng.setup);
        let mut source = make_logistic_source(truth, &[0.5; 9], 3.0).unwrap();
        let users = ActiveSet::full(9);
        let mut ledger = ResponseLedger::new(16, 9);
        b.iter(|| {
            let mut ctx = QueryCtx {
                users: &users,
                ledger: &mut ledger,
                source: &mut source,
                rng: &mut rng,
            };
            atc(
                &mut ctx,
                ItemId(0),
                Opponent::Item(ItemId(1)),
                black_box(0.25),
                0.1,
            )
        });
    });
}

fn bench_adaptive_run(c: &mut Criterion) {
    c.bench_function("adaptive_run_n10_m9", |b| {
        let gammas = [2.5, 2.5, 2.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5];
        let items: Vec<ItemId> = (0..10).map(ItemId).collect();
        b.iter(|| {
            let mut rng = RunRng::new(42);
            let truth = TrueRanking::sample(10, &mut rng.setup);
            let mut source = make_logistic_source(truth, &gammas, 3.0).unwrap();
            run_adaptive(black_box(&items), 0.1, &mut source, &mut rng)
        });
    });
}

criterion_group!(benches, bench_build_pit, bench_atc, bench_adaptive_run);
criterion_main!(benches);
