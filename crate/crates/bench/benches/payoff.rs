use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rgl_core::payoff::{alpha, build_full_matrices, build_pseudo_bloc_matrices, BuildOptions};
use rgl_core::{make_grid, RuleVariant, ThresholdProfile};

fn general_alpha(c: &mut Criterion) {
    let mut group = c.benchmark_group("alpha");
    for n in [3usize, 5, 8] {
        let p = ThresholdProfile::new((0..n).map(|i| 0.4 + 0.05 * i as f64).collect()).unwrap();
        for rule in [RuleVariant::Standard, RuleVariant::Weenie] {
            group.bench_with_input(BenchmarkId::new(rule.to_string(), n), &p, |b, p| {
                b.iter(|| alpha(black_box(p), rule).unwrap())
            });
        }
    }
    group.finish();
}

fn matrices(c: &mut Criterion) {
    let mut group = c.benchmark_group("matrices");
    group.sample_size(10);
    let grid = make_grid(41).unwrap();
    let opts = BuildOptions::default();
    group.bench_function("full n=3 M=41", |b| {
        b.iter(|| build_full_matrices(3, &grid, RuleVariant::Standard, &opts).unwrap())
    });
    group.bench_function("pseudo-bloc n=6 M=41", |b| {
        b.iter(|| build_pseudo_bloc_matrices(6, &grid, RuleVariant::Standard, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, general_alpha, matrices);
criterion_main!(benches);
