use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgl_core::coalition::{solve_one_vs_n, SolveMode, SolveOptions};
use rgl_core::dynamics::{guts_game, jacob_game_ii, multiplayer_fp, MultiFpOptions};
use rgl_core::zerosum::{fictitious_play, FpOptions};
use rgl_core::RuleVariant;

fn zero_sum_fp(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = ndarray::Array2::from_shape_fn((50, 200), |_| rng.gen_range(-1.0..1.0));
    let opts = FpOptions { max_iterations: 20_000, gap_tolerance: 0.0, seed: 0, record_plays: false };
    c.bench_function("fictitious play 50x200, 2e4 iterations", |b| {
        b.iter(|| fictitious_play(a.view(), &opts).unwrap())
    });
}

fn value_iteration(c: &mut Criterion) {
    let mut group = c.benchmark_group("value iteration");
    group.sample_size(10);
    let opts = SolveOptions::default();
    group.bench_function("1-v-2 full M=21", |b| {
        b.iter(|| solve_one_vs_n(3, 21, SolveMode::Full, RuleVariant::Standard, &opts).unwrap())
    });
    group.bench_function("1-v-4 pseudo-bloc M=21", |b| {
        b.iter(|| solve_one_vs_n(5, 21, SolveMode::PseudoBloc, RuleVariant::Standard, &opts).unwrap())
    });
    group.finish();
}

fn n_player_fp(c: &mut Criterion) {
    let mut group = c.benchmark_group("n-player FP");
    group.sample_size(10);
    let jacob = jacob_game_ii();
    let guts = guts_game(3, 101, RuleVariant::Standard).unwrap();
    let opts = MultiFpOptions { iterations: 2_000, ..Default::default() };
    group.bench_function("Jacob II 2e3", |b| b.iter(|| multiplayer_fp(&jacob, &opts).unwrap()));
    group.bench_function("guts n=3 M=101 2e3", |b| b.iter(|| multiplayer_fp(&guts, &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, zero_sum_fp, value_iteration, n_player_fp);
criterion_main!(benches);
