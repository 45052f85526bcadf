use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use tropsdp_bench::{instance, instance_game};
use tropsdp_core::bench::run_instance;
use tropsdp_core::fixtures::running_example;
use tropsdp_core::shapley::{CompiledGame, Operator};
use tropsdp_core::{
    analyze, chain_from_policies, check_feasibility, game_from_pencil, game_value_bruteforce,
    FeasibilityOptions, Policy, Rational,
};

fn shapley_operator(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_f");
    for (n, m) in [(50, 10), (200, 40), (1000, 100)] {
        let dense = instance(n, m).operator::<f64>().unwrap();
        let x = vec![0.0; n];
        group.bench_with_input(BenchmarkId::new("dense", format!("{n}x{m}")), &x, |b, x| {
            b.iter(|| dense.apply(black_box(x)))
        });
        if n * m * m <= 200 * 40 * 40 {
            let compiled = CompiledGame::<f64>::new(&instance_game(n, m));
            group.bench_with_input(BenchmarkId::new("compiled", format!("{n}x{m}")), &x, |b, x| {
                b.iter(|| compiled.apply(black_box(x)))
            });
        }
    }
    group.finish();
}

fn value_iteration(c: &mut Criterion) {
    let mut group = c.benchmark_group("value_iteration");
    group.sample_size(20);
    let eps = Rational::new(1.into(), 100_000_000.into());
    for (n, m) in [(50, 10), (100, 30), (500, 50)] {
        let inst = instance(n, m);
        group.bench_function(BenchmarkId::new("f64", format!("{n}x{m}")), |b| {
            b.iter(|| run_instance(black_box(&inst), &eps, 1_000_000, false).unwrap())
        });
    }
    let g = game_from_pencil(&running_example()).unwrap();
    let opts = FeasibilityOptions { exact: true, ..FeasibilityOptions::default() };
    group.bench_function("exact/running", |b| b.iter(|| check_feasibility(black_box(&g), &opts).unwrap()));
    group.finish();
}

fn exact_solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact");
    group.sample_size(10);
    let g = game_from_pencil(&running_example()).unwrap();
    group.bench_function("bruteforce/running", |b| b.iter(|| game_value_bruteforce(black_box(&g), 1 << 20).unwrap()));
    let small = instance_game(3, 3);
    group.bench_function("bruteforce/3x3", |b| b.iter(|| game_value_bruteforce(black_box(&small), 1 << 20).unwrap()));

    let big = instance_game(20, 6);
    let policy = Policy { sigma: vec![0; big.n()], tau: vec![0; big.m()] };
    let chain = chain_from_policies(&big, &policy).unwrap();
    group.bench_function("markov/20x6", |b| b.iter(|| analyze(black_box(&chain))));
    group.finish();
}

criterion_group!(benches, shapley_operator, value_iteration, exact_solver);
criterion_main!(benches);
