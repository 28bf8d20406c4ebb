use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qrev_bench::{channel, rng, state_pair};
use qrev_core::qcore::random::random_hermitian;
use qrev_core::qcore::{hermitian_eig, trace_distance};
use std::hint::black_box;

fn eig(c: &mut Criterion) {
    let mut group = c.benchmark_group("hermitian_eig");
    for n in [2, 4, 6] {
        let m = random_hermitian(1 << n, &mut rng(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| hermitian_eig(black_box(m)))
        });
    }
    group.finish();
}

fn channel_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("channel_apply");
    for n in [1, 2, 4] {
        let phi = channel(n);
        let (rho, _) = state_pair(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &(phi, rho), |b, (phi, rho)| {
            b.iter(|| phi.apply(black_box(rho)))
        });
    }
    group.finish();
}

fn distance(c: &mut Criterion) {
    let mut group = c.benchmark_group("trace_distance");
    for n in [2, 4, 6] {
        let pair = state_pair(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &pair, |b, (x, y)| {
            b.iter(|| trace_distance(black_box(x), black_box(y)))
        });
    }
    group.finish();
}

criterion_group!(benches, eig, channel_apply, distance);
criterion_main!(benches);
