use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use zkfl_bench::random_elements;
use zkfl_core::field::batch_inverse;
use zkfl_core::snark::extrapolate::hankel_mul;
use zkfl_core::snark::Extrapolator;

fn arithmetic(c: &mut Criterion) {
    let xs = random_elements(1024, 1);
    c.bench_function("field/mul_1024", |b| {
        b.iter(|| xs.iter().fold(xs[0], |acc, &x| acc * black_box(x)))
    });
    c.bench_function("field/inverse", |b| {
        b.iter(|| black_box(xs[3]).inv().unwrap())
    });
    c.bench_function("field/batch_inverse_1024", |b| {
        b.iter(|| {
            let mut v = xs.clone();
            batch_inverse(&mut v).unwrap();
            v
        })
    });
}

fn extrapolation(c: &mut Criterion) {
    let mut group = c.benchmark_group("extrapolate");
    group.sample_size(20);
    for m in [256, 4096] {
        let h = random_elements(2 * m - 1, 2);
        let x = random_elements(m, 3);
        group.bench_with_input(BenchmarkId::new("hankel_mul", m), &m, |b, _| {
            b.iter(|| hankel_mul(&h, &x))
        });
        let ex = Extrapolator::new(m, m);
        group.bench_with_input(BenchmarkId::new("extend", m), &m, |b, _| {
            b.iter(|| ex.extend(&x))
        });
    }
    group.finish();
}

criterion_group!(benches, arithmetic, extrapolation);
criterion_main!(benches);
