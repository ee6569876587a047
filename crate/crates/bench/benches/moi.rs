use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use specact::scalar_functions::{divided_difference, fixtures};
use specact::{moi_eval, moi_trace, MoiRequest};
use specact_bench::operator_pair;

fn contraction(c: &mut Criterion) {
    let f = fixtures::gaussian(0.1, 0.8);
    let mut group = c.benchmark_group("moi_eval");
    for &(dim, k) in &[(8, 1), (8, 2), (8, 3), (16, 2), (16, 3), (32, 2)] {
        let (h0, v) = operator_pair(7, dim, 0.3);
        let req = MoiRequest::new(&h0, vec![&v; k], &f);
        group.bench_with_input(BenchmarkId::new(format!("k{k}"), dim), &req, |b, req| {
            b.iter(|| moi_eval(req).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("moi_trace");
    for &(dim, k) in &[(16, 3), (32, 3)] {
        let (h0, v) = operator_pair(7, dim, 0.3);
        let req = MoiRequest::new(&h0, vec![&v; k], &f);
        group.bench_with_input(BenchmarkId::new(format!("k{k}"), dim), &req, |b, req| {
            b.iter(|| moi_trace(req).unwrap())
        });
    }
    group.finish();
}

fn divided_differences(c: &mut Criterion) {
    let f = fixtures::gaussian(0.0, 0.7);
    let spread = [-0.6, -0.1, 0.2, 0.5, 0.9];
    let clustered = [-0.6, 0.2, 0.2 + 1e-5, 0.2 + 2e-5, 0.9];
    c.bench_function("divided_difference/spread", |b| {
        b.iter(|| divided_difference(&f, &spread).unwrap())
    });
    c.bench_function("divided_difference/clustered", |b| {
        b.iter(|| divided_difference(&f, &clustered).unwrap())
    });
}

criterion_group!(benches, contraction, divided_differences);
criterion_main!(benches);
