use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use specact::ssf::{ssf_first_order, ssf_reconstruct, TestFunctionFamily};
use specact_bench::operator_pair;

fn reconstruction(c: &mut Criterion) {
    let (a, b) = (-2.0, 2.0);
    let mut group = c.benchmark_group("ssf_reconstruct");
    group.sample_size(10);
    for &n in &[2, 3] {
        let (h0, v) = operator_pair(11, 6, 0.4);
        let fam = TestFunctionFamily::for_operators(&h0, &v, n, a, b, 0.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, &n| {
            bench.iter(|| ssf_reconstruct(&h0, &v, n, (a, b), 512, &fam).unwrap())
        });
    }
    group.finish();

    let (h0, v) = operator_pair(11, 32, 0.4);
    c.bench_function("ssf_first_order/32", |bench| {
        bench.iter(|| ssf_first_order(&h0, &v, a, b).unwrap())
    });
}

criterion_group!(benches, reconstruction);
criterion_main!(benches);
