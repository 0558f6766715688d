use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bipartial::*;
use std::hint::black_box;

fn synthetic_table(n: usize) -> DataTable {
    // Deterministic quasi-random points; benchmarks don't need Gaussians.
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let x = (i as f64 * 0.7548776662466927).fract() * 100.0;
            let y = (i as f64 * 0.5698402909980532).fract() * 100.0;
            vec![x, y]
        })
        .collect();
    DataTable::from_rows(&rows).unwrap()
}

fn store_for(n: usize) -> DissimilarityStore {
    compute_distances(&synthetic_table(n), Metric::Euclidean)
        .unwrap()
        .apply_transform(ProximityTransform::AveragePreserving)
        .unwrap()
}

fn bench_linkage(c: &mut Criterion) {
    let mut group = c.benchmark_group("linkage");
    for &n in &[50usize, 150] {
        let store = store_for(n);
        for scheme in [LinkageScheme::Single, LinkageScheme::Upgma, LinkageScheme::Complete] {
            group.bench_with_input(
                BenchmarkId::new(format!("{scheme:?}").to_lowercase(), n),
                &store,
                |b, store| b.iter(|| run_linkage(black_box(store), scheme).unwrap()),
            );
        }
    }
    group.finish();
}

fn bench_engine(c: &mut Criterion) {
    let mut group = c.benchmark_group("bipartial_engine");
    for &n in &[30usize, 80] {
        let store = store_for(n);
        group.bench_with_input(BenchmarkId::new("additive", n), &store, |b, store| {
            b.iter(|| run_bipartial(&mut AdditiveObjective::new(black_box(store)).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("minmax", n), &store, |b, store| {
            b.iter(|| run_bipartial(&mut MinMaxObjective::new(black_box(store)).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("avg_additive", n), &store, |b, store| {
            b.iter(|| run_bipartial(&mut AvgAdditiveObjective::new(black_box(store)).unwrap()))
        });
    }
    group.finish();
}

fn bench_kmeans(c: &mut Criterion) {
    let mut group = c.benchmark_group("kmeans");
    let (data, _) = nested_blobs(&NestedBlobConfig::default()).unwrap();
    group.bench_function("classic_p4_restarts20", |b| {
        let cfg = KmeansConfig { restarts: 20, ..KmeansConfig::new(4) };
        b.iter(|| kmeans_classic(black_box(&data), &cfg).unwrap())
    });
    let sq = compute_distances(&data, Metric::SquaredEuclidean).unwrap();
    let transform = ProximityTransform::AveragePreserving.resolve(&sq).unwrap();
    group.bench_function("bipartial_merger_n60", |b| {
        b.iter(|| {
            run_bipartial_kmeans(black_box(&data), transform, BipartialKmeansConfig::default())
                .unwrap()
        })
    });
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    let store = store_for(10);
    group.bench_function("best_at_half_n10", |b| {
        b.iter(|| oracle_best(OracleSpec::Additive, black_box(&store), 0.5).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_linkage, bench_engine, bench_kmeans, bench_oracle);
criterion_main!(benches);
