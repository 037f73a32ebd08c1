//! Benchmarks for the hot kernels: exact information quantities, the
//! modulus pair scans, intersection construction, and candidate enumeration.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use efx_core::checkers::{completeness_level_rv, consistency_modulus, CandidateFamily};
use efx_core::ef::BoundEf;
use efx_core::fixtures;
use efx_core::model::{Layer, LayeredModel};
use efx_core::prob::{mutual_information, RandomVariable, SampleSpace};

fn random_rv_pair(n: usize, arity: u32, seed: u64) -> (RandomVariable, RandomVariable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<DVector<f64>> = (0..n).map(|k| DVector::from_vec(vec![k as f64])).collect();
    let space: Arc<SampleSpace> = SampleSpace::uniform(points).unwrap();
    let xs: Vec<u32> = (0..n).map(|_| rng.gen_range(0..arity)).collect();
    let ys: Vec<u32> = (0..n).map(|_| rng.gen_range(0..arity)).collect();
    (
        RandomVariable::from_labels(&space, &xs).unwrap(),
        RandomVariable::from_labels(&space, &ys).unwrap(),
    )
}

fn bench_mutual_information(c: &mut Criterion) {
    let mut group = c.benchmark_group("mutual_information");
    for n in [100usize, 1000, 10_000] {
        let (x, y) = random_rv_pair(n, 8, 42);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| mutual_information(&x, &y).unwrap());
        });
    }
    group.finish();
}

fn bench_modulus_pair_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("consistency_modulus");
    for steps in [10usize, 20] {
        let space = SampleSpace::grid(&[(-1.0, 1.0), (-1.0, 1.0)], &[steps, steps]).unwrap();
        let model = LayeredModel::new(vec![Layer::Tanh { dim: 2 }], None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<DVector<f64>> = (0..space.len())
            .map(|_| DVector::from_vec(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
            .collect();
        let ef = BoundEf::from_values(values).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(steps * steps),
            &steps,
            |b, _| {
                b.iter(|| consistency_modulus(&model, 1, &ef, &space).unwrap());
            },
        );
    }
    group.finish();
}

fn bench_intersection(c: &mut Criterion) {
    let fx = fixtures::xor_bits();
    c.bench_function("gk_intersection_xor_bits", |b| {
        b.iter(|| efx_core::algebra::gk_intersection(&fx.g1, &fx.g2).unwrap());
    });

    let (g1, g2) = random_rv_pair(4096, 16, 11);
    c.bench_function("gk_intersection_4096_points", |b| {
        b.iter(|| efx_core::algebra::gk_intersection(&g1, &g2).unwrap());
    });
}

fn bench_candidate_enumeration(c: &mut Criterion) {
    let fx = fixtures::xor_bits();
    let family = CandidateFamily::Enumerated { codomain_size: 2 };
    c.bench_function("completeness_256_candidates", |b| {
        b.iter(|| {
            completeness_level_rv(&fx.g1, &fx.h, 0.1, &family, 1 << 20).unwrap();
        });
    });
}

criterion_group!(
    benches,
    bench_mutual_information,
    bench_modulus_pair_scan,
    bench_intersection,
    bench_candidate_enumeration
);
criterion_main!(benches);
