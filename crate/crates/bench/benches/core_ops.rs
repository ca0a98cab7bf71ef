//! Benchmarks of the operations that dominate experiment wall time.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kostlan_core::jet::{JetPlan, SingularityType};
use kostlan_core::{
    bw_inner, decompose, discriminant_distance, l2_inner, random_sphere_point, sample_kostlan,
    zeros_on_circle, PolySystem, SphereFunction, SphereMesh,
};

fn bench_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_kostlan");
    group.bench_function("n1_d100", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        b.iter(|| sample_kostlan(1, 100, &mut rng))
    });
    group.bench_function("n2_d20", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        b.iter(|| sample_kostlan(2, 20, &mut rng))
    });
    group.finish();
}

fn bench_decompose(c: &mut Criterion) {
    let mut group = c.benchmark_group("decompose");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let circle = sample_kostlan(1, 144, &mut rng);
    group.bench_function("n1_d144", |b| b.iter(|| decompose(&circle).unwrap()));
    let surface = sample_kostlan(2, 16, &mut rng);
    group.bench_function("n2_d16", |b| b.iter(|| decompose(&surface).unwrap()));
    group.finish();
}

fn bench_inner_products(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = sample_kostlan(2, 20, &mut rng);
    let q = sample_kostlan(2, 20, &mut rng);
    c.bench_function("bw_inner_n2_d20", |b| b.iter(|| bw_inner(&p, &q).unwrap()));
    let p12 = sample_kostlan(2, 12, &mut rng);
    let q12 = sample_kostlan(2, 12, &mut rng);
    c.bench_function("l2_inner_n2_d12", |b| b.iter(|| l2_inner(&p12, &q12).unwrap()));
}

fn bench_topology(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    c.bench_function("zeros_on_circle_d64", |b| {
        b.iter_batched(
            || {
                let p = sample_kostlan(1, 64, &mut rng);
                SphereFunction::from_system(&PolySystem::single(p)).unwrap()
            },
            |f| zeros_on_circle(&f),
            BatchSize::SmallInput,
        )
    });
    let (p1, _) = kostlan_core::fixtures::sextic_pair();
    let sextic = SphereFunction::from_system(&PolySystem::single(p1)).unwrap();
    c.bench_function("curve_components_level4", |b| {
        b.iter(|| kostlan_core::curve_components_s2(&sextic, 4).unwrap())
    });
}

fn bench_jets(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let system = PolySystem::single(sample_kostlan(2, 10, &mut rng));
    let plan = JetPlan::new(&system, 2).unwrap();
    let points: Vec<_> = (0..64).map(|_| random_sphere_point(2, &mut rng)).collect();
    c.bench_function("jet_order2_n2_d10", |b| {
        let mut i = 0usize;
        b.iter(|| {
            i = (i + 1) % points.len();
            plan.jet(&points[i]).unwrap()
        })
    });
    let circle_poly = PolySystem::single(sample_kostlan(1, 40, &mut rng));
    let mesh = SphereMesh::for_degree(1, 40).unwrap();
    c.bench_function("discriminant_distance_n1_d40", |b| {
        b.iter(|| discriminant_distance(&circle_poly, SingularityType::ZeroSet, &mesh).unwrap())
    });
}

criterion_group!(
    benches,
    bench_sampling,
    bench_decompose,
    bench_inner_products,
    bench_topology,
    bench_jets
);
criterion_main!(benches);
