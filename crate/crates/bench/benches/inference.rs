use std::hint::black_box;

use boltzmix::meanfield::{mf_anneal, mf_fixed_point, AnnealSchedule, FixedPointSettings, MeanFieldParams};
use boltzmix::mixture::{optimize_mixture, MixtureParams, MixtureSettings};
use boltzmix::model::{exact_pair_correlations, for_each_state_reference, log_partition, Temperature};
use boltzmix_bench::{image_net, random_net};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumeration");
    for n in [10, 14] {
        let net = random_net(n, 1);
        g.bench_with_input(BenchmarkId::new("log_partition_gray", n), &net, |b, net| {
            b.iter(|| log_partition(black_box(net), Temperature::UNIT).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("reference_counter", n), &net, |b, net| {
            b.iter(|| {
                let mut acc = 0.0;
                for_each_state_reference(black_box(net), None, |_, e| acc += (-e).exp()).unwrap();
                acc
            })
        });
    }
    let net = random_net(10, 2);
    g.bench_function("pair_correlations/10", |b| {
        b.iter(|| exact_pair_correlations(black_box(&net), Temperature::UNIT, None).unwrap())
    });
    g.finish();
}

fn mean_field(c: &mut Criterion) {
    let settings = FixedPointSettings::default();
    let net = random_net(10, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let init = MeanFieldParams::random(10, None, &mut rng).unwrap();
    c.bench_function("mf_fixed_point/10", |b| {
        b.iter(|| mf_fixed_point(black_box(&net), None, Temperature::UNIT, init.clone(), &settings).unwrap())
    });
    let big = image_net(4);
    let schedule = AnnealSchedule::geometric(100.0, 7).unwrap();
    let init = MeanFieldParams::random(big.n_nodes(), None, &mut rng).unwrap();
    c.bench_function("mf_anneal/image", |b| {
        b.iter(|| mf_anneal(black_box(&big), None, &schedule, init.clone(), &settings).unwrap())
    });
}

fn mixture(c: &mut Criterion) {
    let settings = MixtureSettings::default();
    let schedule = AnnealSchedule::geometric(60.0, 8).unwrap();
    let net = random_net(10, 5);
    let mut g = c.benchmark_group("optimize_mixture");
    for k in [1, 5, 10] {
        let init = MixtureParams::initialize(10, k, &mut ChaCha8Rng::seed_from_u64(k as u64)).unwrap();
        g.bench_with_input(BenchmarkId::new("random10", k), &init, |b, init| {
            b.iter(|| optimize_mixture(black_box(&net), &schedule, init.clone(), &settings).unwrap())
        });
    }
    g.sample_size(10);
    let big = image_net(6);
    let init = MixtureParams::initialize(big.n_nodes(), 10, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let image_schedule = AnnealSchedule::geometric(100.0, 7).unwrap();
    g.bench_function("image/10", |b| {
        b.iter(|| optimize_mixture(black_box(&big), &image_schedule, init.clone(), &settings).unwrap())
    });
    g.finish();
}

criterion_group!(benches, enumeration, mean_field, mixture);
criterion_main!(benches);
