use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use hetnet::analytics::{
    extinction_probabilities, spectral_radius, EXTINCTION_MAX_ITER, EXTINCTION_TOL, SPECTRAL_MAX_ITER,
    SPECTRAL_TOL,
};
use hetnet::epidemic::{simulate_outbreak, IndexCase};
use hetnet::netgen::build_network;
use hetnet_bench::{attributes, network, offspring_matrix, symmetric_scenario};

fn netgen(c: &mut Criterion) {
    let attrs = attributes(100_000);
    c.bench_function("build_network/1e5", |b| b.iter(|| build_network(black_box(&attrs), 7)));
}

fn epidemic(c: &mut Criterion) {
    let (attrs, g) = network(100_000);
    let mut seed = 0;
    c.bench_function("simulate_outbreak/1e5", |b| {
        b.iter(|| {
            seed += 1;
            simulate_outbreak(&g, &attrs, IndexCase::Uniform, seed).unwrap()
        })
    });
}

fn analytics(c: &mut Criterion) {
    let m = offspring_matrix();
    c.bench_function(&format!("spectral_radius/{}x{}", m.dim(), m.dim()), |b| {
        b.iter(|| spectral_radius(black_box(&m), SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap())
    });
    let (d, k, t) = symmetric_scenario(0.5);
    c.bench_function("extinction/symmetric", |b| {
        b.iter(|| extinction_probabilities(&d, &k, &t, EXTINCTION_TOL, EXTINCTION_MAX_ITER).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = netgen, epidemic, analytics
}
criterion_main!(benches);
