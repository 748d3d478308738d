//! Kernel throughput benchmarks. The headline contrast is the cost of
//! one preprocessing step per optimizer family: SR-Sinkhorn touches each
//! entry a constant number of times per iteration, while the whitening
//! path multiplies m x m Gram factors.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use multinorm_core::matrix::{newton_schulz_whiten, DenseMatrix};
use multinorm_core::multinorm::multi_normalize;
use multinorm_core::norms::{sinkhorn_pair, Mode};
use multinorm_core::optim::{adam_step, swan_preprocess, AdamHyper, AdamState};
use multinorm_core::prng::Xorshift64Star;
use multinorm_core::sinkhorn::{classic_sinkhorn, sr_sinkhorn};

fn random_matrix(seed: u64, m: usize, n: usize) -> DenseMatrix {
    let mut rng = Xorshift64Star::new(seed);
    DenseMatrix::from_fn(m, n, |_, _| {
        let mag = rng.next_range(0.1, 1.0);
        if rng.next_f64() < 0.5 {
            -mag
        } else {
            mag
        }
    })
}

fn bench_preprocessing(c: &mut Criterion) {
    let mut group = c.benchmark_group("gradient_preprocessing");
    group.sample_size(20);
    for &(m, n) in &[(64, 256), (128, 512)] {
        let grad = random_matrix(7, m, n);
        group.bench_with_input(
            BenchmarkId::new("sr_sinkhorn_l5", format!("{m}x{n}")),
            &grad,
            |b, g| b.iter(|| sr_sinkhorn(black_box(g), 5, Mode::Optimizer).unwrap()),
        );
        group.bench_with_input(
            BenchmarkId::new("swan_l1", format!("{m}x{n}")),
            &grad,
            |b, g| b.iter(|| swan_preprocess(black_box(g), 1, Mode::Optimizer).unwrap()),
        );
        group.bench_with_input(
            BenchmarkId::new("newton_schulz_8", format!("{m}x{n}")),
            &grad,
            |b, g| b.iter(|| newton_schulz_whiten(black_box(g), 8).unwrap()),
        );
        group.bench_with_input(
            BenchmarkId::new("classic_sinkhorn_l5", format!("{m}x{n}")),
            &grad.hadamard_square(),
            |b, a| b.iter(|| classic_sinkhorn(black_box(a), 5).unwrap()),
        );
    }
    group.finish();
}

fn bench_engine(c: &mut Criterion) {
    let mut group = c.benchmark_group("multinorm_engine");
    group.sample_size(20);
    let grad = random_matrix(11, 64, 256);
    let pair = sinkhorn_pair(64, 256);
    group.bench_function("multi_normalize_sinkhorn_l5", |b| {
        b.iter(|| multi_normalize(black_box(&grad), &pair, 5, Mode::Optimizer, false).unwrap())
    });
    group.finish();
}

fn bench_adam(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimizer_steps");
    group.sample_size(20);
    let (m, n) = (128, 512);
    let grad = random_matrix(13, m, n);
    let hyper = AdamHyper::default();
    group.bench_function("adam_step_128x512", |b| {
        b.iter_batched(
            || (AdamState::new(m, n), DenseMatrix::zeros(m, n)),
            |(mut state, mut params)| {
                adam_step(&mut state, &hyper, &mut params, black_box(&grad), 1e-3).unwrap()
            },
            criterion::BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, bench_preprocessing, bench_engine, bench_adam);
criterion_main!(benches);
