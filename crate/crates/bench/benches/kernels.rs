use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use synthop_bench::reactor_data;
use synthop_core::lmi::{synthesize_gain, synthesize_gain_regularized, Margins, DEFAULT_DELTA_MAX, DEFAULT_LAMBDA};
use synthop_core::sdp::BarrierSolver;
use synthop_core::signals::{gaussian_white_noise, UniformGrid};
use synthop_core::synthesis::{adjoint_norm, gram_blocks, hat_matrices};

fn gram(c: &mut Criterion) {
    let mut group = c.benchmark_group("gram_blocks");
    for segments in [256, 2048, 16384] {
        let traj = reactor_data(segments, Some(1));
        group.bench_with_input(BenchmarkId::from_parameter(segments), &traj, |b, t| {
            b.iter(|| gram_blocks(black_box(t)).unwrap())
        });
    }
    group.finish();
}

fn norm(c: &mut Criterion) {
    let mut group = c.benchmark_group("adjoint_norm");
    for segments in [256, 2048] {
        let w = gaussian_white_noise(UniformGrid::new(1.0, segments).unwrap(), 1e-2, 4, 1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(segments), &w, |b, w| {
            b.iter(|| adjoint_norm(black_box(w), 1e-6).unwrap())
        });
    }
    group.finish();
}

fn hats(c: &mut Criterion) {
    let traj = reactor_data(2048, None);
    let mut group = c.benchmark_group("hat_matrices");
    for level in [3, 6] {
        group.bench_with_input(BenchmarkId::from_parameter(level), &level, |b, &l| {
            b.iter(|| hat_matrices(black_box(&traj), l).unwrap())
        });
    }
    group.finish();
}

fn lmi(c: &mut Criterion) {
    let gram = gram_blocks(&reactor_data(2048, Some(1))).unwrap();
    let solver = BarrierSolver::default();
    let mut group = c.benchmark_group("lmi");
    group.sample_size(10);
    group.bench_function("feasibility_c0.05", |b| {
        b.iter(|| synthesize_gain(black_box(&gram), 0.05, Margins::default(), &solver).unwrap())
    });
    group.bench_function("regularized_c0.1", |b| {
        b.iter(|| {
            synthesize_gain_regularized(black_box(&gram), 0.1, DEFAULT_LAMBDA, DEFAULT_DELTA_MAX, Margins::default(), &solver)
                .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, gram, norm, hats, lmi);
criterion_main!(benches);
