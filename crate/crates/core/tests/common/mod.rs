//! Data generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use synthop_core::signals::{gaussian_white_noise, simulate_lti, Interpolation, Signal, Trajectory, UniformGrid};
use synthop_core::synthesis::{gram_blocks, GramBlocks};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random trajectory with arbitrary (not system-generated) samples.
pub fn random_trajectory(rng: &mut ChaCha8Rng, n: usize, m: usize, segments: usize, tau: f64) -> Trajectory {
    let grid = UniformGrid::new(tau, segments).unwrap();
    let xs: Vec<f64> = (0..(segments + 1) * n).map(|_| rng.sample(StandardNormal)).collect();
    let x = Signal::new(grid, Interpolation::PiecewiseLinear, n, xs).unwrap();
    let u = if rng.random_bool(0.5) {
        let us = (0..(segments + 1) * m).map(|_| rng.sample(StandardNormal)).collect();
        Signal::new(grid, Interpolation::PiecewiseLinear, m, us).unwrap()
    } else {
        let us = (0..segments * m).map(|_| rng.sample(StandardNormal)).collect();
        Signal::new(grid, Interpolation::PiecewiseConstant, m, us).unwrap()
    };
    Trajectory::new(x, u).unwrap()
}

/// Sum of random sinusoids per channel, sampled as a piecewise-linear signal.
pub fn random_input(rng: &mut ChaCha8Rng, m: usize, grid: UniformGrid) -> Signal {
    let params: Vec<[f64; 3]> = (0..m * 3)
        .map(|_| [rng.random_range(0.5..3.0), rng.random_range(0.5..6.0), rng.random_range(0.0..6.3)])
        .collect();
    Signal::sample_nodes(grid, m, |t| {
        (0..m)
            .map(|k| params[3 * k..3 * k + 3].iter().map(|p| p[0] * (p[1] * t + p[2]).sin()).sum())
            .collect()
    })
    .unwrap()
}

pub struct NoisyDataset {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub noise: Signal,
    pub traj: Trajectory,
    pub gram: GramBlocks,
}

/// Random system driven by a random input and process noise of intensity `sigma2`.
pub fn noisy_dataset(seed: u64, segments: usize, sigma2: f64) -> NoisyDataset {
    let mut r = rng(seed);
    let n = r.random_range(1..=3);
    let m = r.random_range(1..=2);
    let a = normal_matrix(&mut r, n, n);
    let b = normal_matrix(&mut r, n, m);
    let x0 = DVector::from_fn(n, |_, _| r.sample::<f64, _>(StandardNormal));
    let grid = UniformGrid::new(1.0, segments).unwrap();
    let u = random_input(&mut r, m, grid);
    let noise = gaussian_white_noise(grid, sigma2, n, seed ^ 0x5eed).unwrap();
    let traj = simulate_lti(&a, &b, &x0, &u, Some(&noise), grid).unwrap();
    let gram = gram_blocks(&traj).unwrap();
    NoisyDataset { a, b, noise, traj, gram }
}

/// `(values at midpoints of `cells` cells) as a cells x dim matrix`.
fn midpoint_samples(f: &Signal, cells: usize) -> DMatrix<f64> {
    let h = f.tau() / cells as f64;
    let mut out = DMatrix::zeros(cells, f.dim());
    for i in 0..cells {
        let v = f.eval((i as f64 + 0.5) * h);
        for (k, x) in v.iter().enumerate() {
            out[(i, k)] = *x;
        }
    }
    out
}

/// Midpoint-rule Gram blocks from the operator definitions, on `cells`
/// cells per axis. Double integrals use the kernels `G(t, s)` and
/// `dG/dt(t, s)` (jump on the diagonal averaged); `Gdd` uses the 1-D
/// centered second moment.
pub fn midpoint_gram(traj: &Trajectory, cells: usize) -> [DMatrix<f64>; 6] {
    let tau = traj.tau();
    let h = tau / cells as f64;
    let t = |i: usize| (i as f64 + 0.5) * h;
    let green = DMatrix::from_fn(cells, cells, |i, j| {
        let (a, b) = (t(i), t(j));
        if a <= b { a * (tau - b) / tau } else { b * (tau - a) / tau }
    });
    let dgreen = DMatrix::from_fn(cells, cells, |i, j| {
        let b = t(j);
        if i < j {
            (tau - b) / tau
        } else if i > j {
            -b / tau
        } else {
            0.5 * ((tau - b) / tau - b / tau)
        }
    });
    let x = midpoint_samples(traj.x(), cells);
    let u = midpoint_samples(traj.u(), cells);
    let h2 = h * h;
    let gxx = x.transpose() * &green * &x * h2;
    let gxu = x.transpose() * &green * &u * h2;
    let guu = u.transpose() * &green * &u * h2;
    let gdx = -(x.transpose() * &dgreen * &x) * h2;
    let gdu = -(x.transpose() * &dgreen * &u) * h2;
    let gdd = {
        let fine = cells * 600;
        let xs = midpoint_samples(traj.x(), fine);
        let hf = tau / fine as f64;
        let mean = xs.row_sum() * hf / tau;
        let centered = DMatrix::from_fn(fine, xs.ncols(), |i, k| xs[(i, k)] - mean[k]);
        centered.transpose() * &centered * hf
    };
    [gdd, gdx, gdu, gxx, gxu, guu]
}

/// Richardson-extrapolated midpoint oracle (`cells` and `2 cells`).
pub fn oracle_gram(traj: &Trajectory, cells: usize) -> [DMatrix<f64>; 6] {
    let coarse = midpoint_gram(traj, cells);
    let fine = midpoint_gram(traj, 2 * cells);
    let mut out = fine.clone();
    for k in 0..6 {
        out[k] = (&fine[k] * 4.0 - &coarse[k]) / 3.0;
    }
    out
}

pub fn blocks_of(g: &GramBlocks) -> [DMatrix<f64>; 6] {
    [g.gdd.clone(), g.gdx.clone(), g.gdu.clone(), g.gxx.clone(), g.gxu.clone(), g.guu.clone()]
}

pub const BLOCK_NAMES: [&str; 6] = ["Gdd", "Gdx", "Gdu", "Gxx", "Gxu", "Guu"];
