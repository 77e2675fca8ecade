//! Shared fixtures for the benchmarks.

use synthop_core::signals::{gaussian_white_noise, simulate_lti, Trajectory, UniformGrid};
use synthop_core::systems::{batch_reactor, batch_reactor_input, BATCH_REACTOR_SIGMA2};

/// Batch-reactor data on `segments` cells, noisy when `seed` is given.
pub fn reactor_data(segments: usize, seed: Option<u64>) -> Trajectory {
    let sys = batch_reactor();
    let grid = UniformGrid::new(1.0, segments).expect("valid grid");
    let u = batch_reactor_input(grid).expect("input");
    let w = seed.map(|s| gaussian_white_noise(grid, BATCH_REACTOR_SIGMA2, sys.n(), s).expect("noise"));
    simulate_lti(&sys.a, &sys.b, &sys.x0, &u, w.as_ref(), grid).expect("simulation")
}
