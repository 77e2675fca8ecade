use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::grid::UniformGrid;
use super::signal::{Interpolation, Signal};
use crate::error::{Error, Result};

/// Piecewise-constant realization of white noise with covariance
/// `E[w(t) w(s)^T] = delta(t - s) sigma2 I`.
///
/// Each segment value is drawn i.i.d. normal with per-component standard
/// deviation `sqrt(sigma2 / dt)`. Deterministic given `seed`.
pub fn gaussian_white_noise(grid: UniformGrid, sigma2: f64, dim: usize, seed: u64) -> Result<Signal> {
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(Error::OutOfRange(format!("noise intensity must be >= 0, got {sigma2}")));
    }
    if sigma2 == 0.0 {
        return Signal::zeros(grid, Interpolation::PiecewiseConstant, dim);
    }
    let std = (sigma2 / grid.step()).sqrt();
    let normal = Normal::new(0.0, std).map_err(|e| Error::OutOfRange(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.segments() * dim).map(|_| normal.sample(&mut rng)).collect();
    Signal::new(grid, Interpolation::PiecewiseConstant, dim, values)
}
