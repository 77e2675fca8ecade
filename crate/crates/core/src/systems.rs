//! Reference plant used by the reproduction harness and the examples.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

use crate::error::Result;
use crate::signals::{Signal, UniformGrid};

/// Horizon of the batch-reactor experiment.
pub const BATCH_REACTOR_TAU: f64 = 1.0;

/// Noise intensity of the noisy batch-reactor experiment.
pub const BATCH_REACTOR_SIGMA2: f64 = 1e-2;

/// Continuous-time plant `x' = A x + B u` with an initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub x0: DVector<f64>,
}

impl LtiSystem {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }
}

/// Linearized batch reactor (four states, two inputs); open loop has two
/// unstable eigenvalues.
pub fn batch_reactor() -> LtiSystem {
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
         1.38,   -0.2077,  6.715, -5.676,
        -0.5814, -4.29,    0.0,    0.675,
         1.067,   4.273,  -6.654,  5.893,
         0.048,   4.273,   1.343, -2.104,
    ]);
    #[rustfmt::skip]
    let b = DMatrix::from_row_slice(4, 2, &[
        0.0,    0.0,
        5.679,  0.0,
        1.136, -3.146,
        1.136,  0.0,
    ]);
    let x0 = DVector::from_vec(vec![1.0, -1.0, 0.0, 1.0]);
    LtiSystem { a, b, x0 }
}

/// `u(t) = 5 [sin 2pi t + sin 4pi t; sin 3pi t + sin 6pi t]`.
pub fn batch_reactor_input_at(t: f64) -> [f64; 2] {
    [
        5.0 * ((2.0 * PI * t).sin() + (4.0 * PI * t).sin()),
        5.0 * ((3.0 * PI * t).sin() + (6.0 * PI * t).sin()),
    ]
}

/// The excitation sampled at the nodes of `grid` (piecewise linear).
pub fn batch_reactor_input(grid: UniformGrid) -> Result<Signal> {
    Signal::sample_nodes(grid, 2, |t| batch_reactor_input_at(t).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_real_eigenvalue;

    #[test]
    fn open_loop_is_unstable() {
        let sys = batch_reactor();
        assert_eq!((sys.n(), sys.m()), (4, 2));
        let s = max_real_eigenvalue(&sys.a);
        assert!((s - 1.9910).abs() < 5e-4, "{s}");
    }
}
