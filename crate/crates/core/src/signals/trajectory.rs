use serde::{Deserialize, Serialize};

use super::signal::{Interpolation, Signal};
use crate::error::{Error, Result};

/// Input/state data `(x, u, tau)`: `x` piecewise linear (so it lies in H1),
/// `u` of either interpolation law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    x: Signal,
    u: Signal,
}

impl Trajectory {
    pub fn new(x: Signal, u: Signal) -> Result<Self> {
        if x.interpolation() != Interpolation::PiecewiseLinear {
            return Err(Error::InvalidSignal(
                "state data must be piecewise linear".into(),
            ));
        }
        if !x.grid().same_tau(u.grid()) {
            return Err(Error::DimensionMismatch(format!(
                "state horizon {} differs from input horizon {}",
                x.tau(),
                u.tau()
            )));
        }
        Ok(Trajectory { x, u })
    }

    pub fn x(&self) -> &Signal {
        &self.x
    }

    pub fn u(&self) -> &Signal {
        &self.u
    }

    pub fn n(&self) -> usize {
        self.x.dim()
    }

    pub fn m(&self) -> usize {
        self.u.dim()
    }

    pub fn tau(&self) -> f64 {
        self.x.tau()
    }

    /// Multiply both state and input data by `factor`.
    pub fn scaled(&self, factor: f64) -> Trajectory {
        Trajectory {
            x: self.x.scaled(factor),
            u: self.u.scaled(factor),
        }
    }
}
