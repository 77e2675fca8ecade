use serde::{Deserialize, Serialize};

use super::grid::UniformGrid;
use crate::error::{Error, Result};

/// Interpolation law between grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpolation {
    /// Values at the `M + 1` nodes, linear in between.
    #[serde(rename = "pl")]
    PiecewiseLinear,
    /// One value per segment.
    #[serde(rename = "pc")]
    PiecewiseConstant,
}

impl Interpolation {
    pub fn tag(&self) -> &'static str {
        match self {
            Interpolation::PiecewiseLinear => "pl",
            Interpolation::PiecewiseConstant => "pc",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag.trim() {
            "pl" => Some(Interpolation::PiecewiseLinear),
            "pc" => Some(Interpolation::PiecewiseConstant),
            _ => None,
        }
    }
}

/// A vector-valued piecewise polynomial (degree <= 1) on a uniform grid.
///
/// Samples are stored row-major: sample `i`, component `k` at `i * dim + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    grid: UniformGrid,
    dim: usize,
    interpolation: Interpolation,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(
        grid: UniformGrid,
        interpolation: Interpolation,
        dim: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSignal("dimension must be >= 1".into()));
        }
        let samples = match interpolation {
            Interpolation::PiecewiseLinear => grid.segments() + 1,
            Interpolation::PiecewiseConstant => grid.segments(),
        };
        if values.len() != samples * dim {
            return Err(Error::InvalidSignal(format!(
                "expected {} values ({} samples x dim {}), got {}",
                samples * dim,
                samples,
                dim,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal values".into()));
        }
        Ok(Signal {
            grid,
            dim,
            interpolation,
            values,
        })
    }

    pub fn zeros(grid: UniformGrid, interpolation: Interpolation, dim: usize) -> Result<Self> {
        let samples = match interpolation {
            Interpolation::PiecewiseLinear => grid.segments() + 1,
            Interpolation::PiecewiseConstant => grid.segments(),
        };
        Signal::new(grid, interpolation, dim, vec![0.0; samples * dim])
    }

    /// Piecewise-linear interpolant of `f` sampled at the grid nodes.
    pub fn sample_nodes<F>(grid: UniformGrid, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64>,
    {
        let mut values = Vec::with_capacity(grid.nodes_len() * dim);
        for t in grid.nodes() {
            let v = f(t);
            if v.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "sampler returned {} components, expected {dim}",
                    v.len()
                )));
            }
            values.extend(v);
        }
        Signal::new(grid, Interpolation::PiecewiseLinear, dim, values)
    }

    /// Piecewise-constant signal holding `f` evaluated at each segment midpoint.
    pub fn sample_midpoints<F>(grid: UniformGrid, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64>,
    {
        let h = grid.step();
        let mut values = Vec::with_capacity(grid.segments() * dim);
        for i in 0..grid.segments() {
            let v = f(grid.node(i) + 0.5 * h);
            if v.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "sampler returned {} components, expected {dim}",
                    v.len()
                )));
            }
            values.extend(v);
        }
        Signal::new(grid, Interpolation::PiecewiseConstant, dim, values)
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> f64 {
        self.grid.tau()
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn samples_len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Component `k` on segment `seg` as `a + b (t - t_seg)`.
    #[inline]
    pub fn segment_coeffs(&self, seg: usize, k: usize) -> (f64, f64) {
        match self.interpolation {
            Interpolation::PiecewiseConstant => (self.values[seg * self.dim + k], 0.0),
            Interpolation::PiecewiseLinear => {
                let a = self.values[seg * self.dim + k];
                let b = self.values[(seg + 1) * self.dim + k];
                (a, (b - a) / self.grid.step())
            }
        }
    }

    /// Evaluate the polynomial piece of segment `seg` at `t` (which may lie on
    /// either endpoint of that segment).
    #[inline]
    pub fn eval_in_segment(&self, seg: usize, t: f64, out: &mut [f64]) {
        let t0 = self.grid.node(seg);
        match self.interpolation {
            Interpolation::PiecewiseConstant => {
                out.copy_from_slice(self.sample(seg));
            }
            Interpolation::PiecewiseLinear => {
                let w = (t - t0) / self.grid.step();
                let a = self.sample(seg);
                let b = self.sample(seg + 1);
                for k in 0..self.dim {
                    out[k] = a[k] + w * (b[k] - a[k]);
                }
            }
        }
    }

    /// Point evaluation; at a node of a piecewise-constant signal the
    /// right-hand segment wins (the last node uses the last segment).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_in_segment(self.grid.segment_of(t), t, &mut out);
        out
    }

    pub fn scaled(&self, factor: f64) -> Signal {
        Signal {
            grid: self.grid,
            dim: self.dim,
            interpolation: self.interpolation,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Squared L2 norm, exact for the declared interpolation.
    pub fn l2_norm_squared(&self) -> f64 {
        let h = self.grid.step();
        match self.interpolation {
            Interpolation::PiecewiseConstant => {
                self.values.iter().map(|v| v * v).sum::<f64>() * h
            }
            Interpolation::PiecewiseLinear => {
                let mut acc = 0.0;
                for seg in 0..self.grid.segments() {
                    let a = self.sample(seg);
                    let b = self.sample(seg + 1);
                    for k in 0..self.dim {
                        acc += (a[k] * a[k] + a[k] * b[k] + b[k] * b[k]) / 3.0;
                    }
                }
                acc * h
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}
