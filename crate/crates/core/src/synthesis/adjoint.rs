use serde::{Deserialize, Serialize};

use super::antiderivative::Antiderivative;
use crate::error::{Error, Result};
use crate::signals::{Interpolation, Signal};

/// Refinement factor of the sampling grid relative to the data grid.
pub const ADJOINT_REFINEMENT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjointKind {
    /// `T* v`, a piecewise cubic.
    Plain,
    /// `T_d* v`, a piecewise quadratic.
    Differentiated,
}

/// `t -> (T* v)(t)` or `t -> (T_d* v)(t)`: exact evaluation plus a
/// piecewise-linear sampling on a refined grid. Vanishes at both endpoints.
#[derive(Debug, Clone)]
pub struct AdjointFunction {
    kind: AdjointKind,
    v: Vec<f64>,
    ad: Antiderivative,
    samples: Signal,
}

impl AdjointFunction {
    pub fn kind(&self) -> AdjointKind {
        self.kind
    }

    /// Samples on the refined grid; first and last values are exactly zero.
    pub fn samples(&self) -> &Signal {
        &self.samples
    }

    /// Exact value at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= self.ad.tau() {
            return 0.0;
        }
        eval_exact(&self.ad, self.kind, &self.v, t)
    }
}

fn eval_exact(ad: &Antiderivative, kind: AdjointKind, v: &[f64], t: f64) -> f64 {
    let mut col = vec![0.0; ad.dim()];
    let seg = ad.segment_of(t);
    match kind {
        AdjointKind::Plain => ad.green_in_segment(seg, t, &mut col),
        AdjointKind::Differentiated => ad.diff_adjoint_in_segment(seg, t, &mut col),
    }
    col.iter().zip(v).map(|(c, vk)| c * vk).sum()
}

pub fn apply_adjoint(f: &Signal, v: &[f64], kind: AdjointKind) -> Result<AdjointFunction> {
    if v.len() != f.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector has {} entries, signal has dim {}",
            v.len(),
            f.dim()
        )));
    }
    let ad = Antiderivative::new(f);
    let fine = f.grid().refine(ADJOINT_REFINEMENT)?;
    let last = fine.segments();
    let values = fine
        .nodes()
        .enumerate()
        .map(|(i, t)| {
            if i == 0 || i == last {
                0.0
            } else {
                eval_exact(&ad, kind, v, t)
            }
        })
        .collect();
    let samples = Signal::new(fine, Interpolation::PiecewiseLinear, 1, values)?;
    Ok(AdjointFunction {
        kind,
        v: v.to_vec(),
        ad,
        samples,
    })
}
