//! Operator norm of `T*` through the sine expansion of the data.
//!
//! With `psi_j(t) = sqrt(2/tau) sin(j pi t / tau)`, the matrix `Gamma` with
//! rows `<f, psi_j> / j` satisfies `||T*|| = (tau/pi) ||Gamma||`. The series is
//! truncated at `N` rows once a rigorous bound on the neglected part meets the
//! requested relative tolerance.
//!
//! The tail bound uses Parseval: the rows past `N` have total energy
//! `||f||^2 - sum_{j<=N} |<f, psi_j>|^2` and each is damped by at least
//! `1/(N+1)`, so `||Gamma||^2 <= ||Gamma_N||^2 + tail^2`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lambda_max;
use crate::signals::{Interpolation, Signal};

/// Hard cap on the number of sine modes.
pub const MAX_MODES: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointNormEstimate {
    /// `(tau/pi) ||Gamma_N||`, a lower bound on the norm.
    pub value: f64,
    /// Rigorous upper bound.
    pub upper_bound: f64,
    /// Number of sine modes used.
    pub modes: usize,
    /// Whether the requested tolerance was met before `MAX_MODES`.
    pub converged: bool,
}

/// `sin` and `cos` of `pi r / M` for `r = 0..2M`; node phases of every mode
/// reduce exactly onto this table.
struct PhaseTable {
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl PhaseTable {
    fn new(segments: usize) -> Self {
        let len = 2 * segments;
        let angle = |r: usize| std::f64::consts::PI * r as f64 / segments as f64;
        PhaseTable {
            sin: (0..len).map(|r| angle(r).sin()).collect(),
            cos: (0..len).map(|r| angle(r).cos()).collect(),
        }
    }
}

/// `<f_k, psi_j>` for every component `k`, exact for the interpolation law.
fn sine_coefficients(f: &Signal, table: &PhaseTable, j: usize, out: &mut [f64]) {
    let grid = f.grid();
    let segs = grid.segments();
    let period = 2 * segs;
    let tau = grid.tau();
    let omega = j as f64 * std::f64::consts::PI / tau;
    let norm = (2.0 / tau).sqrt();
    let phase = |i: usize| ((j % period) * i) % period;
    let dim = f.dim();
    out.iter_mut().for_each(|o| *o = 0.0);
    match f.interpolation() {
        Interpolation::PiecewiseConstant => {
            // sum_i v_i (cos w t_i - cos w t_{i+1}) / w
            for i in 0..segs {
                let dc = table.cos[phase(i)] - table.cos[phase(i + 1)];
                let v = f.sample(i);
                for k in 0..dim {
                    out[k] += v[k] * dc;
                }
            }
            for o in out.iter_mut() {
                *o *= norm / omega;
            }
        }
        Interpolation::PiecewiseLinear => {
            // Continuous f: the -f cos(w t)/w terms telescope to the
            // endpoints; the slope terms give sum_i b_i (sin w t_{i+1} - sin w t_i) / w^2.
            let h = grid.step();
            for i in 0..segs {
                let ds = table.sin[phase(i + 1)] - table.sin[phase(i)];
                let a = f.sample(i);
                let b = f.sample(i + 1);
                for k in 0..dim {
                    out[k] += (b[k] - a[k]) / h * ds;
                }
            }
            let (c0, c_end) = (table.cos[0], table.cos[phase(segs)]);
            let first = f.sample(0);
            let last = f.sample(segs);
            for k in 0..dim {
                let boundary = (first[k] * c0 - last[k] * c_end) / omega;
                out[k] = norm * (boundary + out[k] / (omega * omega));
            }
        }
    }
}

/// Estimate `||T*||` for the synthesis operator of `f`.
pub fn adjoint_norm_estimate(f: &Signal, tol: f64) -> Result<AdjointNormEstimate> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange(format!("tolerance must be > 0, got {tol}")));
    }
    let dim = f.dim();
    let tau = f.tau();
    let energy = f.l2_norm_squared();
    let table = PhaseTable::new(f.grid().segments());
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    let mut captured = 0.0;
    let mut coeffs = vec![0.0; dim];
    let mut next_check = 1usize;
    let mut j = 0usize;
    loop {
        j += 1;
        sine_coefficients(f, &table, j, &mut coeffs);
        let inv_j2 = 1.0 / (j * j) as f64;
        for a in 0..dim {
            captured += coeffs[a] * coeffs[a];
            for b in 0..dim {
                gram[(a, b)] += coeffs[a] * coeffs[b] * inv_j2;
            }
        }
        if j == next_check || j == MAX_MODES {
            let head = lambda_max(&gram).max(0.0);
            let tail_energy = (energy - captured).max(0.0);
            let tail2 = tail_energy / ((j + 1) * (j + 1)) as f64;
            let lower = head.sqrt();
            let upper = (head + tail2).sqrt();
            let converged = upper - lower <= tol * lower || upper == 0.0;
            if converged || j == MAX_MODES {
                let s = tau / std::f64::consts::PI;
                return Ok(AdjointNormEstimate {
                    value: s * lower,
                    upper_bound: s * upper,
                    modes: j,
                    converged,
                });
            }
            next_check = (next_check * 2).min(MAX_MODES);
        }
    }
}

/// `||T*||` to relative accuracy `tol` (see [`adjoint_norm_estimate`]).
pub fn adjoint_norm(f: &Signal, tol: f64) -> Result<f64> {
    Ok(adjoint_norm_estimate(f, tol)?.value)
}
