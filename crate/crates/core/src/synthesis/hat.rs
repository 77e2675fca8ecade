use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::quadrature::gl3;
use crate::error::{Error, Result};
use crate::linalg::dense_serde;
use crate::signals::{merged_breakpoints, Trajectory, UniformGrid};
use crate::SCHEMA_VERSION;

/// Largest supported hat level; `2^20 - 1` columns is far past any useful
/// search depth.
pub const MAX_LEVEL: u32 = 20;

/// Synthesis operators restricted to the dyadic hat basis of level `l`:
/// column `p` holds `Xi phi_p`, `Xi_d phi_p` and `Upsilon phi_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HatMatrices {
    pub schema_version: u32,
    pub level: u32,
    #[serde(with = "dense_serde")]
    pub phi: DMatrix<f64>,
    #[serde(with = "dense_serde")]
    pub phi_d: DMatrix<f64>,
    #[serde(with = "dense_serde")]
    pub psi: DMatrix<f64>,
}

impl HatMatrices {
    pub fn columns(&self) -> usize {
        self.phi.ncols()
    }

    /// `[Phi; Psi]`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let (n, m, r) = (self.phi.nrows(), self.psi.nrows(), self.columns());
        let mut s = DMatrix::zeros(n + m, r);
        s.view_mut((0, 0), (n, r)).copy_from(&self.phi);
        s.view_mut((n, 0), (m, r)).copy_from(&self.psi);
        s
    }
}

/// Build `Phi_l`, `Phi_{d,l}` and `Psi_l` exactly on the merged grid of the
/// data nodes and the hat breakpoints `p tau / 2^l`.
pub fn hat_matrices(traj: &Trajectory, level: u32) -> Result<HatMatrices> {
    if level == 0 || level > MAX_LEVEL {
        return Err(Error::OutOfRange(format!(
            "hat level must be in 1..={MAX_LEVEL}, got {level}"
        )));
    }
    let (x, u) = (traj.x(), traj.u());
    let (n, m) = (traj.n(), traj.m());
    let parts = 1usize << level;
    let cols = parts - 1;
    let hat_grid = UniformGrid::new(traj.tau(), parts)?;
    let width = hat_grid.step();
    let breaks = merged_breakpoints(&[hat_grid, *x.grid(), *u.grid()])?;

    let mut phi = DMatrix::zeros(n, cols);
    let mut phi_d = DMatrix::zeros(n, cols);
    let mut psi = DMatrix::zeros(m, cols);
    let mut xv = vec![0.0; n];
    let mut uv = vec![0.0; m];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let q = hat_grid.segment_of(mid);
        let (left, right) = (hat_grid.node(q), hat_grid.node(q + 1));
        let sx = x.grid().segment_of(mid);
        let su = u.grid().segment_of(mid);
        for (t, wt) in gl3(a, b) {
            x.eval_in_segment(sx, t, &mut xv);
            u.eval_in_segment(su, t, &mut uv);
            // Hat q (1-based) descends on this hat segment, hat q+1 ascends.
            let pieces = [
                (q, (right - t) / width, -1.0 / width),
                (q + 1, (t - left) / width, 1.0 / width),
            ];
            for (p, val, slope) in pieces {
                if p == 0 || p > cols {
                    continue;
                }
                let col = p - 1;
                for k in 0..n {
                    phi[(k, col)] += wt * val * xv[k];
                    phi_d[(k, col)] -= wt * slope * xv[k];
                }
                for k in 0..m {
                    psi[(k, col)] += wt * val * uv[k];
                }
            }
        }
    }
    Ok(HatMatrices {
        schema_version: SCHEMA_VERSION,
        level,
        phi,
        phi_d,
        psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{Interpolation, Signal};

    fn traj_from(x: Signal) -> Trajectory {
        let u = Signal::zeros(*x.grid(), Interpolation::PiecewiseLinear, 1).unwrap();
        Trajectory::new(x, u).unwrap()
    }

    #[test]
    fn constant_state() {
        let g = UniformGrid::new(1.0, 3).unwrap();
        let x = Signal::sample_nodes(g, 2, |_| vec![2.0, -1.0]).unwrap();
        let h1 = hat_matrices(&traj_from(x.clone()), 1).unwrap();
        assert_eq!(h1.columns(), 1);
        assert!((h1.phi[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((h1.phi[(1, 0)] + 0.5).abs() < 1e-15);
        let h4 = hat_matrices(&traj_from(x), 4).unwrap();
        assert_eq!(h4.columns(), 15);
        assert!(h4.phi_d.amax() < 1e-14);
    }

    #[test]
    fn ramp_state_derivative_column() {
        let g = UniformGrid::new(1.0, 7).unwrap();
        let x = Signal::sample_nodes(g, 1, |t| vec![t]).unwrap();
        let h = hat_matrices(&traj_from(x), 1).unwrap();
        assert!((h.phi_d[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn level_bounds() {
        let g = UniformGrid::new(1.0, 2).unwrap();
        let x = Signal::sample_nodes(g, 1, |t| vec![t]).unwrap();
        assert!(hat_matrices(&traj_from(x), 0).is_err());
    }
}
