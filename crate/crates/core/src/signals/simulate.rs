use nalgebra::{DMatrix, DVector};

use super::expm::matrix_exponential;
use super::grid::UniformGrid;
use super::signal::{Interpolation, Signal};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::{check_finite, check_square};

/// One-segment transition maps for an input channel `x' = A x + Bc v`.
///
/// With `v(t_k + s) = v_k + (v_{k+1} - v_k) s / h` the exact update is
/// `x_{k+1} = phi x_k + g0 v_k + g1 (v_{k+1} - v_k)`.
struct ChannelMaps {
    phi: DMatrix<f64>,
    g0: DMatrix<f64>,
    g1: DMatrix<f64>,
}

fn channel_maps(a: &DMatrix<f64>, bc: &DMatrix<f64>, h: f64) -> Result<ChannelMaps> {
    let n = a.nrows();
    let q = bc.ncols();
    let size = n + 2 * q;
    let mut aug = DMatrix::zeros(size, size);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * h));
    aug.view_mut((0, n), (n, q)).copy_from(&(bc * h));
    for k in 0..q {
        aug[(n + k, n + q + k)] = 1.0;
    }
    let e = matrix_exponential(&aug)?;
    Ok(ChannelMaps {
        phi: e.view((0, 0), (n, n)).into_owned(),
        g0: e.view((0, n), (n, q)).into_owned(),
        g1: e.view((0, n + q), (n, q)).into_owned(),
    })
}

fn check_refinement(sig: &Signal, grid: &UniformGrid, what: &str) -> Result<()> {
    if !sig.grid().same_tau(grid) {
        return Err(Error::DimensionMismatch(format!(
            "{what} horizon {} differs from grid horizon {}",
            sig.tau(),
            grid.tau()
        )));
    }
    let (a, b) = (sig.grid().segments(), grid.segments());
    if a % b != 0 && b % a != 0 {
        return Err(Error::InvalidGrid(format!(
            "{what} grid ({a} segments) and output grid ({b} segments) are not nested"
        )));
    }
    Ok(())
}

/// Adds the contribution of one input channel over simulation segment `k`.
fn accumulate(
    acc: &mut DVector<f64>,
    maps: &ChannelMaps,
    sig: &Signal,
    k: usize,
    per_seg: usize,
    sim_grid: &UniformGrid,
    buf0: &mut [f64],
    buf1: &mut [f64],
) {
    let seg = k / per_seg;
    match sig.interpolation() {
        Interpolation::PiecewiseConstant => {
            let v = DVector::from_column_slice(sig.sample(seg));
            *acc += &maps.g0 * v;
        }
        Interpolation::PiecewiseLinear => {
            sig.eval_in_segment(seg, sim_grid.node(k), buf0);
            sig.eval_in_segment(seg, sim_grid.node(k + 1), buf1);
            let v0 = DVector::from_column_slice(buf0);
            let dv = DVector::from_column_slice(buf1) - &v0;
            *acc += &maps.g0 * v0 + &maps.g1 * dv;
        }
    }
}

/// Exact simulation of `x' = A x + B u + w` sampled at the nodes of `grid`.
///
/// Each segment is propagated with an augmented matrix exponential, so the
/// node values are exact (up to rounding) for piecewise-linear and
/// piecewise-constant `u` and `w`. The returned state is the piecewise-linear
/// interpolant of those node values; the returned input is `u` itself.
pub fn simulate_lti(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    x0: &DVector<f64>,
    u: &Signal,
    w: Option<&Signal>,
    grid: UniformGrid,
) -> Result<Trajectory> {
    check_square(a, "A")?;
    let n = a.nrows();
    if b.nrows() != n || b.ncols() != u.dim() || x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "A is {n}x{n}, B is {}x{}, x0 has {}, u has dim {}",
            b.nrows(),
            b.ncols(),
            x0.len(),
            u.dim()
        )));
    }
    check_finite(a, "A")?;
    check_finite(b, "B")?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("x0".into()));
    }
    check_refinement(u, &grid, "input")?;
    if let Some(w) = w {
        if w.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "noise has dim {}, state has dim {n}",
                w.dim()
            )));
        }
        check_refinement(w, &grid, "noise")?;
    }

    let lcm = |a: usize, b: usize| {
        let (mut x, mut y) = (a, b);
        while y != 0 {
            (x, y) = (y, x % y);
        }
        a / x * b
    };
    let mut sim_segments = lcm(grid.segments(), u.grid().segments());
    if let Some(w) = w {
        sim_segments = lcm(sim_segments, w.grid().segments());
    }
    let sim_grid = grid.refine(sim_segments / grid.segments())?;
    let h = sim_grid.step();

    let u_maps = channel_maps(a, b, h)?;
    let w_maps = match w {
        Some(_) => Some(channel_maps(a, &DMatrix::identity(n, n), h)?),
        None => None,
    };
    let u_per = sim_segments / u.grid().segments();
    let w_per = w.map(|w| sim_segments / w.grid().segments()).unwrap_or(1);
    let out_every = sim_segments / grid.segments();

    let mut ub0 = vec![0.0; u.dim()];
    let mut ub1 = vec![0.0; u.dim()];
    let mut wb0 = vec![0.0; n];
    let mut wb1 = vec![0.0; n];
    let mut x = x0.clone();
    let mut values: Vec<f64> = Vec::with_capacity(grid.nodes_len() * n);
    values.extend(x.iter());
    for k in 0..sim_segments {
        let mut next = &u_maps.phi * &x;
        accumulate(&mut next, &u_maps, u, k, u_per, &sim_grid, &mut ub0, &mut ub1);
        if let (Some(w), Some(maps)) = (w, w_maps.as_ref()) {
            accumulate(&mut next, maps, w, k, w_per, &sim_grid, &mut wb0, &mut wb1);
        }
        x = next;
        if (k + 1) % out_every == 0 {
            values.extend(x.iter());
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("simulated state (overflow)".into()));
    }
    let xs = Signal::new(grid, Interpolation::PiecewiseLinear, n, values)?;
    Trajectory::new(xs, u.clone())
}
