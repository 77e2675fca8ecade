//! Products of synthesis operators and their adjoints.
//!
//! For a signal `f` with synthesis operator `T` (and differentiated variant
//! `T_d`), the adjoints are `(T* v)(t) = H_f(t)^T v` with `H_f'' = -f`,
//! `H_f(0) = H_f(tau) = 0`, and `(T_d* v)(t) = (-F(t) + (t/tau) F(tau))^T v`
//! with `F = int_0^t f`. Both are computed in closed form from the
//! antiderivatives of the data, and the outer integral against the second
//! signal is carried out by Gauss-Legendre on the merged grid, which is exact
//! for the piecewise-polynomial degrees involved.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::antiderivative::Antiderivative;
use super::quadrature::gl3;
use crate::error::{Error, Result};
use crate::linalg::{dense_serde, scale_of, symmetrize};
use crate::signals::{merged_breakpoints, Signal, Trajectory};
use crate::SCHEMA_VERSION;

/// Green's function of `-d^2/dt^2` on `[0, tau]` with Dirichlet conditions.
pub fn green_kernel(t: f64, s: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::OutOfRange(format!("tau must be > 0, got {tau}")));
    }
    let inside = |v: f64| (0.0..=tau).contains(&v);
    if !inside(t) || !inside(s) {
        return Err(Error::OutOfRange(format!(
            "G({t}, {s}) requested outside [0, {tau}]"
        )));
    }
    Ok(if t <= s {
        t * (tau - s) / tau
    } else {
        s * (tau - t) / tau
    })
}

fn check_same_tau(f: &Signal, g: &Signal) -> Result<()> {
    if f.grid().same_tau(g.grid()) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "signals cover different horizons: {} vs {}",
            f.tau(),
            g.tau()
        )))
    }
}

/// `int_0^tau g(t) a(t)^T dt` where `a` is evaluated through `eval_a`
/// (segment of the antiderivative's signal, time, output).
fn outer_integral<F>(g: &Signal, ad: &Antiderivative, eval_a: F) -> Result<DMatrix<f64>>
where
    F: Fn(&Antiderivative, usize, f64, &mut [f64]),
{
    check_same_tau(ad.signal(), g)?;
    let (p, q) = (ad.dim(), g.dim());
    let breaks = merged_breakpoints(&[*ad.signal().grid(), *g.grid()])?;
    let mut out = DMatrix::zeros(q, p);
    let mut av = vec![0.0; p];
    let mut gv = vec![0.0; q];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let seg_a = ad.segment_of(mid);
        let seg_g = g.grid().segment_of(mid);
        for (t, wt) in gl3(a, b) {
            eval_a(ad, seg_a, t, &mut av);
            g.eval_in_segment(seg_g, t, &mut gv);
            for i in 0..q {
                let gi = wt * gv[i];
                for j in 0..p {
                    out[(i, j)] += gi * av[j];
                }
            }
        }
    }
    Ok(out)
}

/// `S_g T_f*` (q x p): `int int G(t,s) g(t) f(s)^T ds dt`.
pub fn gram_tt(f: &Signal, g: &Signal) -> Result<DMatrix<f64>> {
    let ad = Antiderivative::new(f);
    outer_integral(g, &ad, |ad, seg, t, out| ad.green_in_segment(seg, t, out))
}

/// `S_g T_{d,f}*` (q x p): `int g(t) (-F(t) + (t/tau) F(tau))^T dt`.
pub fn gram_td(g: &Signal, f: &Signal) -> Result<DMatrix<f64>> {
    let ad = Antiderivative::new(f);
    outer_integral(g, &ad, |ad, seg, t, out| ad.diff_adjoint_in_segment(seg, t, out))
}

/// `T_d T_d*` (p x p): `int f f^T - (1/tau) int f int f^T`.
///
/// Evaluated as `int (f - mean)(f - mean)^T`, which is the same matrix and
/// stays PSD under rounding.
pub fn gram_dd(f: &Signal) -> DMatrix<f64> {
    let p = f.dim();
    let ad = Antiderivative::new(f);
    let tau = f.tau();
    let mean: Vec<f64> = ad.total().iter().map(|v| v / tau).collect();
    let mut out = DMatrix::zeros(p, p);
    let mut fv = vec![0.0; p];
    let grid = f.grid();
    for seg in 0..grid.segments() {
        let (a, b) = (grid.node(seg), grid.node(seg + 1));
        for (t, wt) in gl3(a, b) {
            f.eval_in_segment(seg, t, &mut fv);
            for (v, m) in fv.iter_mut().zip(&mean) {
                *v -= m;
            }
            for i in 0..p {
                for j in 0..p {
                    out[(i, j)] += wt * fv[i] * fv[j];
                }
            }
        }
    }
    symmetrize(&out)
}

/// The six operator products that encode a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramBlocks {
    pub schema_version: u32,
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    /// `Xi_d Xi_d*`
    #[serde(with = "dense_serde")]
    pub gdd: DMatrix<f64>,
    /// `Xi_d Xi*`
    #[serde(with = "dense_serde")]
    pub gdx: DMatrix<f64>,
    /// `Xi_d Upsilon*`
    #[serde(with = "dense_serde")]
    pub gdu: DMatrix<f64>,
    /// `Xi Xi*`
    #[serde(with = "dense_serde")]
    pub gxx: DMatrix<f64>,
    /// `Xi Upsilon*`
    #[serde(with = "dense_serde")]
    pub gxu: DMatrix<f64>,
    /// `Upsilon Upsilon*`
    #[serde(with = "dense_serde")]
    pub guu: DMatrix<f64>,
}

impl GramBlocks {
    pub fn zeros(n: usize, m: usize, tau: f64) -> Self {
        GramBlocks {
            schema_version: SCHEMA_VERSION,
            n,
            m,
            tau,
            gdd: DMatrix::zeros(n, n),
            gdx: DMatrix::zeros(n, n),
            gdu: DMatrix::zeros(n, m),
            gxx: DMatrix::zeros(n, n),
            gxu: DMatrix::zeros(n, m),
            guu: DMatrix::zeros(m, m),
        }
    }

    /// `V V*` with `V = [Xi; Upsilon]`: `[[Gxx, Gxu], [Gxu^T, Guu]]`.
    pub fn data_gram(&self) -> DMatrix<f64> {
        let (n, m) = (self.n, self.m);
        let mut v = DMatrix::zeros(n + m, n + m);
        v.view_mut((0, 0), (n, n)).copy_from(&self.gxx);
        v.view_mut((0, n), (n, m)).copy_from(&self.gxu);
        v.view_mut((n, 0), (m, n)).copy_from(&self.gxu.transpose());
        v.view_mut((n, n), (m, m)).copy_from(&self.guu);
        v
    }

    /// `[Gdx Gdu] = Xi_d V*`.
    pub fn cross_gram(&self) -> DMatrix<f64> {
        let (n, m) = (self.n, self.m);
        let mut c = DMatrix::zeros(n, n + m);
        c.view_mut((0, 0), (n, n)).copy_from(&self.gdx);
        c.view_mut((0, n), (n, m)).copy_from(&self.gdu);
        c
    }

    pub fn scale(&self) -> f64 {
        scale_of(&[&self.gdd, &self.gdx, &self.gdu, &self.gxx, &self.gxu, &self.guu])
    }

    /// Multiply every block by `factor`.
    pub fn scaled(&self, factor: f64) -> GramBlocks {
        GramBlocks {
            gdd: &self.gdd * factor,
            gdx: &self.gdx * factor,
            gdu: &self.gdu * factor,
            gxx: &self.gxx * factor,
            gxu: &self.gxu * factor,
            guu: &self.guu * factor,
            ..self.clone()
        }
    }

    /// `[Gdx Gdu] - [A B] V V*`; zero when `Xi_d = A Xi + B Upsilon`.
    pub fn compatibility_residual(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_system(a, b)?;
        let ab = stack_ab(a, b);
        Ok(self.cross_gram() - ab * self.data_gram())
    }

    pub fn check_system(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
        if a.shape() != (self.n, self.n) || b.shape() != (self.n, self.m) {
            return Err(Error::DimensionMismatch(format!(
                "expected A {n}x{n} and B {n}x{m}, got {:?} and {:?}",
                a.shape(),
                b.shape(),
                n = self.n,
                m = self.m
            )));
        }
        Ok(())
    }

    /// Check block shapes and finiteness (used after deserialization).
    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n, self.m);
        let shapes = [
            ("Gdd", &self.gdd, (n, n)),
            ("Gdx", &self.gdx, (n, n)),
            ("Gdu", &self.gdu, (n, m)),
            ("Gxx", &self.gxx, (n, n)),
            ("Gxu", &self.gxu, (n, m)),
            ("Guu", &self.guu, (m, m)),
        ];
        for (name, mat, shape) in shapes {
            if mat.shape() != shape {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {:?}, expected {shape:?}",
                    mat.shape()
                )));
            }
            crate::linalg::check_finite(mat, name)?;
        }
        if !(self.tau > 0.0) {
            return Err(Error::OutOfRange(format!("tau must be > 0, got {}", self.tau)));
        }
        Ok(())
    }
}

/// `[A B]` as one `n x (n+m)` matrix.
pub fn stack_ab(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let m = b.ncols();
    let mut ab = DMatrix::zeros(n, n + m);
    ab.view_mut((0, 0), (n, n)).copy_from(a);
    ab.view_mut((0, n), (n, m)).copy_from(b);
    ab
}

/// All six Gram blocks of a trajectory.
pub fn gram_blocks(traj: &Trajectory) -> Result<GramBlocks> {
    let (x, u) = (traj.x(), traj.u());
    let gdd = gram_dd(x);
    let gxx = symmetrize(&gram_tt(x, x)?);
    let guu = symmetrize(&gram_tt(u, u)?);
    // S_x T_u* = Xi Upsilon*
    let gxu = gram_tt(u, x)?;
    // (S_x T_{d,x}*)^T = (Xi Xi_d*)^T = Xi_d Xi*
    let gdx = gram_td(x, x)?.transpose();
    // (S_u T_{d,x}*)^T = (Upsilon Xi_d*)^T = Xi_d Upsilon*
    let gdu = gram_td(u, x)?.transpose();
    let blocks = GramBlocks {
        schema_version: SCHEMA_VERSION,
        n: traj.n(),
        m: traj.m(),
        tau: traj.tau(),
        gdd,
        gdx,
        gdu,
        gxx,
        gxu,
        guu,
    };
    blocks.validate()?;
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{Interpolation, UniformGrid};
    use std::f64::consts::PI;

    fn grid(tau: f64, m: usize) -> UniformGrid {
        UniformGrid::new(tau, m).unwrap()
    }

    fn constant(tau: f64, m: usize, v: f64) -> Signal {
        Signal::sample_nodes(grid(tau, m), 1, |_| vec![v]).unwrap()
    }

    #[test]
    fn green_kernel_values() {
        assert_eq!(green_kernel(0.5, 0.5, 1.0).unwrap(), 0.25);
        for s in [0.0, 0.3, 1.0] {
            assert_eq!(green_kernel(0.0, s, 1.0).unwrap(), 0.0);
        }
        assert!(green_kernel(1.5, 0.5, 1.0).is_err());
        assert!(green_kernel(-0.1, 0.5, 1.0).is_err());
        let tau = 2.5;
        for i in 0..100 {
            for j in 0..100 {
                let t = tau * i as f64 / 99.0;
                let s = tau * j as f64 / 99.0;
                let a = green_kernel(t, s, tau).unwrap();
                let b = green_kernel(s, t, tau).unwrap();
                assert!((a - b).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn spot_values() {
        let one = constant(1.0, 3, 1.0);
        let ramp = Signal::sample_nodes(grid(1.0, 5), 1, |t| vec![t]).unwrap();
        assert!((gram_tt(&one, &one).unwrap()[(0, 0)] - 1.0 / 12.0).abs() < 1e-15);
        assert!((gram_dd(&ramp)[(0, 0)] - 1.0 / 12.0).abs() < 1e-15);
        assert!((gram_td(&one, &ramp).unwrap()[(0, 0)] - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn zero_and_constant_cases() {
        let zero = Signal::zeros(grid(1.0, 4), Interpolation::PiecewiseLinear, 2).unwrap();
        let g = Signal::sample_nodes(grid(1.0, 3), 1, |t| vec![t * t]).unwrap();
        assert_eq!(gram_tt(&zero, &g).unwrap(), DMatrix::zeros(1, 2));
        assert_eq!(gram_dd(&zero), DMatrix::zeros(2, 2));
        assert!(gram_dd(&constant(2.0, 4, 3.0)).amax() < 1e-14);
        assert!(gram_td(&g, &constant(1.0, 6, -2.0)).unwrap().amax() < 1e-14);
        assert_eq!(gram_td(&zero, &g).unwrap(), DMatrix::zeros(2, 1));
    }

    #[test]
    fn sine_closed_form() {
        let tau = 2.0;
        let s = Signal::sample_nodes(grid(tau, 4096), 1, |t| vec![(PI * t / tau).sin()]).unwrap();
        let got = gram_tt(&s, &s).unwrap()[(0, 0)];
        let exact = tau.powi(3) / (2.0 * PI * PI);
        assert!((got - exact).abs() <= 1e-6 * exact);
    }

    #[test]
    fn mismatched_horizons() {
        let a = constant(1.0, 2, 1.0);
        let b = constant(2.0, 2, 1.0);
        assert!(gram_tt(&a, &b).is_err());
        assert!(gram_td(&a, &b).is_err());
    }

    #[test]
    fn transpose_symmetry_on_mixed_grids() {
        let f = Signal::sample_nodes(grid(1.3, 3), 2, |t| vec![t.sin(), 1.0 - t]).unwrap();
        let g = Signal::sample_midpoints(grid(1.3, 5), 1, |t| vec![(4.0 * t).cos()]).unwrap();
        let fg = gram_tt(&f, &g).unwrap();
        let gf = gram_tt(&g, &f).unwrap();
        let scale = scale_of(&[&fg]);
        assert!((fg - gf.transpose()).amax() <= 1e-12 * scale);
    }

    #[test]
    fn constant_state_blocks() {
        let g = grid(1.0, 4);
        let x = Signal::sample_nodes(g, 2, |_| vec![1.0, -2.0]).unwrap();
        let u = Signal::zeros(g, Interpolation::PiecewiseConstant, 1).unwrap();
        let blocks = gram_blocks(&Trajectory::new(x, u).unwrap()).unwrap();
        assert!(blocks.gdd.amax() < 1e-14);
        assert!(blocks.gdx.amax() < 1e-14);
        assert!(blocks.gdu.amax() < 1e-14);
        let v = nalgebra::DVector::from_vec(vec![1.0, -2.0]);
        let expected = &v * v.transpose() / 12.0;
        assert!((blocks.gxx - expected).amax() < 1e-14);
    }
}
