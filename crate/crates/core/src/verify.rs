//! Independent checks of synthesis results: Hurwitz tests, membership of a
//! system in the compatible set, sampling of compatible systems and
//! Lyapunov verification of a gain over those samples.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_finite, check_square, dense_serde, lambda_max, lambda_min, max_real_eigenvalue, pinv_psd, symmetrize};
use crate::synthesis::{stack_ab, GramBlocks};
use crate::SCHEMA_VERSION;

/// Default margin of [`is_hurwitz`].
pub const DEFAULT_HURWITZ_MARGIN: f64 = 1e-9;

/// Default membership slack, `1e-8 max(1, c)`.
pub fn default_membership_tol(c: f64) -> f64 {
    1e-8 * c.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurwitzTest {
    pub hurwitz: bool,
    /// Largest real part over the spectrum.
    pub s_max: f64,
    pub margin: f64,
}

/// `s_max < -margin`.
pub fn is_hurwitz(m: &DMatrix<f64>, margin: f64) -> Result<HurwitzTest> {
    check_square(m, "matrix")?;
    check_finite(m, "matrix")?;
    if !(margin >= 0.0) {
        return Err(Error::OutOfRange(format!("margin must be >= 0, got {margin}")));
    }
    let s_max = max_real_eigenvalue(m);
    Ok(HurwitzTest {
        hurwitz: s_max < -margin,
        s_max,
        margin,
    })
}

/// `R(A, B) = (Xi_d - A Xi - B Upsilon)(Xi_d - A Xi - B Upsilon)*` from the
/// Gram blocks.
pub fn residual_gram(gram: &GramBlocks, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    gram.check_system(a, b)?;
    let g = gram;
    let r = &g.gdd - &g.gdx * a.transpose() - &g.gdu * b.transpose() - a * g.gdx.transpose() - b * g.gdu.transpose()
        + a * &g.gxx * a.transpose()
        + a * &g.gxu * b.transpose()
        + b * g.gxu.transpose() * a.transpose()
        + b * &g.guu * b.transpose();
    Ok(symmetrize(&r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipResult {
    pub schema_version: u32,
    #[serde(with = "dense_serde")]
    pub a: DMatrix<f64>,
    #[serde(with = "dense_serde")]
    pub b: DMatrix<f64>,
    #[serde(with = "dense_serde")]
    pub residual: DMatrix<f64>,
    pub lambda_max: f64,
    pub c: f64,
    pub tol: f64,
    /// `lambda_max <= c + tol`.
    pub member: bool,
}

pub fn membership(gram: &GramBlocks, a: &DMatrix<f64>, b: &DMatrix<f64>, c: f64, tol: f64) -> Result<MembershipResult> {
    if !(c >= 0.0) || !(tol >= 0.0) {
        return Err(Error::OutOfRange(format!("need c >= 0 and tol >= 0, got c = {c}, tol = {tol}")));
    }
    let residual = residual_gram(gram, a, b)?;
    let lmax = if gram.n == 0 { 0.0 } else { lambda_max(&residual) };
    Ok(MembershipResult {
        schema_version: SCHEMA_VERSION,
        a: a.clone(),
        b: b.clone(),
        residual,
        lambda_max: lmax,
        c,
        tol,
        member: lmax <= c + tol,
    })
}

/// Least-squares `[A B] = [Gdx Gdu] (V V*)^+`.
pub fn least_squares_center(gram: &GramBlocks) -> DMatrix<f64> {
    gram.cross_gram() * pinv_psd(&gram.data_gram(), 1e-13)
}

fn split(gram: &GramBlocks, ab: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = gram.n;
    (ab.columns(0, n).into_owned(), ab.columns(n, gram.m).into_owned())
}

fn residual_max(gram: &GramBlocks, ab: &DMatrix<f64>) -> f64 {
    let (a, b) = split(gram, ab);
    residual_gram(gram, &a, &b).map(|r| lambda_max(&r)).unwrap_or(f64::INFINITY)
}

/// Random members of the compatible set at level `c`.
///
/// Starting from the least-squares center, each sample moves along a random
/// unit (Frobenius) direction to 0.99 of the boundary step found by
/// bisection. Directions with no boundary are capped. Deterministic in `seed`.
pub fn sample_members(gram: &GramBlocks, c: f64, count: usize, seed: u64) -> Result<Vec<(DMatrix<f64>, DMatrix<f64>)>> {
    if !(c >= 0.0) {
        return Err(Error::OutOfRange(format!("c must be >= 0, got {c}")));
    }
    gram.validate()?;
    let (n, m) = (gram.n, gram.m);
    let tol = default_membership_tol(c);
    let center = least_squares_center(gram);
    let r0 = residual_max(gram, &center);
    if r0 > c + tol {
        return Err(Error::EmptySet(format!(
            "the least-squares center has residual {r0:.6e} > c = {c}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let directions: Vec<DMatrix<f64>> = (0..count)
        .map(|_| {
            let d = DMatrix::from_fn(n, n + m, |_, _| StandardNormal.sample(&mut rng));
            let norm = d.norm();
            if norm > 0.0 { d / norm } else { d }
        })
        .collect();
    if r0 > c {
        // Inside only through the tolerance: the set is numerically a point.
        return Ok(directions.iter().map(|_| split(gram, &center)).collect());
    }
    let cap = 1e6 * (1.0 + center.norm());
    let mut out = Vec::with_capacity(count);
    for d in &directions {
        let at = |s: f64| &center + d * s;
        let mut hi = 1e-3 * (1.0 + center.norm());
        while hi < cap && residual_max(gram, &at(hi)) <= c {
            hi *= 2.0;
        }
        let mut step = if hi >= cap {
            cap
        } else {
            let mut lo = 0.0;
            for _ in 0..200 {
                if hi - lo <= 1e-9 * hi {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if residual_max(gram, &at(mid)) <= c {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        } * 0.99;
        let mut point = at(step);
        let mut tries = 0;
        while residual_max(gram, &point) > c + tol {
            step *= 0.5;
            point = at(step);
            tries += 1;
            if tries > 60 {
                point = center.clone();
                break;
            }
        }
        out.push(split(gram, &point));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainFailure {
    pub index: usize,
    pub s_max: f64,
    /// `lambda_max((A+BK)P + P(A+BK)^T)`.
    pub lyapunov_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub c: f64,
    pub samples: usize,
    pub failures: Vec<GainFailure>,
    /// Largest `s_max(A+BK)` over the samples.
    pub worst_s_max: Option<f64>,
    /// Largest Lyapunov eigenvalue over the samples.
    pub worst_lyapunov: Option<f64>,
    pub passed: bool,
    pub warning: Option<String>,
}

/// For every sampled `(A, B)`: `s_max(A+BK) < 0` and
/// `(A+BK)P + P(A+BK)^T ≺ 0`.
pub fn verify_gain(
    gram: &GramBlocks,
    c: f64,
    k: &DMatrix<f64>,
    p: &DMatrix<f64>,
    samples: &[(DMatrix<f64>, DMatrix<f64>)],
) -> Result<VerificationReport> {
    let (n, m) = (gram.n, gram.m);
    if k.shape() != (m, n) || p.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "expected K {m}x{n} and P {n}x{n}, got {:?} and {:?}",
            k.shape(),
            p.shape()
        )));
    }
    if n > 0 && lambda_min(p) <= 0.0 {
        return Err(Error::OutOfRange("P must be positive definite".into()));
    }
    let mut failures = Vec::new();
    let mut worst_s: Option<f64> = None;
    let mut worst_l: Option<f64> = None;
    for (index, (a, b)) in samples.iter().enumerate() {
        gram.check_system(a, b)?;
        let acl = a + b * k;
        let s_max = max_real_eigenvalue(&acl);
        let lyap = &acl * p + p * acl.transpose();
        let lyapunov_max = lambda_max(&lyap);
        worst_s = Some(worst_s.map_or(s_max, |w| w.max(s_max)));
        worst_l = Some(worst_l.map_or(lyapunov_max, |w| w.max(lyapunov_max)));
        if !(s_max < 0.0 && lyapunov_max < 0.0) {
            failures.push(GainFailure {
                index,
                s_max,
                lyapunov_max,
            });
        }
    }
    let warning = samples
        .is_empty()
        .then(|| "no samples: verification is vacuous".to_string());
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        c,
        samples: samples.len(),
        passed: failures.is_empty(),
        failures,
        worst_s_max: worst_s,
        worst_lyapunov: worst_l,
        warning,
    })
}

/// Gram blocks of exact data from `(A, B)` with excitation `V V*` and noise
/// Gram `W W*` uncorrelated with the data: handy for synthetic checks.
pub fn synthetic_gram(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    vv: &DMatrix<f64>,
    ww: Option<&DMatrix<f64>>,
    tau: f64,
) -> Result<GramBlocks> {
    let (n, m) = (a.nrows(), b.ncols());
    if vv.shape() != (n + m, n + m) {
        return Err(Error::DimensionMismatch("V V* must be (n+m)x(n+m)".into()));
    }
    let ab = stack_ab(a, b);
    let cross = &ab * vv;
    let mut gdd = &cross * ab.transpose();
    if let Some(ww) = ww {
        gdd += ww;
    }
    Ok(GramBlocks {
        gdd: symmetrize(&gdd),
        gdx: cross.columns(0, n).into_owned(),
        gdu: cross.columns(n, m).into_owned(),
        gxx: vv.view((0, 0), (n, n)).into_owned(),
        gxu: vv.view((0, n), (n, m)).into_owned(),
        guu: vv.view((n, n), (m, m)).into_owned(),
        ..GramBlocks::zeros(n, m, tau)
    })
}
