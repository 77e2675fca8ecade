//! Informativity of noiseless data for system identification and for
//! stabilization, through the Gram blocks and through hat-basis matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dense_serde, max_real_eigenvalue, scale_of, singular_values, sym_eigenvalues, symmetrize};
use crate::lmi::{synthesize_gain, Margins, SynthesisReport};
use crate::sdp::{SdpBackend, SdpBlock, SdpProblem, SdpStatus};
use crate::signals::Trajectory;
use crate::synthesis::{hat_matrices, GramBlocks, HatMatrices, MAX_LEVEL};
use crate::SCHEMA_VERSION;

/// Default relative rank threshold.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Default deepest hat level tried by [`ell_search`].
pub const DEFAULT_ELL_MAX: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCertificate {
    pub schema_version: u32,
    /// `gram` or `hat-<level>`.
    pub object: String,
    /// Eigenvalues of `V V*` (Gram route) or singular values of
    /// `[Phi; Psi]` (hat route), descending.
    pub values: Vec<f64>,
    pub threshold: f64,
    pub rank: usize,
    pub required_rank: usize,
    pub verdict: bool,
}

fn certificate(object: String, values: Vec<f64>, rank_tol: f64, required: usize) -> RankCertificate {
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let threshold = rank_tol * top;
    let rank = values.iter().filter(|v| **v > threshold && **v > 0.0).count();
    RankCertificate {
        schema_version: SCHEMA_VERSION,
        object,
        values,
        threshold,
        rank,
        required_rank: required,
        verdict: rank == required && required > 0,
    }
}

fn check_rank_tol(rank_tol: f64) -> Result<()> {
    if rank_tol > 0.0 && rank_tol < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("rank tolerance must lie in (0, 1), got {rank_tol}")))
    }
}

/// Identification informativity: `V V*` positive definite relative to
/// `rank_tol`.
pub fn check_identification(gram: &GramBlocks, rank_tol: f64) -> Result<RankCertificate> {
    check_rank_tol(rank_tol)?;
    let mut values: Vec<f64> = sym_eigenvalues(&gram.data_gram()).iter().copied().collect();
    values.reverse();
    Ok(certificate("gram".into(), values, rank_tol, gram.n + gram.m))
}

/// Identification informativity through `[Phi_l; Psi_l]` having full row rank.
pub fn check_identification_hat(traj: &Trajectory, level: u32, rank_tol: f64) -> Result<RankCertificate> {
    check_rank_tol(rank_tol)?;
    let hats = hat_matrices(traj, level)?;
    Ok(hat_certificate(&hats, rank_tol))
}

fn hat_certificate(hats: &HatMatrices, rank_tol: f64) -> RankCertificate {
    let stacked = hats.stacked();
    certificate(
        format!("hat-{}", hats.level),
        singular_values(&stacked),
        rank_tol,
        stacked.nrows(),
    )
}

/// The unique compatible system `[A B] = [Gdx Gdu] (V V*)^{-1}`.
pub fn identify(gram: &GramBlocks, rank_tol: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let cert = check_identification(gram, rank_tol)?;
    if !cert.verdict {
        return Err(Error::NotInformative(format!(
            "V V* has numerical rank {} of {} (threshold {:.3e})",
            cert.rank, cert.required_rank, cert.threshold
        )));
    }
    let vv = symmetrize(&gram.data_gram());
    let cross_t = gram.cross_gram().transpose();
    let solved = match nalgebra::Cholesky::new(vv.clone()) {
        Some(ch) => ch.solve(&cross_t),
        None => vv
            .lu()
            .solve(&cross_t)
            .ok_or_else(|| Error::NotInformative("V V* is singular".into()))?,
    };
    let ab = solved.transpose();
    let n = gram.n;
    Ok((ab.columns(0, n).into_owned(), ab.columns(n, gram.m).into_owned()))
}

/// Noiseless stabilization verdict with its gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizationVerdict {
    pub schema_version: u32,
    pub informative: bool,
    pub reason: Option<String>,
    pub report: Option<SynthesisReport>,
}

/// Stabilization informativity of noiseless data: the LMI at `c = 0`.
/// Solver failures propagate as errors, not as negative verdicts.
pub fn check_stabilization_noiseless(
    gram: &GramBlocks,
    margins: Margins,
    backend: &dyn SdpBackend,
) -> Result<StabilizationVerdict> {
    let negative = |reason: String| StabilizationVerdict {
        schema_version: SCHEMA_VERSION,
        informative: false,
        reason: Some(reason),
        report: None,
    };
    match synthesize_gain(gram, 0.0, margins, backend) {
        Ok(report) => Ok(StabilizationVerdict {
            schema_version: SCHEMA_VERSION,
            informative: true,
            reason: None,
            report: Some(report),
        }),
        Err(Error::Infeasible(msg)) => Ok(negative(msg)),
        Err(Error::EmptySet(msg)) => Ok(negative(msg)),
        Err(e) => Err(e),
    }
}

/// Gain designed from hat-basis matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HatGain {
    pub schema_version: u32,
    pub level: u32,
    #[serde(with = "dense_serde")]
    pub k: DMatrix<f64>,
    /// `(2^l - 1) x n` with `Phi_l Theta` symmetric positive definite.
    #[serde(with = "dense_serde")]
    pub theta: DMatrix<f64>,
    /// `Phi_{d,l} Theta (Phi_l Theta)^{-1}`.
    #[serde(with = "dense_serde")]
    pub closed_loop: DMatrix<f64>,
    pub s_max: f64,
}

/// Find `Theta` with `Phi_l Theta ≻ 0` and
/// `Phi_{d,l} Theta + (Phi_{d,l} Theta)^T ≺ 0`, then `K = Psi_l Theta (Phi_l Theta)^{-1}`.
///
/// With `Phi^+` the right pseudo-inverse and `W` the right singular vectors
/// of `Phi_d` restricted to the null space of `Phi`, every relevant `Theta`
/// is `Phi^+ P + W Z`; the homogeneous conditions are normalized to
/// `P ⪰ I` and `-(sym) ⪰ I`, minimizing `trace P`.
pub fn design_gain_hat(traj: &Trajectory, level: u32, backend: &dyn SdpBackend) -> Result<HatGain> {
    let hats = hat_matrices(traj, level)?;
    design_from_hats(&hats, backend)
}

pub fn design_from_hats(hats: &HatMatrices, backend: &dyn SdpBackend) -> Result<HatGain> {
    let n = hats.phi.nrows();
    let r = hats.columns();
    let h = scale_of(&[&hats.phi, &hats.phi_d, &hats.psi]);
    let phi = &hats.phi / h;
    let phi_d = &hats.phi_d / h;
    let psi = &hats.psi / h;
    let phi_svd = phi.clone().svd(true, true);
    let sv = &phi_svd.singular_values;
    let full_rank = r >= n && sv.len() == n && sv.max() > 0.0 && sv.min() > 1e-12 * sv.max();
    if !full_rank {
        return Err(Error::Infeasible(format!(
            "Phi_{} has no right inverse (rank below {n})",
            hats.level
        )));
    }
    let (pu, pvt) = (phi_svd.u.as_ref().expect("u requested"), phi_svd.v_t.as_ref().expect("v_t requested"));
    let s_inv = DMatrix::from_diagonal(&sv.map(|v| 1.0 / v));
    let phi_pinv = pvt.transpose() * s_inv * pu.transpose();
    let projector = DMatrix::identity(r, r) - pvt.transpose() * pvt;
    let reduced = &phi_d * &projector;
    let svd = reduced.clone().svd(true, true);
    let vt = svd.v_t.expect("v_t requested");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| top > 0.0 && svd.singular_values[i] > 1e-8 * top)
        .collect();
    let rho = keep.len();
    let g0 = &phi_d * &phi_pinv;
    // Re-project: singular vectors are only approximately in null(Phi).
    let w = &projector * DMatrix::from_fn(r, rho, |i, j| vt[(keep[j], i)]);
    let w = &projector * w;
    let h0 = &phi_d * &w;

    let mut names = Vec::new();
    let mut p_index = vec![vec![0usize; n]; n];
    for i in 0..n {
        for j in i..n {
            p_index[i][j] = names.len();
            p_index[j][i] = names.len();
            names.push(format!("P[{i},{j}]"));
        }
    }
    let z_base = names.len();
    for a in 0..rho {
        for b in 0..n {
            names.push(format!("Z[{a},{b}]"));
        }
    }
    let mut problem = SdpProblem::new(names, 1e9);
    let mut pb = SdpBlock::new("P", &-DMatrix::<f64>::identity(n, n));
    let mut lyap = SdpBlock::new("lyapunov", &-DMatrix::<f64>::identity(n, n));
    for i in 0..n {
        for j in i..n {
            let mut e = DMatrix::zeros(n, n);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            pb.push(p_index[i][j], &e);
            let ge = &g0 * &e;
            lyap.push(p_index[i][j], &-(&ge + ge.transpose()));
            if i == j {
                problem.objective[p_index[i][j]] = 1.0;
            }
        }
    }
    for a in 0..rho {
        for b in 0..n {
            // H0 E_ab, E_ab the rho x n unit matrix
            let mut he = DMatrix::zeros(n, n);
            for i in 0..n {
                he[(i, b)] = h0[(i, a)];
            }
            lyap.push(z_base + a * n + b, &-(&he + he.transpose()));
        }
    }
    problem.blocks = vec![pb, lyap];
    let sol = backend.solve(&problem)?;
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::Infeasible => {
            return Err(Error::Infeasible(format!(
                "no stabilizing right inverse at level {}",
                hats.level
            )))
        }
        SdpStatus::Unknown => return Err(Error::Solver(sol.message)),
    }
    let p = DMatrix::from_fn(n, n, |i, j| sol.x[p_index[i][j]]);
    let z = DMatrix::from_fn(rho, n, |a, b| sol.x[z_base + a * n + b]);
    let theta = &phi_pinv * &p + &w * &z;
    let pt = symmetrize(&(&phi * &theta));
    let chol = pt
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Solver("Phi Theta is not positive definite".into()))?;
    let pinv = chol.inverse();
    let k = &psi * &theta * &pinv;
    let closed_loop = &phi_d * &theta * &pinv;
    let s_max = max_real_eigenvalue(&closed_loop);
    Ok(HatGain {
        schema_version: SCHEMA_VERSION,
        level: hats.level,
        k,
        // Undo the normalization so that Phi_l Theta refers to the raw matrices.
        theta: theta / h,
        closed_loop,
        s_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HatPredicate {
    Identification,
    Stabilization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelAttempt {
    pub level: u32,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllSearch {
    pub schema_version: u32,
    pub predicate: HatPredicate,
    pub ell_max: u32,
    /// Smallest passing level.
    pub level: Option<u32>,
    pub attempts: Vec<LevelAttempt>,
    /// `inconclusive` when no level up to `ell_max` passes: the hat route
    /// cannot rule informativity out.
    pub outcome: String,
}

/// Linear scan `l = 1..=ell_max` for the first level passing `predicate`.
pub fn ell_search(
    traj: &Trajectory,
    predicate: HatPredicate,
    ell_max: u32,
    rank_tol: f64,
    backend: &dyn SdpBackend,
) -> Result<EllSearch> {
    if ell_max == 0 || ell_max > MAX_LEVEL {
        return Err(Error::OutOfRange(format!("ell_max must lie in 1..={MAX_LEVEL}, got {ell_max}")));
    }
    check_rank_tol(rank_tol)?;
    let mut attempts = Vec::new();
    let mut level = None;
    for l in 1..=ell_max {
        let hats = hat_matrices(traj, l)?;
        let (passed, detail) = match predicate {
            HatPredicate::Identification => {
                let cert = hat_certificate(&hats, rank_tol);
                (cert.verdict, format!("rank {} of {}", cert.rank, cert.required_rank))
            }
            HatPredicate::Stabilization => match design_from_hats(&hats, backend) {
                Ok(g) if g.s_max < 0.0 => (true, format!("s_max = {:.6e}", g.s_max)),
                Ok(g) => (false, format!("closed loop not Hurwitz (s_max = {:.6e})", g.s_max)),
                Err(Error::Infeasible(msg)) => (false, msg),
                Err(Error::Solver(msg)) => (false, format!("solver: {msg}")),
                Err(e) => return Err(e),
            },
        };
        attempts.push(LevelAttempt { level: l, passed, detail });
        if passed {
            level = Some(l);
            break;
        }
    }
    Ok(EllSearch {
        schema_version: SCHEMA_VERSION,
        predicate,
        ell_max,
        level,
        attempts,
        outcome: if level.is_some() { "passed" } else { "inconclusive" }.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::BarrierSolver;
    use crate::signals::{simulate_lti, Interpolation, Signal, UniformGrid};
    use nalgebra::DVector;

    fn scalar_traj(a: f64, b: f64, segments: usize) -> Trajectory {
        let g = UniformGrid::new(1.0, segments).unwrap();
        let u = Signal::sample_nodes(g, 1, |t| vec![(2.0 * std::f64::consts::PI * t).sin() + 0.5]).unwrap();
        simulate_lti(
            &DMatrix::from_element(1, 1, a),
            &DMatrix::from_element(1, 1, b),
            &DVector::from_element(1, 1.0),
            &u,
            None,
            g,
        )
        .unwrap()
    }

    #[test]
    fn zero_data_is_not_informative() {
        let g = GramBlocks::zeros(2, 1, 1.0);
        assert!(!check_identification(&g, DEFAULT_RANK_TOL).unwrap().verdict);
        assert!(matches!(identify(&g, DEFAULT_RANK_TOL), Err(Error::NotInformative(_))));
    }

    #[test]
    fn column_deficit_fails_hat_check() {
        let t = scalar_traj(-1.0, 2.0, 64);
        assert!(!check_identification_hat(&t, 1, DEFAULT_RANK_TOL).unwrap().verdict);
        assert!(check_identification_hat(&t, 2, DEFAULT_RANK_TOL).unwrap().verdict);
    }

    #[test]
    fn identifies_scalar_system() {
        let t = scalar_traj(-1.0, 2.0, 8192);
        let g = crate::synthesis::gram_blocks(&t).unwrap();
        let (a, b) = identify(&g, DEFAULT_RANK_TOL).unwrap();
        assert!((a[(0, 0)] + 1.0).abs() < 1e-6, "{a}");
        assert!((b[(0, 0)] - 2.0).abs() < 1e-6, "{b}");
    }

    #[test]
    fn hat_gain_for_unstable_scalar() {
        let t = scalar_traj(1.0, 1.0, 256);
        let g = design_gain_hat(&t, 4, &BarrierSolver::default()).unwrap();
        assert!(g.k[(0, 0)] < -1.0, "{}", g.k);
        assert!(g.s_max < 0.0);
    }

    #[test]
    fn hat_gain_needs_state_data() {
        let grid = UniformGrid::new(1.0, 16).unwrap();
        let x = Signal::zeros(grid, Interpolation::PiecewiseLinear, 1).unwrap();
        let u = Signal::sample_nodes(grid, 1, |t| vec![t]).unwrap();
        let t = Trajectory::new(x, u).unwrap();
        assert!(matches!(design_gain_hat(&t, 3, &BarrierSolver::default()), Err(Error::Infeasible(_))));
    }
}
