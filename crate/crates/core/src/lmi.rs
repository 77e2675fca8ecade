//! The quadratic-stabilization LMI under bounded noise: assembly, solution,
//! gain extraction, regularized synthesis and the largest informative noise
//! level.
//!
//! Decision variables are `P` (symmetric, `n x n`), `L` (`m x n`) and the
//! multiplier `alpha >= 0`. The block matrix is
//!
//! ```text
//! [ alpha Gdd - (alpha c + 1) I   -P - alpha Gdx   -L^T - alpha Gdu ]
//! [ -P - alpha Gdx^T              alpha Gxx        alpha Gxu        ]  ⪰ 0,
//! [ -L - alpha Gdu^T              alpha Gxu^T      alpha Guu        ]
//! ```
//!
//! together with `P ⪰ eps_P I`; a feasible point gives `K = L P^{-1}`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dense_serde, lambda_max, lambda_min, pinv_psd, scale_of, spectral_norm, symmetrize};
use crate::sdp::{SdpBackend, SdpBlock, SdpProblem, SdpSolution, SdpStatus};
use crate::synthesis::GramBlocks;
use crate::verify::VerificationReport;
use crate::SCHEMA_VERSION;

/// Relative size below which a least-squares residual is attributed to the
/// piecewise-linear representation of the state rather than to noise.
pub const DISCRETIZATION_RESIDUAL: f64 = 1e-6;

/// How far the big block may be relaxed before infeasibility is declared.
pub const BLOCK_RELAXATION: f64 = 1e-7;

/// Default weight of `delta` in the regularized objective `gamma - lambda delta`.
pub const DEFAULT_LAMBDA: f64 = 1e2;

/// Default cap on `delta`.
pub const DEFAULT_DELTA_MAX: f64 = 1e6;

/// Box on every (normalized) decision variable of the feasibility problem.
const FEASIBILITY_BOUND: f64 = 1e9;

/// Strictness margins of the LMI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Margins {
    /// `P ⪰ eps_p I`; `None` selects `1e-6 max(1, ||Gdd||)`.
    pub eps_p: Option<f64>,
    /// Big block `⪰ eps_block I`.
    pub eps_block: f64,
}

impl Margins {
    pub fn eps_p_for(&self, gram: &GramBlocks) -> f64 {
        self.eps_p
            .unwrap_or_else(|| 1e-6 * spectral_norm(&gram.gdd).max(1.0))
    }
}

/// `N = [[cI - Gdd, Gdx, Gdu], [Gdx^T, -Gxx, -Gxu], [Gdu^T, -Gxu^T, -Guu]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NMatrix {
    pub schema_version: u32,
    pub n: usize,
    pub m: usize,
    pub c: f64,
    #[serde(with = "dense_serde")]
    pub matrix: DMatrix<f64>,
}

impl NMatrix {
    /// `[I A B] N [I A B]^T = cI - R(A, B)`.
    pub fn quadratic_form(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, m) = (self.n, self.m);
        let mut z = DMatrix::zeros(n, 2 * n + m);
        z.view_mut((0, 0), (n, n)).fill_with_identity();
        z.view_mut((0, n), (n, n)).copy_from(a);
        z.view_mut((0, 2 * n), (n, m)).copy_from(b);
        symmetrize(&(&z * &self.matrix * z.transpose()))
    }

    /// The `(2,2)` block `-V V*`.
    pub fn n22(&self) -> DMatrix<f64> {
        let (n, m) = (self.n, self.m);
        self.matrix.view((n, n), (n + m, n + m)).into_owned()
    }
}

pub fn assemble_n(gram: &GramBlocks, c: f64) -> Result<NMatrix> {
    check_c(c)?;
    let (n, m) = (gram.n, gram.m);
    let mut nm = DMatrix::zeros(2 * n + m, 2 * n + m);
    let cross = gram.cross_gram();
    nm.view_mut((0, 0), (n, n))
        .copy_from(&(DMatrix::identity(n, n) * c - &gram.gdd));
    nm.view_mut((0, n), (n, n + m)).copy_from(&cross);
    nm.view_mut((n, 0), (n + m, n)).copy_from(&cross.transpose());
    nm.view_mut((n, n), (n + m, n + m)).copy_from(&(-gram.data_gram()));
    Ok(NMatrix {
        schema_version: SCHEMA_VERSION,
        n,
        m,
        c,
        matrix: nm,
    })
}

fn check_c(c: f64) -> Result<()> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("noise level c must be finite and >= 0, got {c}")))
    }
}

/// Smallest `c` for which some `(A, B)` is compatible with the data:
/// `lambda_max(Gdd - C (VV*)^+ C^T)` with `C = [Gdx Gdu]`.
pub fn least_squares_residual(gram: &GramBlocks) -> DMatrix<f64> {
    let cross = gram.cross_gram();
    let vv_pinv = pinv_psd(&gram.data_gram(), 1e-13);
    symmetrize(&(&gram.gdd - &cross * vv_pinv * cross.transpose()))
}

/// The noise level at which the LMI is actually solved.
///
/// Below the least-squares residual the compatible set is empty and the LMI
/// would hold vacuously. A residual within [`DISCRETIZATION_RESIDUAL`] of the
/// data scale comes from representing the state piecewise linearly; there the
/// level is lifted to twice the residual. A larger residual above `c` means the
/// data contradict the noise bound.
pub fn effective_c(gram: &GramBlocks, c: f64) -> Result<f64> {
    check_c(c)?;
    let floor = lambda_max(&least_squares_residual(gram)).max(0.0);
    if floor <= c {
        Ok(c)
    } else if floor <= DISCRETIZATION_RESIDUAL * gram.scale() {
        Ok(c.max(2.0 * floor))
    } else {
        Err(Error::EmptySet(format!(
            "no system is compatible with the data at c = {c}: the least-squares residual reaches {floor:.6e}"
        )))
    }
}

/// The block template of the noisy LMI for one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyLmi {
    pub gram: GramBlocks,
    pub c: f64,
    pub eps_p: f64,
    pub eps_block: f64,
}

/// Smallest eigenvalues of a candidate certificate and the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub lambda_min_block: f64,
    pub lambda_min_p: f64,
    pub scale: f64,
    pub passes: bool,
}

impl NoisyLmi {
    pub fn n(&self) -> usize {
        self.gram.n
    }

    pub fn m(&self) -> usize {
        self.gram.m
    }

    /// The block matrix for concrete `(P, L, alpha)`, margins excluded.
    pub fn evaluate(&self, p: &DMatrix<f64>, l: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
        let (n, m) = (self.n(), self.m());
        if p.shape() != (n, n) || l.shape() != (m, n) {
            return Err(Error::DimensionMismatch(format!(
                "expected P {n}x{n} and L {m}x{n}, got {:?} and {:?}",
                p.shape(),
                l.shape()
            )));
        }
        let g = &self.gram;
        let mut out = DMatrix::zeros(2 * n + m, 2 * n + m);
        out.view_mut((0, 0), (n, n))
            .copy_from(&(&g.gdd * alpha - DMatrix::identity(n, n) * (alpha * self.c + 1.0)));
        let b12 = -p - &g.gdx * alpha;
        let b13 = -l.transpose() - &g.gdu * alpha;
        out.view_mut((0, n), (n, n)).copy_from(&b12);
        out.view_mut((n, 0), (n, n)).copy_from(&b12.transpose());
        out.view_mut((0, 2 * n), (n, m)).copy_from(&b13);
        out.view_mut((2 * n, 0), (m, n)).copy_from(&b13.transpose());
        out.view_mut((n, n), (n, n)).copy_from(&(&g.gxx * alpha));
        out.view_mut((n, 2 * n), (n, m)).copy_from(&(&g.gxu * alpha));
        out.view_mut((2 * n, n), (m, n)).copy_from(&(g.gxu.transpose() * alpha));
        out.view_mut((2 * n, 2 * n), (m, m)).copy_from(&(&g.guu * alpha));
        Ok(out)
    }

    /// Re-check a certificate: block `⪰ -1e-8 scale`, `P ⪰ eps_P` (up to
    /// rounding), `alpha >= 0`.
    pub fn certify(&self, p: &DMatrix<f64>, l: &DMatrix<f64>, alpha: f64) -> Result<Certification> {
        let block = self.evaluate(p, l, alpha)?;
        let scale = scale_of(&[&block]);
        let lambda_min_block = lambda_min(&block);
        let lambda_min_p = lambda_min(p);
        let passes = alpha >= 0.0
            && lambda_min_block >= -1e-8 * scale
            && lambda_min_p >= self.eps_p * (1.0 - 1e-9) - 1e-14 * scale_of(&[p]);
        Ok(Certification {
            lambda_min_block,
            lambda_min_p,
            scale,
            passes,
        })
    }
}

pub fn assemble_noisy_lmi(gram: &GramBlocks, c: f64, margins: Margins) -> Result<NoisyLmi> {
    check_c(c)?;
    gram.validate()?;
    if !(margins.eps_block >= 0.0) {
        return Err(Error::OutOfRange("eps_block must be >= 0".into()));
    }
    let eps_p = margins.eps_p_for(gram);
    if !(eps_p > 0.0) {
        return Err(Error::OutOfRange("eps_p must be > 0".into()));
    }
    Ok(NoisyLmi {
        gram: gram.clone(),
        c,
        eps_p,
        eps_block: margins.eps_block,
    })
}

/// Where each matrix entry lives in the SDP variable vector.
struct Layout {
    n: usize,
    m: usize,
    names: Vec<String>,
}

impl Layout {
    fn new(n: usize, m: usize, extra: &[&str]) -> Self {
        let mut names = Vec::new();
        for i in 0..n {
            for j in i..n {
                names.push(format!("P[{i},{j}]"));
            }
        }
        for a in 0..m {
            for b in 0..n {
                names.push(format!("L[{a},{b}]"));
            }
        }
        names.push("alpha".into());
        names.extend(extra.iter().map(|s| s.to_string()));
        Layout { n, m, names }
    }

    fn p(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    fn l(&self, a: usize, b: usize) -> usize {
        self.n * (self.n + 1) / 2 + a * self.n + b
    }

    fn alpha(&self) -> usize {
        self.n * (self.n + 1) / 2 + self.m * self.n
    }

    fn extra(&self, k: usize) -> usize {
        self.alpha() + 1 + k
    }

    fn unpack(&self, y: &[f64]) -> (DMatrix<f64>, DMatrix<f64>, f64) {
        let (n, m) = (self.n, self.m);
        let p = DMatrix::from_fn(n, n, |i, j| y[self.p(i, j)]);
        let l = DMatrix::from_fn(m, n, |a, b| y[self.l(a, b)]);
        (p, l, y[self.alpha()])
    }
}

/// `E_ij + E_ji` (a single one on the diagonal).
fn sym_unit(size: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(size, size);
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    e
}

/// Big block and `P` block of the normalized problem: Gram blocks divided by
/// `scale`, multiplier `alpha' = alpha * scale`.
fn base_blocks(lmi: &NoisyLmi, layout: &Layout, scale: f64, p_shift: Option<usize>) -> Vec<SdpBlock> {
    let (n, m) = (lmi.n(), lmi.m());
    let size = 2 * n + m;
    let mut constant = DMatrix::zeros(size, size);
    for i in 0..n {
        constant[(i, i)] = -1.0;
    }
    for i in 0..size {
        constant[(i, i)] -= lmi.eps_block;
    }
    let mut big = SdpBlock::new("lmi", &constant).with_relax(BLOCK_RELAXATION);
    for i in 0..n {
        for j in i..n {
            let mut e = DMatrix::zeros(size, size);
            e[(i, n + j)] = -1.0;
            e[(n + j, i)] = -1.0;
            if i != j {
                e[(j, n + i)] = -1.0;
                e[(n + i, j)] = -1.0;
            }
            big.push(layout.p(i, j), &e);
        }
    }
    for a in 0..m {
        for b in 0..n {
            big.push(layout.l(a, b), &sym_unit(size, b, 2 * n + a).scale(-1.0));
        }
    }
    let nm = assemble_n(&lmi.gram.scaled(1.0 / scale), lmi.c / scale).expect("c checked at assembly");
    big.push(layout.alpha(), &(-nm.matrix));

    let p_constant = match p_shift {
        Some(_) => DMatrix::zeros(n, n),
        None => DMatrix::identity(n, n) * -lmi.eps_p,
    };
    let mut pb = SdpBlock::new("P", &p_constant).with_relax(lmi.eps_p);
    for i in 0..n {
        for j in i..n {
            pb.push(layout.p(i, j), &sym_unit(n, i, j));
        }
    }
    if let Some(delta) = p_shift {
        pb.push(delta, &-DMatrix::identity(n, n));
    }
    let mut ab = SdpBlock::new("alpha", &DMatrix::zeros(1, 1));
    ab.push(layout.alpha(), &DMatrix::from_element(1, 1, 1.0));
    vec![big, pb, ab]
}

/// Backend name and statistics of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub backend: String,
    pub status: SdpStatus,
    pub iterations: usize,
    pub gap: f64,
    pub message: String,
}

impl SolverInfo {
    fn from(backend: &dyn SdpBackend, sol: &SdpSolution) -> Self {
        SolverInfo {
            backend: backend.name(),
            status: sol.status,
            iterations: sol.iterations,
            gap: sol.gap,
            message: sol.message.clone(),
        }
    }
}

/// A certificate `(P, L, alpha)` for one noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmiSolution {
    pub schema_version: u32,
    /// Requested noise level.
    pub c: f64,
    /// Level the LMI was solved at (see [`effective_c`]).
    pub c_effective: f64,
    #[serde(with = "dense_serde")]
    pub p: DMatrix<f64>,
    #[serde(with = "dense_serde")]
    pub l: DMatrix<f64>,
    pub alpha: f64,
    #[serde(with = "dense_serde")]
    pub k: DMatrix<f64>,
    pub eps_p: f64,
    pub certification: Certification,
    pub solver: SolverInfo,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LmiOutcome {
    Feasible(LmiSolution),
    Infeasible { c_effective: f64, solver: SolverInfo },
}

impl LmiOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LmiOutcome::Feasible(_))
    }
}

/// Gain `K = L P^{-1}`.
pub fn gain_from(p: &DMatrix<f64>, l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = nalgebra::Cholesky::new(symmetrize(p))
        .ok_or_else(|| Error::Solver("certificate P is not positive definite".into()))?;
    // K P = L  <=>  P K^T = L^T
    Ok(chol.solve(&l.transpose()).transpose())
}

fn solve_problem(
    lmi: &NoisyLmi,
    problem: &SdpProblem,
    layout: &Layout,
    scale: f64,
    requested_c: f64,
    backend: &dyn SdpBackend,
) -> Result<(LmiOutcome, Vec<f64>)> {
    let sol = backend.solve(problem)?;
    let info = SolverInfo::from(backend, &sol);
    match sol.status {
        SdpStatus::Infeasible => Ok((
            LmiOutcome::Infeasible {
                c_effective: lmi.c,
                solver: info,
            },
            Vec::new(),
        )),
        SdpStatus::Unknown => Err(Error::Solver(format!("{}: {}", info.backend, info.message))),
        SdpStatus::Optimal => {
            if sol.x.len() != problem.num_vars() || sol.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Solver(format!("{} returned a malformed point", info.backend)));
            }
            let (p, l, alpha_n) = layout.unpack(&sol.x);
            let p = symmetrize(&p);
            let alpha = alpha_n / scale;
            let certification = lmi.certify(&p, &l, alpha)?;
            if !certification.passes {
                return Err(Error::Solver(format!(
                    "{} returned a point failing certification (block {:.3e}, P {:.3e})",
                    info.backend, certification.lambda_min_block, certification.lambda_min_p
                )));
            }
            let k = gain_from(&p, &l)?;
            Ok((
                LmiOutcome::Feasible(LmiSolution {
                    schema_version: SCHEMA_VERSION,
                    c: requested_c,
                    c_effective: lmi.c,
                    p,
                    l,
                    alpha,
                    k,
                    eps_p: lmi.eps_p,
                    certification,
                    solver: info,
                }),
                sol.x,
            ))
        }
    }
}

/// Solve the LMI as posed (no lifting of `c`). Among feasible certificates
/// the barrier solve returns one with near-minimal multiplier `alpha`.
pub fn solve_feasibility(lmi: &NoisyLmi, backend: &dyn SdpBackend) -> Result<LmiOutcome> {
    let scale = lmi.gram.scale();
    let layout = Layout::new(lmi.n(), lmi.m(), &[]);
    let mut problem = SdpProblem::new(layout.names.clone(), FEASIBILITY_BOUND);
    problem.blocks = base_blocks(lmi, &layout, scale, None);
    problem.objective[layout.alpha()] = 1.0;
    Ok(solve_problem(lmi, &problem, &layout, scale, lmi.c, backend)?.0)
}

/// Outcome of a synthesis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub schema_version: u32,
    /// `feasibility` or `regularized`.
    pub mode: String,
    pub c: f64,
    pub c_effective: f64,
    #[serde(with = "dense_serde")]
    pub k: DMatrix<f64>,
    #[serde(with = "dense_serde")]
    pub p: DMatrix<f64>,
    #[serde(with = "dense_serde")]
    pub l: DMatrix<f64>,
    pub alpha: f64,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub delta_max: Option<f64>,
    pub eps_p: f64,
    pub certification: Certification,
    pub solver: SolverInfo,
    pub verification: Option<VerificationReport>,
}

impl SynthesisReport {
    fn from_solution(sol: LmiSolution, mode: &str) -> Self {
        SynthesisReport {
            schema_version: SCHEMA_VERSION,
            mode: mode.into(),
            c: sol.c,
            c_effective: sol.c_effective,
            k: sol.k,
            p: sol.p,
            l: sol.l,
            alpha: sol.alpha,
            gamma: None,
            delta: None,
            lambda: None,
            delta_max: None,
            eps_p: sol.eps_p,
            certification: sol.certification,
            solver: sol.solver,
            verification: None,
        }
    }
}

fn infeasible(c: f64, c_eff: f64, solver: &SolverInfo) -> Error {
    let lifted = if c_eff != c { format!(" (solved at c = {c_eff:.6e})") } else { String::new() };
    Error::Infeasible(format!("no certificate at c = {c}{lifted}: {}", solver.message))
}

/// Solve the LMI at `effective_c(gram, c)` and return `K = L P^{-1}`.
pub fn synthesize_gain(
    gram: &GramBlocks,
    c: f64,
    margins: Margins,
    backend: &dyn SdpBackend,
) -> Result<SynthesisReport> {
    let c_eff = effective_c(gram, c)?;
    let lmi = assemble_noisy_lmi(gram, c_eff, margins)?;
    match solve_feasibility(&lmi, backend)? {
        LmiOutcome::Feasible(mut sol) => {
            sol.c = c;
            Ok(SynthesisReport::from_solution(sol, "feasibility"))
        }
        LmiOutcome::Infeasible { solver, .. } => Err(infeasible(c, c_eff, &solver)),
    }
}

/// Same LMI plus `||L|| <= gamma` and `P ⪰ delta I` with
/// `eps_P <= delta <= delta_max`, minimizing `gamma - lambda delta`.
pub fn synthesize_gain_regularized(
    gram: &GramBlocks,
    c: f64,
    lambda: f64,
    delta_max: f64,
    margins: Margins,
    backend: &dyn SdpBackend,
) -> Result<SynthesisReport> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::OutOfRange(format!("lambda must be >= 0, got {lambda}")));
    }
    let c_eff = effective_c(gram, c)?;
    let lmi = assemble_noisy_lmi(gram, c_eff, margins)?;
    if !(delta_max > lmi.eps_p) || !delta_max.is_finite() {
        return Err(Error::OutOfRange(format!(
            "delta_max must exceed eps_P = {:.3e}, got {delta_max}",
            lmi.eps_p
        )));
    }
    let (n, m) = (gram.n, gram.m);
    let scale = gram.scale();
    let layout = Layout::new(n, m, &["gamma", "delta"]);
    let (gamma, delta) = (layout.extra(0), layout.extra(1));
    let bound = 1e6 * delta_max.max(1.0);
    let mut problem = SdpProblem::new(layout.names.clone(), bound);
    problem.blocks = base_blocks(&lmi, &layout, scale, Some(delta));

    let mut lo = SdpBlock::new("delta_min", &DMatrix::from_element(1, 1, -lmi.eps_p)).with_relax(lmi.eps_p);
    lo.push(delta, &DMatrix::from_element(1, 1, 1.0));
    let mut hi = SdpBlock::new("delta_max", &DMatrix::from_element(1, 1, delta_max));
    hi.push(delta, &DMatrix::from_element(1, 1, -1.0));
    let mut norm = SdpBlock::new("gamma", &DMatrix::zeros(n + m, n + m));
    norm.push(gamma, &DMatrix::identity(n + m, n + m));
    for a in 0..m {
        for b in 0..n {
            norm.push(layout.l(a, b), &sym_unit(n + m, a, m + b));
        }
    }
    problem.blocks.extend([lo, hi, norm]);
    problem.objective[gamma] = 1.0;
    problem.objective[delta] = -lambda;

    let (outcome, y) = solve_problem(&lmi, &problem, &layout, scale, c, backend)?;
    match outcome {
        LmiOutcome::Feasible(sol) => {
            let mut report = SynthesisReport::from_solution(sol, "regularized");
            report.gamma = Some(y[gamma]);
            report.delta = Some(y[delta]);
            report.lambda = Some(lambda);
            report.delta_max = Some(delta_max);
            Ok(report)
        }
        LmiOutcome::Infeasible { solver, .. } => Err(infeasible(c, c_eff, &solver)),
    }
}

/// Result of the bisection over the noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevelSearch {
    pub schema_version: u32,
    /// Largest level found feasible.
    pub c_feasible: f64,
    /// Smallest level found infeasible (or inconclusive).
    pub c_infeasible: f64,
    pub solves: usize,
    /// Solves that ended without a verdict; they count as infeasible.
    pub inconclusive: usize,
}

/// Bisection for the largest `c` at which the LMI is feasible, using
/// monotonicity in `c`. `None` when the LMI is infeasible at the smallest
/// meaningful level.
pub fn max_informative_c(
    gram: &GramBlocks,
    tol_c: f64,
    margins: Margins,
    backend: &dyn SdpBackend,
) -> Result<Option<NoiseLevelSearch>> {
    if !(tol_c > 0.0) {
        return Err(Error::OutOfRange(format!("tol_c must be > 0, got {tol_c}")));
    }
    let mut solves = 0;
    let mut inconclusive = 0;
    let mut feasible = |c: f64| -> Result<bool> {
        solves += 1;
        let lmi = assemble_noisy_lmi(gram, c, margins)?;
        match solve_feasibility(&lmi, backend) {
            Ok(out) => Ok(out.is_feasible()),
            Err(Error::Solver(_)) => {
                inconclusive += 1;
                Ok(false)
            }
            Err(e) => Err(e),
        }
    };
    let floor = lambda_max(&least_squares_residual(gram)).max(0.0);
    let start = match effective_c(gram, 0.0) {
        Ok(c) => c,
        Err(Error::EmptySet(_)) => floor * (1.0 + 1e-3),
        Err(e) => return Err(e),
    };
    if !feasible(start)? {
        return Ok(None);
    }
    let mut lo = start;
    let mut hi = spectral_norm(&gram.gdd).max(2.0 * start).max(tol_c);
    let mut grown = 0;
    while feasible(hi)? {
        lo = hi;
        hi *= 2.0;
        grown += 1;
        if grown > 200 {
            return Err(Error::Solver("feasible at every tested noise level".into()));
        }
    }
    while hi - lo > tol_c {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(NoiseLevelSearch {
        schema_version: SCHEMA_VERSION,
        c_feasible: lo,
        c_infeasible: hi,
        solves,
        inconclusive,
    }))
}
