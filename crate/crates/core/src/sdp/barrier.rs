//! Reference backend: a log-det barrier method with damped Newton centering.
//!
//! Phase I minimizes a uniform shift `s` with `F_j(y) + s I ⪰ 0`; a negative
//! shift yields a strictly feasible start and a certified positive lower bound
//! on the shift proves infeasibility. Phase II follows the central path of
//! `t c^T y - sum_j log det F_j(y)` until the duality-gap bound `nu / t` meets
//! the tolerance.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{SdpBackend, SdpProblem, SdpSolution, SdpStatus};
use crate::error::Result;
use crate::linalg::lambda_min;
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierOptions {
    /// Stop when `nu / t <= abs_gap + rel_gap |objective|`.
    pub rel_gap: f64,
    pub abs_gap: f64,
    /// Growth factor of the barrier parameter.
    pub mu: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    /// Half squared Newton decrement below which a point counts as centered.
    pub newton_tol: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            rel_gap: 1e-7,
            abs_gap: 1e-9,
            mu: 10.0,
            max_outer: 200,
            max_newton: 100,
            newton_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BarrierSolver {
    pub options: BarrierOptions,
}

impl BarrierSolver {
    pub fn new(options: BarrierOptions) -> Self {
        BarrierSolver { options }
    }
}

struct Block {
    f0: DMatrix<f64>,
    terms: Vec<(usize, DMatrix<f64>)>,
}

impl Block {
    fn at(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let mut f = self.f0.clone();
        for (var, a) in &self.terms {
            f += a * z[*var];
        }
        f
    }
}

/// `t c^T z - sum log det F_j(z) - sum_{i < boxed} log(bound^2 - z_i^2)`.
struct Barrier {
    blocks: Vec<Block>,
    c: DVector<f64>,
    boxed: usize,
    bound: f64,
}

enum Centering {
    Centered,
    Stalled,
    Early,
    Failed,
}

impl Barrier {
    fn nu(&self) -> f64 {
        self.blocks.iter().map(|b| b.f0.nrows()).sum::<usize>() as f64 + 2.0 * self.boxed as f64
    }

    fn barrier_value(&self, z: &DVector<f64>) -> Option<f64> {
        let mut v = 0.0;
        for i in 0..self.boxed {
            let (r1, r2) = (self.bound - z[i], self.bound + z[i]);
            if !(r1 > 0.0 && r2 > 0.0) {
                return None;
            }
            v -= r1.ln() + r2.ln();
        }
        for block in &self.blocks {
            let chol = Cholesky::new(block.at(z))?;
            let logdet: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
            v -= logdet;
        }
        v.is_finite().then_some(v)
    }

    /// Gradient and Hessian of the barrier part.
    fn derivatives(&self, z: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let k = z.len();
        let mut g = DVector::zeros(k);
        let mut h = DMatrix::zeros(k, k);
        for i in 0..self.boxed {
            let (r1, r2) = (self.bound - z[i], self.bound + z[i]);
            g[i] += 1.0 / r1 - 1.0 / r2;
            h[(i, i)] += 1.0 / (r1 * r1) + 1.0 / (r2 * r2);
        }
        for block in &self.blocks {
            let finv = Cholesky::new(block.at(z))?.inverse();
            let ws: Vec<DMatrix<f64>> = block.terms.iter().map(|(_, a)| &finv * a).collect();
            let wts: Vec<DMatrix<f64>> = ws.iter().map(|w| w.transpose()).collect();
            for (p, (vp, _)) in block.terms.iter().enumerate() {
                g[*vp] -= ws[p].trace();
                for (q, (vq, _)) in block.terms.iter().enumerate().skip(p) {
                    let v = ws[p].component_mul(&wts[q]).sum();
                    h[(*vp, *vq)] += v;
                    if p != q {
                        h[(*vq, *vp)] += v;
                    }
                }
            }
        }
        Some((g, h))
    }

    /// Newton direction for `H d = -g` with Jacobi scaling and a small
    /// diagonal shift when the Hessian is numerically singular.
    fn newton_step(g: &DVector<f64>, h: &DMatrix<f64>) -> Option<DVector<f64>> {
        let k = g.len();
        let d = DVector::from_iterator(
            k,
            (0..k).map(|i| if h[(i, i)] > 0.0 { 1.0 / h[(i, i)].sqrt() } else { 1.0 }),
        );
        let mut hs = h.clone();
        for i in 0..k {
            for j in 0..k {
                hs[(i, j)] *= d[i] * d[j];
            }
        }
        let gs = g.component_mul(&d);
        let mut reg = 0.0;
        loop {
            let mut m = hs.clone();
            for i in 0..k {
                m[(i, i)] += reg;
            }
            if let Some(ch) = Cholesky::new(m) {
                let step = ch.solve(&(-&gs)).component_mul(&d);
                return step.iter().all(|v| v.is_finite()).then_some(step);
            }
            reg = if reg == 0.0 { 1e-14 } else { reg * 100.0 };
            if reg > 1.0 {
                return None;
            }
        }
    }

    fn center(
        &self,
        z: &mut DVector<f64>,
        t: f64,
        opts: &BarrierOptions,
        iterations: &mut usize,
        early: &dyn Fn(&DVector<f64>) -> bool,
    ) -> Centering {
        let Some(mut bar) = self.barrier_value(z) else {
            return Centering::Failed;
        };
        for _ in 0..opts.max_newton {
            *iterations += 1;
            let Some((gb, h)) = self.derivatives(z) else {
                return Centering::Failed;
            };
            let g = gb + &self.c * t;
            let Some(step) = Self::newton_step(&g, &h) else {
                return Centering::Failed;
            };
            let dec = -g.dot(&step);
            if !(dec > 0.0) {
                return Centering::Stalled;
            }
            if dec / 2.0 <= opts.newton_tol {
                return Centering::Centered;
            }
            let phi = t * self.c.dot(z) + bar;
            let mut beta = 1.0;
            loop {
                let trial = &*z + &step * beta;
                if let Some(b) = self.barrier_value(&trial) {
                    if t * self.c.dot(&trial) + b <= phi - 0.25 * beta * dec {
                        *z = trial;
                        bar = b;
                        break;
                    }
                }
                beta *= 0.5;
                if beta < 1e-12 {
                    return Centering::Stalled;
                }
            }
            if early(z) {
                return Centering::Early;
            }
        }
        Centering::Stalled
    }
}

enum PhaseOne {
    Feasible(DVector<f64>),
    Infeasible(f64),
    Marginal(f64),
    Failed(String),
}

fn compile(problem: &SdpProblem) -> Result<Vec<Block>> {
    problem
        .blocks
        .iter()
        .map(|b| {
            Ok(Block {
                f0: b.constant.to_matrix()?,
                terms: b
                    .terms
                    .iter()
                    .map(|t| Ok((t.var, t.matrix.to_matrix()?)))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}

impl BarrierSolver {
    /// Minimize the uniform shift `s` with `F_j(y) + (relax_j + s) I ⪰ 0`.
    fn phase_one(&self, problem: &SdpProblem, blocks: &[Block], relaxed: bool, iterations: &mut usize) -> PhaseOne {
        let k = problem.num_vars();
        let mut shifted = Vec::with_capacity(blocks.len() + 1);
        let mut start_shift: f64 = 0.0;
        for (block, spec) in blocks.iter().zip(&problem.blocks) {
            let n = block.f0.nrows();
            let eye = DMatrix::<f64>::identity(n, n);
            let mut f0 = block.f0.clone();
            if relaxed {
                f0 += &eye * spec.relax;
            }
            if n > 0 {
                start_shift = start_shift.max(-lambda_min(&f0));
            }
            let mut terms = block.terms.clone();
            terms.push((k, eye));
            shifted.push(Block { f0, terms });
        }
        // s >= -1 keeps the phase-I problem bounded.
        shifted.push(Block {
            f0: DMatrix::from_element(1, 1, 1.0),
            terms: vec![(k, DMatrix::from_element(1, 1, 1.0))],
        });
        let mut c = DVector::zeros(k + 1);
        c[k] = 1.0;
        let barrier = Barrier {
            blocks: shifted,
            c,
            boxed: k,
            bound: problem.bound,
        };
        let nu = barrier.nu();
        let mut z = DVector::zeros(k + 1);
        z[k] = start_shift.max(0.0) + 1.0;
        let opts = &self.options;
        let mut t = 1.0;
        let early = |z: &DVector<f64>| z[k] < 0.0;
        for _ in 0..opts.max_outer {
            let outcome = barrier.center(&mut z, t, opts, iterations, &early);
            if let Centering::Failed = outcome {
                return PhaseOne::Failed("phase I lost positive definiteness".into());
            }
            let s = z[k];
            if s < 0.0 {
                return PhaseOne::Feasible(z.rows(0, k).into_owned());
            }
            // Approximate centering: keep a safety factor on the gap.
            let lower = s - 1.5 * nu / t;
            if lower > 0.0 {
                return PhaseOne::Infeasible(lower);
            }
            if nu / t <= 1e-12 * s.abs().max(1.0) || matches!(outcome, Centering::Stalled) && nu / t <= 1e-9 {
                return PhaseOne::Marginal(s);
            }
            t *= opts.mu;
        }
        PhaseOne::Marginal(z[k])
    }

    fn phase_two(&self, problem: &SdpProblem, blocks: Vec<Block>, y0: DVector<f64>, mut iterations: usize) -> SdpSolution {
        let k = problem.num_vars();
        let c = DVector::from_column_slice(&problem.objective);
        let barrier = Barrier {
            blocks,
            c: c.clone(),
            boxed: k,
            bound: problem.bound,
        };
        let nu = barrier.nu();
        let opts = &self.options;
        let mut y = y0;
        let never = |_: &DVector<f64>| false;
        let finish = |y: &DVector<f64>, gap: f64, iterations: usize, message: &str| SdpSolution {
            schema_version: SCHEMA_VERSION,
            status: SdpStatus::Optimal,
            x: y.iter().copied().collect(),
            objective: c.dot(y),
            gap,
            infeasibility: None,
            iterations,
            message: message.to_string(),
        };
        if c.iter().all(|v| *v == 0.0) {
            return match barrier.center(&mut y, 0.0, opts, &mut iterations, &never) {
                Centering::Failed => {
                    SdpSolution::without_point(SdpStatus::Unknown, iterations, "centering lost positive definiteness")
                }
                _ => finish(&y, 0.0, iterations, "analytic center"),
            };
        }
        let mut t = nu / c.dot(&y).abs().max(1.0);
        let mut stalls = 0;
        for _ in 0..opts.max_outer {
            let start = y.clone();
            match barrier.center(&mut y, t, opts, &mut iterations, &never) {
                Centering::Failed => {
                    y = start;
                    return finish(&y, nu / t * opts.mu, iterations, "stopped: Newton system breakdown");
                }
                Centering::Stalled => stalls += 1,
                _ => {}
            }
            let gap = nu / t;
            if gap <= opts.abs_gap + opts.rel_gap * c.dot(&y).abs() {
                return finish(&y, gap, iterations, "converged");
            }
            if stalls >= 3 {
                return finish(&y, gap, iterations, "stopped: line search stalled");
            }
            t *= opts.mu;
        }
        finish(&y, nu / t, iterations, "stopped: iteration limit")
    }
}

impl SdpBackend for BarrierSolver {
    fn name(&self) -> String {
        "reference".into()
    }

    fn solve(&self, problem: &SdpProblem) -> Result<SdpSolution> {
        problem.validate()?;
        let blocks = compile(problem)?;
        let mut iterations = 0;
        let first = self.phase_one(problem, &blocks, false, &mut iterations);
        let any_relax = problem.blocks.iter().any(|b| b.relax > 0.0);
        let verdict = match first {
            PhaseOne::Feasible(y0) => return Ok(self.phase_two(problem, blocks, y0, iterations)),
            PhaseOne::Infeasible(lb) if !any_relax => PhaseOne::Infeasible(lb),
            PhaseOne::Failed(msg) => PhaseOne::Failed(msg),
            _ => self.phase_one(problem, &blocks, true, &mut iterations),
        };
        Ok(match verdict {
            PhaseOne::Infeasible(lb) => SdpSolution {
                infeasibility: Some(lb),
                ..SdpSolution::without_point(
                    SdpStatus::Infeasible,
                    iterations,
                    format!("infeasible: every point violates some block by at least {lb:.3e}"),
                )
            },
            PhaseOne::Failed(msg) => SdpSolution::without_point(SdpStatus::Unknown, iterations, msg),
            PhaseOne::Feasible(_) => SdpSolution::without_point(
                SdpStatus::Unknown,
                iterations,
                "marginal: feasible only after relaxing the block margins",
            ),
            PhaseOne::Marginal(s) => SdpSolution::without_point(
                SdpStatus::Unknown,
                iterations,
                format!("marginal: best uniform shift {s:.3e} is neither feasible nor provably infeasible"),
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::SdpBlock;

    fn scalar(name: &str, c0: f64, coeffs: &[(usize, f64)]) -> SdpBlock {
        let mut b = SdpBlock::new(name, &DMatrix::from_element(1, 1, c0));
        for &(v, a) in coeffs {
            b.push(v, &DMatrix::from_element(1, 1, a));
        }
        b
    }

    #[test]
    fn linear_program_optimum() {
        // min -y0 - y1  s.t. y0 >= 0, y1 >= 0, 1 - y0 - y1 >= 0
        let mut p = SdpProblem::new(vec!["a".into(), "b".into()], 1e3);
        p.objective = vec![-1.0, -1.0];
        p.blocks.push(scalar("a", 0.0, &[(0, 1.0)]));
        p.blocks.push(scalar("b", 0.0, &[(1, 1.0)]));
        p.blocks.push(scalar("sum", 1.0, &[(0, -1.0), (1, -1.0)]));
        let sol = BarrierSolver::default().solve(&p).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-6, "{}", sol.objective);
    }

    #[test]
    fn max_eigenvalue_as_sdp() {
        // min t s.t. t I - M ⪰ 0 gives lambda_max(M).
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, -1.0]);
        let mut p = SdpProblem::new(vec!["t".into()], 1e3);
        p.objective = vec![1.0];
        let mut b = SdpBlock::new("lmi", &(-&m));
        b.push(0, &DMatrix::identity(3, 3));
        p.blocks.push(b);
        let sol = BarrierSolver::default().solve(&p).unwrap();
        let exact = crate::linalg::lambda_max(&m);
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective - exact).abs() < 1e-6 * exact.abs().max(1.0));
    }

    #[test]
    fn detects_infeasibility() {
        // y >= 1 and y <= 0.
        let mut p = SdpProblem::new(vec!["y".into()], 1e3);
        p.blocks.push(scalar("lo", -1.0, &[(0, 1.0)]));
        p.blocks.push(scalar("hi", 0.0, &[(0, -1.0)]));
        let sol = BarrierSolver::default().solve(&p).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
        assert!(sol.infeasibility.unwrap() > 0.0);
    }

    #[test]
    fn marginal_instance_is_unknown() {
        // y >= 1 and y <= 1 - 1e-9: infeasible, but within the allowed relaxation.
        let mut p = SdpProblem::new(vec!["y".into()], 1e3);
        p.blocks.push(scalar("lo", -1.0, &[(0, 1.0)]).with_relax(1e-6));
        p.blocks.push(scalar("hi", 1.0 - 1e-9, &[(0, -1.0)]).with_relax(1e-6));
        let sol = BarrierSolver::default().solve(&p).unwrap();
        assert_eq!(sol.status, SdpStatus::Unknown);
    }

    #[test]
    fn feasibility_returns_interior_point() {
        // [[y0, y1], [y1, 1]] ⪰ 0 and y0 <= 2.
        let mut p = SdpProblem::new(vec!["y0".into(), "y1".into()], 1e3);
        let mut b = SdpBlock::new("m", &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]));
        b.push(0, &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        b.push(1, &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        p.blocks.push(b);
        p.blocks.push(scalar("cap", 2.0, &[(0, -1.0)]));
        let sol = BarrierSolver::default().solve(&p).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        let margins = p.block_margins(&sol.x).unwrap();
        assert!(margins.iter().all(|m| *m > 0.0), "{margins:?}");
    }
}
