//! Semidefinite feasibility/optimization problems in linear-matrix-inequality
//! form and the solver backends that consume them.
//!
//! A problem is `minimize c^T y` subject to `F_j(y) = F_j0 + sum_i y_i F_ji ⪰ 0`
//! for every block `j`, with every variable inside the box `|y_i| <= bound`.

mod barrier;
mod external;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lambda_min, DenseMatrix};
use crate::SCHEMA_VERSION;

pub use barrier::{BarrierOptions, BarrierSolver};
pub use external::ExternalSolver;

/// Environment variable naming the backend when no explicit choice is made.
pub const BACKEND_ENV: &str = "SYNTHCTL_BACKEND";

/// Coefficient matrix of one variable inside a block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpTerm {
    pub var: usize,
    pub matrix: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpBlock {
    pub name: String,
    pub size: usize,
    pub constant: DenseMatrix,
    pub terms: Vec<SdpTerm>,
    /// Amount by which the block may be relaxed (`F ⪰ -relax I`) before
    /// infeasibility is declared.
    #[serde(default)]
    pub relax: f64,
}

impl SdpBlock {
    pub fn new(name: impl Into<String>, constant: &DMatrix<f64>) -> Self {
        SdpBlock {
            name: name.into(),
            size: constant.nrows(),
            constant: DenseMatrix::from(constant),
            terms: Vec::new(),
            relax: 0.0,
        }
    }

    pub fn with_relax(mut self, relax: f64) -> Self {
        self.relax = relax;
        self
    }

    /// Adds `y_var * matrix`; zero matrices are skipped.
    pub fn push(&mut self, var: usize, matrix: &DMatrix<f64>) {
        if matrix.iter().any(|v| *v != 0.0) {
            self.terms.push(SdpTerm {
                var,
                matrix: DenseMatrix::from(matrix),
            });
        }
    }

    /// `F(y)` for concrete variable values.
    pub fn evaluate(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let mut f = self.constant.to_matrix()?;
        for term in &self.terms {
            let a = term.matrix.to_matrix()?;
            f += a * y[term.var];
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub schema_version: u32,
    /// One descriptor per variable slot, e.g. `P[0,1]`, `L[1,2]`, `alpha`.
    pub variables: Vec<String>,
    pub objective: Vec<f64>,
    pub blocks: Vec<SdpBlock>,
    /// Box `|y_i| <= bound` keeping the feasible set bounded.
    pub bound: f64,
}

impl SdpProblem {
    pub fn new(variables: Vec<String>, bound: f64) -> Self {
        let k = variables.len();
        SdpProblem {
            schema_version: SCHEMA_VERSION,
            variables,
            objective: vec![0.0; k],
            blocks: Vec::new(),
            bound,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    /// Structural checks: shapes, symmetry, indices, finiteness.
    pub fn validate(&self) -> Result<()> {
        let k = self.num_vars();
        if self.objective.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "objective has {} entries for {k} variables",
                self.objective.len()
            )));
        }
        if !(self.bound > 0.0) || !self.bound.is_finite() {
            return Err(Error::OutOfRange(format!("variable bound must be positive, got {}", self.bound)));
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("objective".into()));
        }
        for block in &self.blocks {
            let mats = std::iter::once(&block.constant).chain(block.terms.iter().map(|t| &t.matrix));
            for mat in mats {
                let m = mat.to_matrix()?;
                if m.shape() != (block.size, block.size) {
                    return Err(Error::DimensionMismatch(format!(
                        "block {} declares size {} but holds a {}x{} matrix",
                        block.name, block.size, m.nrows(), m.ncols()
                    )));
                }
                crate::linalg::check_finite(&m, &block.name)?;
                if (&m - m.transpose()).amax() > 1e-12 * crate::linalg::scale_of(&[&m]) {
                    return Err(Error::Malformed(format!("block {} is not symmetric", block.name)));
                }
            }
            if let Some(t) = block.terms.iter().find(|t| t.var >= k) {
                return Err(Error::DimensionMismatch(format!(
                    "block {} refers to variable {} of {k}",
                    block.name, t.var
                )));
            }
            if !(block.relax >= 0.0) {
                return Err(Error::OutOfRange(format!("block {} has negative relaxation", block.name)));
            }
        }
        Ok(())
    }

    /// Smallest eigenvalue of every block at `y`.
    pub fn block_margins(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.blocks.iter().map(|b| Ok(lambda_min(&b.evaluate(y)?))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    /// A strictly feasible point meeting the objective tolerance.
    Optimal,
    /// Infeasible even with every block relaxed by its `relax` amount.
    Infeasible,
    /// Numerical trouble or a marginal instance; no verdict.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub schema_version: u32,
    pub status: SdpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Bound on `objective - optimum` for `Optimal`.
    pub gap: f64,
    /// For `Infeasible`: certified lower bound on the uniform shift needed to
    /// make the relaxed blocks feasible.
    pub infeasibility: Option<f64>,
    pub iterations: usize,
    pub message: String,
}

impl SdpSolution {
    pub fn without_point(status: SdpStatus, iterations: usize, message: impl Into<String>) -> Self {
        SdpSolution {
            schema_version: SCHEMA_VERSION,
            status,
            x: Vec::new(),
            objective: f64::NAN,
            gap: f64::INFINITY,
            infeasibility: None,
            iterations,
            message: message.into(),
        }
    }
}

/// Solver contract: given affine PSD constraints and a linear objective,
/// return a status, the variable values and an objective accuracy bound.
pub trait SdpBackend {
    fn name(&self) -> String;
    fn solve(&self, problem: &SdpProblem) -> Result<SdpSolution>;
}

/// Parse a backend descriptor: `reference` (or empty) or `external:<command>`.
pub fn backend_from_spec(spec: &str) -> Result<Box<dyn SdpBackend>> {
    let spec = spec.trim();
    if spec.is_empty() || spec == "reference" {
        return Ok(Box::new(BarrierSolver::default()));
    }
    if let Some(cmd) = spec.strip_prefix("external:") {
        return Ok(Box::new(ExternalSolver::from_command_line(cmd)?));
    }
    Err(Error::OutOfRange(format!(
        "unknown solver backend {spec:?} (expected \"reference\" or \"external:<command>\")"
    )))
}

/// Backend selected by `SYNTHCTL_BACKEND`, defaulting to the reference solver.
pub fn default_backend() -> Result<Box<dyn SdpBackend>> {
    backend_from_spec(&std::env::var(BACKEND_ENV).unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut p = SdpProblem::new(vec!["y".into()], 10.0);
        let mut b = SdpBlock::new("b", &DMatrix::identity(2, 2));
        b.push(0, &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        p.blocks.push(b);
        let text = serde_json::to_string(&p).unwrap();
        let back: SdpProblem = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        back.validate().unwrap();
    }

    #[test]
    fn rejects_asymmetric_blocks() {
        let mut p = SdpProblem::new(vec!["y".into()], 10.0);
        let mut b = SdpBlock::new("b", &DMatrix::identity(2, 2));
        b.push(0, &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        p.blocks.push(b);
        assert!(p.validate().is_err());
    }

    #[test]
    fn backend_specs() {
        assert_eq!(backend_from_spec("").unwrap().name(), "reference");
        assert_eq!(backend_from_spec("reference").unwrap().name(), "reference");
        assert!(backend_from_spec("external:").is_err());
        assert!(backend_from_spec("cvx").is_err());
    }
}
