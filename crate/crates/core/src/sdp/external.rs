//! Bridge to an out-of-process solver speaking the JSON problem format over
//! stdin/stdout.

use std::io::Write;
use std::process::{Command, Stdio};

use super::{SdpBackend, SdpProblem, SdpSolution};
use crate::error::{Error, Result};

/// Runs `program args...`, writes the problem JSON to its stdin and parses an
/// [`SdpSolution`] from its stdout.
#[derive(Debug, Clone)]
pub struct ExternalSolver {
    program: String,
    args: Vec<String>,
}

impl ExternalSolver {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        ExternalSolver {
            program: program.into(),
            args,
        }
    }

    /// Whitespace-separated command line; no shell quoting is interpreted.
    pub fn from_command_line(cmd: &str) -> Result<Self> {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| Error::OutOfRange("external backend needs a command".into()))?;
        Ok(ExternalSolver::new(program, parts.collect()))
    }
}

impl SdpBackend for ExternalSolver {
    fn name(&self) -> String {
        format!("external:{}", std::iter::once(&self.program).chain(&self.args).cloned().collect::<Vec<_>>().join(" "))
    }

    fn solve(&self, problem: &SdpProblem) -> Result<SdpSolution> {
        problem.validate()?;
        let payload = serde_json::to_vec(problem)?;
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Solver(format!("cannot start {}: {e}", self.program)))?;
        {
            let mut stdin = child.stdin.take().expect("stdin is piped");
            stdin
                .write_all(&payload)
                .map_err(|e| Error::Solver(format!("writing problem to {}: {e}", self.program)))?;
        }
        let out = child
            .wait_with_output()
            .map_err(|e| Error::Solver(format!("waiting for {}: {e}", self.program)))?;
        if !out.status.success() {
            return Err(Error::Solver(format!(
                "{} exited with {}: {}",
                self.program,
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        let sol: SdpSolution = serde_json::from_slice(&out.stdout)
            .map_err(|e| Error::Solver(format!("unreadable reply from {}: {e}", self.program)))?;
        if sol.status == super::SdpStatus::Optimal && sol.x.len() != problem.num_vars() {
            return Err(Error::Solver(format!(
                "{} returned {} values for {} variables",
                self.program,
                sol.x.len(),
                problem.num_vars()
            )));
        }
        Ok(sol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_program_is_a_solver_error() {
        let s = ExternalSolver::new("/nonexistent/solver-binary", vec![]);
        let p = SdpProblem::new(vec![], 1.0);
        assert!(matches!(s.solve(&p), Err(Error::Solver(_))));
    }
}
