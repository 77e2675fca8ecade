use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
#[cfg(test)]
use synthop_core::informativity::DEFAULT_ELL_MAX;
use synthop_core::informativity::DEFAULT_RANK_TOL;
use synthop_core::lmi::{DEFAULT_DELTA_MAX, DEFAULT_LAMBDA};
use synthop_core::sdp::BACKEND_ENV;

#[derive(Debug, Parser)]
#[command(name = "synthctl", version, about = "Data-driven identification and stabilizing-gain synthesis from continuous-time trajectories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a plant and write trajectory CSV plus metadata JSON.
    Simulate(SimulateArgs),
    /// Compute the six Gram blocks of a trajectory.
    Gram(GramArgs),
    /// Informativity verdict for identification, stabilization, or a noise level.
    Check(CheckArgs),
    /// Synthesize a stabilizing gain from the LMI.
    Synth(SynthArgs),
    /// Check a synthesized gain against sampled compatible systems.
    Verify(VerifyArgs),
    /// Run the full batch-reactor experiment over a set of noise seeds.
    Reproduce(ReproduceArgs),
    /// Solve an SDP read as JSON from stdin (reference solver).
    #[command(hide = true)]
    SdpSolve,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `batch-reactor` or a JSON system file.
    #[arg(long, default_value = "batch-reactor")]
    pub system: String,
    #[arg(long, default_value_t = 2048)]
    pub segments: usize,
    /// Horizon; defaults to the system's own (1 for the batch reactor).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Process-noise intensity sigma^2.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "out")]
    pub out: PathBuf,
}

/// Trajectory CSV or Gram-block JSON, with optional shape assertions.
#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// `reference` or `external:<command>`.
    #[arg(long, env = BACKEND_ENV, default_value = "reference")]
    pub backend: String,
}

#[derive(Debug, Args)]
pub struct GramArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long = "out")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    Identification,
    Stabilization,
    Noisy,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "identification")]
    pub kind: CheckKind,
    /// Noise level for `--kind noisy`.
    #[arg(long)]
    pub c: Option<f64>,
    /// Also test the hat route at this level.
    #[arg(long, conflicts_with = "ell_max")]
    pub ell: Option<u32>,
    /// Also scan hat levels 1..=ell_max (bare flag: 1..=DEFAULT_ELL_MAX).
    #[arg(long, num_args = 0..=1, default_missing_value = "10")]
    pub ell_max: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    pub tol_rank: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long = "out")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegularizationArgs {
    /// Weight of delta in `gamma - lambda delta`; selects the regularized problem.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Upper bound on delta; selects the regularized problem.
    #[arg(long)]
    pub delta_max: Option<f64>,
}

impl RegularizationArgs {
    pub fn selected(&self) -> Option<(f64, f64)> {
        if self.lambda.is_none() && self.delta_max.is_none() {
            return None;
        }
        Some((self.lambda.unwrap_or(DEFAULT_LAMBDA), self.delta_max.unwrap_or(DEFAULT_DELTA_MAX)))
    }
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    /// Number of sampled compatible systems.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    #[command(flatten)]
    pub reg: RegularizationArgs,
    /// Seed for the verification samples; verification is skipped without it.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long = "out")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Synthesis report JSON holding `k` and `p`.
    #[arg(long)]
    pub report: PathBuf,
    /// Noise level; defaults to the one in the report.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Slack on membership, `lambda_max(R) <= c + tol`; default `1e-8 max(1, c)`.
    #[arg(long)]
    pub tol_membership: Option<f64>,
    #[arg(long = "out")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Comma-separated noise seeds.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 2048)]
    pub segments: usize,
    /// Level of the informativity check.
    #[arg(long, default_value_t = 0.1164)]
    pub c_check: f64,
    /// Level of the regularized synthesis.
    #[arg(long, default_value_t = 0.1)]
    pub c: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA_MAX)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Horizon of the closed-loop time series.
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory.
    #[arg(long = "out")]
    pub out: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_ell_max_uses_the_library_default() {
        let cli = Cli::try_parse_from(["synthctl", "check", "--in", "d.csv", "--ell-max"]).unwrap();
        let Command::Check(c) = cli.command else { panic!("parsed {cli:?}") };
        assert_eq!(c.ell_max, Some(DEFAULT_ELL_MAX));
    }

    #[test]
    fn ell_and_ell_max_conflict() {
        assert!(Cli::try_parse_from(["synthctl", "check", "--in", "d.csv", "--ell", "2", "--ell-max", "4"]).is_err());
    }

    #[test]
    fn regularization_defaults_fill_in() {
        let cli = Cli::try_parse_from(["synthctl", "synth", "--in", "d.csv", "--lambda", "5"]).unwrap();
        let Command::Synth(s) = cli.command else { panic!("parsed {cli:?}") };
        assert_eq!(s.reg.selected(), Some((5.0, DEFAULT_DELTA_MAX)));
    }
}
