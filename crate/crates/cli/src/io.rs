use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use synthop_core::signals::{load_trajectory, Trajectory, TIME_TOL};
use synthop_core::synthesis::{gram_blocks, GramBlocks};

use crate::args::DataArgs;
use crate::error::{CliError, CliResult};

/// Data as read from `--in`: a trajectory (Gram blocks computed on load) or
/// Gram blocks saved by `synthctl gram`.
pub struct Data {
    pub trajectory: Option<Trajectory>,
    pub gram: GramBlocks,
}

impl Data {
    pub fn trajectory(&self, why: &str) -> CliResult<&Trajectory> {
        self.trajectory
            .as_ref()
            .ok_or_else(|| CliError::input(format!("{why} needs a trajectory CSV, not Gram blocks")))
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn load_data(args: &DataArgs) -> CliResult<Data> {
    let path = &args.input;
    if !path.exists() {
        return Err(CliError::input(format!("{} does not exist", path.display())));
    }
    let data = if is_json(path) {
        let gram: GramBlocks = serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| CliError::input(format!("{}: not a Gram-block file: {e}", path.display())))?;
        gram.validate()?;
        Data { trajectory: None, gram }
    } else {
        let traj = load_trajectory(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let gram = gram_blocks(&traj)?;
        Data { trajectory: Some(traj), gram }
    };
    let g = &data.gram;
    let mismatch = |what: &str, want: String, got: String| {
        CliError::input(format!("--{what} {want} does not match the data ({got})"))
    };
    if let Some(n) = args.n.filter(|n| *n != g.n) {
        return Err(mismatch("n", n.to_string(), g.n.to_string()));
    }
    if let Some(m) = args.m.filter(|m| *m != g.m) {
        return Err(mismatch("m", m.to_string(), g.m.to_string()));
    }
    if let Some(tau) = args.tau.filter(|t| (t - g.tau).abs() > TIME_TOL * g.tau.max(1.0)) {
        return Err(mismatch("tau", tau.to_string(), g.tau.to_string()));
    }
    Ok(data)
}

/// Pretty JSON to `out`, or to stdout when absent.
pub fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, text)?;
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
