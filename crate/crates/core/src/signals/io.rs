//! CSV trajectory files with a JSON metadata sidecar.
//!
//! The CSV has a header `t,x1..xn,u1..um` and one row per grid node. An
//! optional leading comment line `# u_interp=pc` declares a piecewise-constant
//! input; the segment value is stored on the row of the segment's left node
//! and the final row repeats the last segment value. The sidecar lives next to
//! the CSV with a `.json` extension.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::UniformGrid;
use super::signal::{Interpolation, Signal};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

/// Relative tolerance on the time column when checking uniformity.
pub const TIME_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub segments: usize,
    pub u_interp: Interpolation,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

impl TrajectoryMeta {
    pub fn of(traj: &Trajectory) -> Self {
        TrajectoryMeta {
            schema_version: SCHEMA_VERSION,
            n: traj.n(),
            m: traj.m(),
            tau: traj.tau(),
            segments: traj.x().grid().segments(),
            u_interp: traj.u().interpolation(),
        }
    }
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Render a trajectory as CSV text. `x` and `u` must share one grid.
pub fn trajectory_to_csv(traj: &Trajectory) -> Result<String> {
    let grid = *traj.x().grid();
    if traj.u().grid().segments() != grid.segments() {
        return Err(Error::InvalidGrid(
            "CSV output needs state and input on the same grid".into(),
        ));
    }
    let (n, m) = (traj.n(), traj.m());
    let mut out = String::new();
    if traj.u().interpolation() == Interpolation::PiecewiseConstant {
        out.push_str("# u_interp=pc\n");
    }
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|k| format!("x{k}")));
    header.extend((1..=m).map(|k| format!("u{k}")));
    out.push_str(&header.join(","));
    out.push('\n');
    let u_samples = traj.u().samples_len();
    for i in 0..grid.nodes_len() {
        let mut row = Vec::with_capacity(1 + n + m);
        row.push(format!("{}", grid.node(i)));
        row.extend(traj.x().sample(i).iter().map(|v| format!("{v}")));
        row.extend(
            traj.u()
                .sample(i.min(u_samples - 1))
                .iter()
                .map(|v| format!("{v}")),
        );
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Write the CSV and its metadata sidecar.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    fs::write(path, trajectory_to_csv(traj)?)?;
    let meta = TrajectoryMeta::of(traj);
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

/// Parse CSV text into a trajectory.
pub fn trajectory_from_csv(text: &str) -> Result<Trajectory> {
    let mut u_interp = Interpolation::PiecewiseLinear;
    for line in text.lines().take_while(|l| l.trim_start().starts_with('#')) {
        let body = line.trim_start().trim_start_matches('#').trim();
        if let Some(tag) = body.strip_prefix("u_interp=") {
            u_interp = Interpolation::from_tag(tag)
                .ok_or_else(|| Error::Malformed(format!("unknown u_interp directive {tag:?}")))?;
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Malformed(format!("header: {e}")))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.first() != Some(&"t") {
        return Err(Error::Malformed("first column must be `t`".into()));
    }
    let n = names[1..].iter().take_while(|h| h.starts_with('x')).count();
    let m = names.len() - 1 - n;
    if n == 0 || m == 0 {
        return Err(Error::Malformed(format!(
            "header must list x1..xn then u1..um, got {names:?}"
        )));
    }
    for (k, h) in names[1..=n].iter().enumerate() {
        if *h != format!("x{}", k + 1) {
            return Err(Error::Malformed(format!("unexpected state column {h:?}")));
        }
    }
    for (k, h) in names[1 + n..].iter().enumerate() {
        if *h != format!("u{}", k + 1) {
            return Err(Error::Malformed(format!("unexpected input column {h:?}")));
        }
    }

    let mut times = Vec::new();
    let mut xs = Vec::new();
    let mut us = Vec::new();
    for (row_idx, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Malformed(format!("row {}: {e}", row_idx + 1)))?;
        if rec.len() != 1 + n + m {
            return Err(Error::Malformed(format!(
                "row {} has {} fields, expected {}",
                row_idx + 1,
                rec.len(),
                1 + n + m
            )));
        }
        let mut vals = Vec::with_capacity(rec.len());
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Malformed(format!("row {}: bad number {field:?}", row_idx + 1)))?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("row {}", row_idx + 1)));
            }
            vals.push(v);
        }
        times.push(vals[0]);
        xs.extend_from_slice(&vals[1..=n]);
        us.extend_from_slice(&vals[1 + n..]);
    }
    if times.len() < 2 {
        return Err(Error::Malformed("need at least two time rows".into()));
    }
    let segments = times.len() - 1;
    let t0 = times[0];
    let tau = times[segments] - t0;
    let grid = UniformGrid::new(tau, segments)?;
    for (i, t) in times.iter().enumerate() {
        if ((t - t0) - grid.node(i)).abs() > TIME_TOL * tau {
            return Err(Error::NonUniformGrid(format!(
                "row {} has t = {t}, expected {}",
                i + 1,
                t0 + grid.node(i)
            )));
        }
    }
    let x = Signal::new(grid, Interpolation::PiecewiseLinear, n, xs)?;
    if u_interp == Interpolation::PiecewiseConstant {
        us.truncate(segments * m);
    }
    let u = Signal::new(grid, u_interp, m, us)?;
    Trajectory::new(x, u)
}

/// Load a trajectory CSV, cross-checking the sidecar when one exists.
pub fn load_trajectory(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path)?;
    let traj = trajectory_from_csv(&text)?;
    let side = sidecar_path(path);
    if side.exists() {
        let meta: TrajectoryMeta = serde_json::from_str(&fs::read_to_string(&side)?)?;
        let found = TrajectoryMeta::of(&traj);
        let tau_ok = (meta.tau - found.tau).abs() <= TIME_TOL * meta.tau.abs().max(1.0);
        if meta.n != found.n
            || meta.m != found.m
            || meta.segments != found.segments
            || meta.u_interp != found.u_interp
            || !tau_ok
        {
            return Err(Error::Malformed(format!(
                "sidecar {} disagrees with CSV: {meta:?} vs {found:?}",
                side.display()
            )));
        }
    }
    Ok(traj)
}
