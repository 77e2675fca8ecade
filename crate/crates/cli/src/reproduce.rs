//! The batch-reactor experiment end to end: per noise seed, simulate, form
//! Gram blocks, measure the noise, check informativity, synthesize a
//! regularized gain and verify it on sampled compatible systems.

use std::fmt::Write as _;
use std::fs;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use synthop_core::lmi::{synthesize_gain, synthesize_gain_regularized, Margins, SynthesisReport};
use synthop_core::signals::{gaussian_white_noise, matrix_exponential, simulate_lti, Trajectory, UniformGrid};
use synthop_core::synthesis::{adjoint_norm, gram_blocks};
use synthop_core::systems::{batch_reactor, batch_reactor_input, BATCH_REACTOR_SIGMA2, BATCH_REACTOR_TAU};
use synthop_core::verify::VerificationReport;
use synthop_core::{Error, SCHEMA_VERSION};

use crate::args::ReproduceArgs;
use crate::commands::{backend, check_level, verification};
use crate::error::{CliError, CliResult};
use crate::io::emit;

pub const EXIT_SIMULATE: i32 = 11;
pub const EXIT_GRAM: i32 = 12;
pub const EXIT_NOISE: i32 = 13;
pub const EXIT_CHECK: i32 = 14;
pub const EXIT_SYNTH: i32 = 15;
pub const EXIT_VERIFY: i32 = 16;

const CLOSED_LOOP_STEPS: usize = 1000;

fn stage<T>(code: i32, name: &str, seed: u64, r: synthop_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError { code, message: format!("seed {seed}, stage {name}: {e}") })
}

#[derive(Serialize)]
struct SeedRun {
    seed: u64,
    noise_norm: f64,
    noise_norm_squared: f64,
    check_c: f64,
    check_feasible: bool,
    check_detail: Option<String>,
    synth: SynthesisReport,
    verification: VerificationReport,
}

#[derive(Serialize)]
struct Summary {
    schema_version: u32,
    segments: usize,
    sigma2: f64,
    c_check: f64,
    c: f64,
    lambda: f64,
    delta_max: f64,
    samples: usize,
    noise_norm_mean: f64,
    feasible_count: usize,
    verification_failures: usize,
    closed_loop_seed: u64,
    runs: Vec<SeedRun>,
}

fn state_csv(times: impl Iterator<Item = f64>, states: &[DVector<f64>]) -> String {
    let n = states.first().map_or(0, |x| x.len());
    let mut out = String::from("t");
    for i in 1..=n {
        write!(out, ",x{i}").unwrap();
    }
    out.push('\n');
    for (t, x) in times.zip(states) {
        write!(out, "{t:.17e}").unwrap();
        for v in x.iter() {
            write!(out, ",{v:.17e}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn data_states(traj: &Trajectory) -> Vec<DVector<f64>> {
    let x = traj.x();
    (0..x.samples_len()).map(|i| DVector::from_column_slice(x.sample(i))).collect()
}

/// `x(t) = exp((A+BK) t) x0` on a uniform grid of `[0, horizon]`.
fn closed_loop(a: &DMatrix<f64>, b: &DMatrix<f64>, k: &DMatrix<f64>, x0: &DVector<f64>, horizon: f64) -> CliResult<Vec<DVector<f64>>> {
    let h = horizon / CLOSED_LOOP_STEPS as f64;
    let step = matrix_exponential(&((a + b * k) * h))?;
    let mut xs = Vec::with_capacity(CLOSED_LOOP_STEPS + 1);
    xs.push(x0.clone());
    for i in 0..CLOSED_LOOP_STEPS {
        let next = &step * &xs[i];
        xs.push(next);
    }
    Ok(xs)
}

pub fn reproduce(args: &ReproduceArgs) -> CliResult<()> {
    if args.seeds.is_empty() {
        return Err(CliError::input("--seeds must name at least one seed"));
    }
    let c_check = check_level(args.c_check, "c-check")?;
    let c = check_level(args.c, "c")?;
    if !(args.horizon.is_finite() && args.horizon > 0.0) {
        return Err(CliError::input(format!("--horizon must be > 0, got {}", args.horizon)));
    }
    let solver = backend(&args.solver)?;
    let sys = batch_reactor();
    let grid = UniformGrid::new(BATCH_REACTOR_TAU, args.segments).map_err(|e| CliError::input(e.to_string()))?;
    let u = batch_reactor_input(grid)?;

    let mut runs = Vec::with_capacity(args.seeds.len());
    let mut first_data = None;
    for &seed in &args.seeds {
        let traj = stage(EXIT_SIMULATE, "simulate", seed, {
            gaussian_white_noise(grid, BATCH_REACTOR_SIGMA2, sys.n(), seed)
                .and_then(|w| simulate_lti(&sys.a, &sys.b, &sys.x0, &u, Some(&w), grid).map(|t| (w, t)))
        })?;
        let (w, traj) = traj;
        let gram = stage(EXIT_GRAM, "gram", seed, gram_blocks(&traj))?;
        let noise_norm = stage(EXIT_NOISE, "noise", seed, adjoint_norm(&w, 1e-6))?;

        let (check_feasible, check_detail) = match synthesize_gain(&gram, c_check, Margins::default(), solver.as_ref()) {
            Ok(_) => (true, None),
            Err(e @ (Error::Infeasible(_) | Error::EmptySet(_))) => (false, Some(e.to_string())),
            Err(e) => return stage(EXIT_CHECK, "check", seed, Err(e)),
        };
        let synth = stage(
            EXIT_SYNTH,
            "synth",
            seed,
            synthesize_gain_regularized(&gram, c, args.lambda, args.delta_max, Margins::default(), solver.as_ref()),
        )?;
        let (_, report) = verification(&gram, c, &synth.k, &synth.p, args.samples, seed)
            .map_err(|e| e.with_code(EXIT_VERIFY))?;
        if first_data.is_none() {
            first_data = Some(traj);
        }
        runs.push(SeedRun {
            seed,
            noise_norm,
            noise_norm_squared: noise_norm * noise_norm,
            check_c: c_check,
            check_feasible,
            check_detail,
            synth,
            verification: report,
        });
    }

    let out = &args.out;
    fs::create_dir_all(out)?;
    let data = first_data.expect("at least one seed");
    fs::write(out.join("open_loop.csv"), state_csv(grid.nodes(), &data_states(&data)))?;
    let k = &runs[0].synth.k;
    let xs = closed_loop(&sys.a, &sys.b, k, &sys.x0, args.horizon)?;
    let times = (0..=CLOSED_LOOP_STEPS).map(|i| args.horizon * i as f64 / CLOSED_LOOP_STEPS as f64);
    fs::write(out.join("closed_loop.csv"), state_csv(times, &xs))?;

    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        segments: args.segments,
        sigma2: BATCH_REACTOR_SIGMA2,
        c_check,
        c,
        lambda: args.lambda,
        delta_max: args.delta_max,
        samples: args.samples,
        noise_norm_mean: runs.iter().map(|r| r.noise_norm).sum::<f64>() / runs.len() as f64,
        feasible_count: runs.iter().filter(|r| r.check_feasible).count(),
        verification_failures: runs.iter().map(|r| r.verification.failures.len()).sum(),
        closed_loop_seed: runs[0].seed,
        runs,
    };
    emit(&summary, Some(&out.join("summary.json")))?;
    emit(
        &serde_json::json!({
            "summary": out.join("summary.json").display().to_string(),
            "noise_norm_mean": summary.noise_norm_mean,
            "feasible_count": summary.feasible_count,
            "seeds": summary.runs.len(),
            "verification_failures": summary.verification_failures,
        }),
        None,
    )?;
    if summary.verification_failures > 0 {
        return Err(CliError { code: EXIT_VERIFY, message: format!("{} verification failures", summary.verification_failures) });
    }
    Ok(())
}
