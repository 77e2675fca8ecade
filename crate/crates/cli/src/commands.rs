use std::fs;
use std::io::Read;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::json;
use synthop_core::informativity::{
    check_identification, check_identification_hat, check_stabilization_noiseless, design_gain_hat, ell_search, identify,
    HatPredicate,
};
use synthop_core::linalg::{dense_serde, DenseMatrix};
use synthop_core::lmi::{synthesize_gain, synthesize_gain_regularized, Margins};
use synthop_core::sdp::{backend_from_spec, BarrierSolver, SdpBackend, SdpProblem};
use synthop_core::signals::{gaussian_white_noise, simulate_lti, write_trajectory, Signal, TrajectoryMeta, UniformGrid};
use synthop_core::synthesis::{adjoint_norm, MAX_LEVEL};
use synthop_core::systems::{batch_reactor, batch_reactor_input, BATCH_REACTOR_TAU};
use synthop_core::verify::{default_membership_tol, membership, sample_members, verify_gain, VerificationReport};
use synthop_core::{Error, SCHEMA_VERSION};

use crate::args::{CheckArgs, CheckKind, GramArgs, SimulateArgs, SolverArgs, SynthArgs, VerifyArgs};
use crate::error::{CliError, CliResult, EXIT_NEGATIVE};
use crate::io::{emit, load_data};

pub fn backend(args: &SolverArgs) -> CliResult<Box<dyn SdpBackend>> {
    backend_from_spec(&args.backend).map_err(|e| CliError::input(e.to_string()))
}

pub fn check_level(c: f64, flag: &str) -> CliResult<f64> {
    if c.is_finite() && c >= 0.0 {
        Ok(c)
    } else {
        Err(CliError::input(format!("--{flag} must be finite and >= 0, got {c}")))
    }
}

fn check_ell(ell: u32, flag: &str) -> CliResult<u32> {
    if (1..=MAX_LEVEL).contains(&ell) {
        Ok(ell)
    } else {
        Err(CliError::input(format!("--{flag} must lie in 1..={MAX_LEVEL}, got {ell}")))
    }
}

fn check_tol(tol: f64, flag: &str) -> CliResult<f64> {
    if tol > 0.0 && tol < 1.0 {
        Ok(tol)
    } else {
        Err(CliError::input(format!("--{flag} must lie in (0, 1), got {tol}")))
    }
}

fn negative(what: &str) -> CliError {
    CliError { code: EXIT_NEGATIVE, message: what.to_string() }
}

#[derive(Debug, Deserialize)]
struct Sinusoid {
    amplitude: f64,
    frequency: f64,
    #[serde(default)]
    phase: f64,
}

/// Plant description accepted by `simulate --system <file>`; input channel
/// `k` is `sum amplitude sin(2 pi frequency t + phase)` over `input[k]`.
#[derive(Debug, Deserialize)]
struct SystemFile {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    x0: Vec<f64>,
    #[serde(default)]
    tau: Option<f64>,
    input: Vec<Vec<Sinusoid>>,
}

fn rows_to_matrix(rows: &[Vec<f64>], name: &str) -> CliResult<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::input(format!("system file: `{name}` must be a non-empty rectangular array")));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

struct Plant {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    x0: DVector<f64>,
    tau: f64,
    input: Box<dyn Fn(UniformGrid) -> synthop_core::Result<Signal>>,
}

fn load_plant(spec: &str) -> CliResult<Plant> {
    if spec == "batch-reactor" {
        let sys = batch_reactor();
        return Ok(Plant {
            a: sys.a,
            b: sys.b,
            x0: sys.x0,
            tau: BATCH_REACTOR_TAU,
            input: Box::new(batch_reactor_input),
        });
    }
    let text = fs::read_to_string(spec).map_err(|e| CliError::input(format!("--system {spec}: {e}")))?;
    let file: SystemFile = serde_json::from_str(&text).map_err(|e| CliError::input(format!("--system {spec}: {e}")))?;
    let a = rows_to_matrix(&file.a, "a")?;
    let b = rows_to_matrix(&file.b, "b")?;
    if file.input.len() != b.ncols() {
        return Err(CliError::input(format!(
            "system file: {} input channels for {} columns of b",
            file.input.len(),
            b.ncols()
        )));
    }
    let channels = file.input;
    let m = b.ncols();
    Ok(Plant {
        x0: DVector::from_vec(file.x0),
        tau: file.tau.unwrap_or(1.0),
        a,
        b,
        input: Box::new(move |grid| {
            Signal::sample_nodes(grid, m, |t| {
                channels
                    .iter()
                    .map(|ch| {
                        ch.iter()
                            .map(|s| s.amplitude * (2.0 * std::f64::consts::PI * s.frequency * t + s.phase).sin())
                            .sum()
                    })
                    .collect()
            })
        }),
    })
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    if !(args.noise.is_finite() && args.noise >= 0.0) {
        return Err(CliError::input(format!("--noise must be finite and >= 0, got {}", args.noise)));
    }
    if args.noise > 0.0 && args.seed.is_none() {
        return Err(CliError::input("--noise > 0 requires --seed"));
    }
    if args.segments == 0 {
        return Err(CliError::input("--segments must be >= 1"));
    }
    let plant = load_plant(&args.system)?;
    let tau = args.tau.unwrap_or(plant.tau);
    let grid = UniformGrid::new(tau, args.segments).map_err(|e| CliError::input(e.to_string()))?;
    let u = (plant.input)(grid)?;
    let (noise, noise_norm) = match args.seed.filter(|_| args.noise > 0.0) {
        Some(seed) => {
            let w = gaussian_white_noise(grid, args.noise, plant.a.nrows(), seed)?;
            let norm = adjoint_norm(&w, 1e-6)?;
            (Some(w), Some(norm))
        }
        None => (None, None),
    };
    let traj = simulate_lti(&plant.a, &plant.b, &plant.x0, &u, noise.as_ref(), grid)?;
    write_trajectory(&args.out, &traj)?;
    emit(
        &json!({
            "schema_version": SCHEMA_VERSION,
            "csv": args.out.display().to_string(),
            "meta": TrajectoryMeta::of(&traj),
            "noise_intensity": args.noise,
            "seed": args.seed,
            "noise_norm": noise_norm,
        }),
        None,
    )
}

pub fn gram(args: &GramArgs) -> CliResult<()> {
    let data = load_data(&args.data)?;
    emit(&data.gram, args.out.as_deref())
}

#[derive(Serialize)]
struct IdentifiedSystem {
    #[serde(with = "dense_serde")]
    a: DMatrix<f64>,
    #[serde(with = "dense_serde")]
    b: DMatrix<f64>,
}

pub fn check(args: &CheckArgs) -> CliResult<()> {
    let data = load_data(&args.data)?;
    let tol = check_tol(args.tol_rank, "tol-rank")?;
    let ell = args.ell.map(|l| check_ell(l, "ell")).transpose()?;
    let ell_max = args.ell_max.map(|l| check_ell(l, "ell-max")).transpose()?;
    let solver = backend(&args.solver)?;
    let hat_needed = ell.is_some() || ell_max.is_some();
    let traj = if hat_needed { Some(data.trajectory("the hat route")?) } else { None };

    let (verdict, body) = match args.kind {
        CheckKind::Identification => {
            let cert = check_identification(&data.gram, tol)?;
            let system = if cert.verdict {
                let (a, b) = identify(&data.gram, tol)?;
                Some(IdentifiedSystem { a, b })
            } else {
                None
            };
            let hat = match (traj, ell, ell_max) {
                (Some(t), Some(l), _) => Some(serde_json::to_value(check_identification_hat(t, l, tol)?)?),
                (Some(t), None, Some(lm)) => {
                    Some(serde_json::to_value(ell_search(t, HatPredicate::Identification, lm, tol, solver.as_ref())?)?)
                }
                _ => None,
            };
            (cert.verdict, json!({ "gram": cert, "system": system, "hat": hat }))
        }
        CheckKind::Stabilization => {
            let v = check_stabilization_noiseless(&data.gram, Margins::default(), solver.as_ref())?;
            let hat = match (traj, ell, ell_max) {
                (Some(t), Some(l), _) => Some(match design_gain_hat(t, l, solver.as_ref()) {
                    Ok(g) => json!({ "level": l, "passed": g.s_max < 0.0, "gain": g }),
                    Err(e @ (Error::Infeasible(_) | Error::Solver(_))) => {
                        json!({ "level": l, "passed": false, "reason": e.to_string() })
                    }
                    Err(e) => return Err(e.into()),
                }),
                (Some(t), None, Some(lm)) => {
                    Some(serde_json::to_value(ell_search(t, HatPredicate::Stabilization, lm, tol, solver.as_ref())?)?)
                }
                _ => None,
            };
            (v.informative, json!({ "gram": v, "hat": hat }))
        }
        CheckKind::Noisy => {
            let c = check_level(args.c.ok_or_else(|| CliError::input("--kind noisy requires --c"))?, "c")?;
            match synthesize_gain(&data.gram, c, Margins::default(), solver.as_ref()) {
                Ok(r) => (true, json!({ "c": c, "c_effective": r.c_effective, "report": r })),
                Err(e @ (Error::Infeasible(_) | Error::EmptySet(_))) => {
                    (false, json!({ "c": c, "reason": e.to_string() }))
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    let kind = match args.kind {
        CheckKind::Identification => "identification",
        CheckKind::Stabilization => "stabilization",
        CheckKind::Noisy => "noisy",
    };
    let mut out = json!({ "schema_version": SCHEMA_VERSION, "kind": kind, "verdict": verdict });
    if let (Some(o), Some(b)) = (out.as_object_mut(), body.as_object()) {
        o.extend(b.clone());
    }
    emit(&out, args.out.as_deref())?;
    if verdict {
        Ok(())
    } else {
        Err(negative(&format!("{kind}: negative verdict")))
    }
}

/// A sampled compatible `(A, B)`.
type Member = (DMatrix<f64>, DMatrix<f64>);

pub fn verification(
    gram: &synthop_core::synthesis::GramBlocks,
    c: f64,
    k: &DMatrix<f64>,
    p: &DMatrix<f64>,
    samples: usize,
    seed: u64,
) -> CliResult<(Vec<Member>, VerificationReport)> {
    let members = sample_members(gram, c, samples, seed)?;
    let report = verify_gain(gram, c, k, p, &members)?;
    Ok((members, report))
}

pub fn synth(args: &SynthArgs) -> CliResult<()> {
    let data = load_data(&args.data)?;
    let c = check_level(args.c, "c")?;
    let solver = backend(&args.solver)?;
    let margins = Margins::default();
    let result = match args.reg.selected() {
        Some((lambda, delta_max)) => {
            synthesize_gain_regularized(&data.gram, c, lambda, delta_max, margins, solver.as_ref())
        }
        None => synthesize_gain(&data.gram, c, margins, solver.as_ref()),
    };
    let mut report = match result {
        Ok(r) => r,
        Err(e @ (Error::Infeasible(_) | Error::EmptySet(_))) => {
            let msg = e.to_string();
            emit(
                &json!({ "schema_version": SCHEMA_VERSION, "verdict": "infeasible", "c": c, "reason": msg }),
                args.out.as_deref(),
            )?;
            return Err(negative(&msg));
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(seed) = args.seed {
        let (_, v) = verification(&data.gram, c, &report.k, &report.p, args.sampling.samples, seed)?;
        report.verification = Some(v);
    }
    emit(&report, args.out.as_deref())?;
    match &report.verification {
        Some(v) if !v.passed => Err(negative(&format!("gain failed on {} of {} samples", v.failures.len(), v.samples))),
        _ => Ok(()),
    }
}

/// Any JSON object with `k` and `p`, such as a synthesis report.
#[derive(Deserialize)]
struct GainFile {
    #[serde(default)]
    c: Option<f64>,
    k: DenseMatrix,
    p: DenseMatrix,
}

pub fn verify(args: &VerifyArgs) -> CliResult<()> {
    let data = load_data(&args.data)?;
    let text = fs::read_to_string(&args.report).map_err(|e| CliError::input(format!("--report: {e}")))?;
    let gain: GainFile = serde_json::from_str(&text).map_err(|e| CliError::input(format!("--report: {e}")))?;
    let c = check_level(
        args.c.or(gain.c).ok_or_else(|| CliError::input("no noise level: pass --c"))?,
        "c",
    )?;
    let tol = match args.tol_membership {
        Some(t) if t.is_finite() && t >= 0.0 => t,
        Some(t) => return Err(CliError::input(format!("--tol-membership must be >= 0, got {t}"))),
        None => default_membership_tol(c),
    };
    let (k, p) = (gain.k.to_matrix()?, gain.p.to_matrix()?);
    let (members, report) = verification(&data.gram, c, &k, &p, args.sampling.samples, args.seed)?;
    let mut outside = 0;
    for (a, b) in &members {
        if !membership(&data.gram, a, b, c, tol)?.member {
            outside += 1;
        }
    }
    let passed = report.passed && outside == 0;
    emit(
        &json!({
            "schema_version": SCHEMA_VERSION,
            "c": c,
            "seed": args.seed,
            "tol_membership": tol,
            "samples_outside_set": outside,
            "passed": passed,
            "verification": report,
        }),
        args.out.as_deref(),
    )?;
    if passed {
        Ok(())
    } else {
        Err(negative("verification failed"))
    }
}

pub fn sdp_solve() -> CliResult<()> {
    let mut text = String::new();
    std::io::stdin().read_to_string(&mut text)?;
    let problem: SdpProblem = serde_json::from_str(&text)?;
    let solution = BarrierSolver::default().solve(&problem)?;
    emit(&solution, None)
}
