mod common;

use nalgebra::{DMatrix, DVector};
use synthop_core::informativity::{
    check_identification, check_identification_hat, check_stabilization_noiseless, design_gain_hat, ell_search, identify,
    HatPredicate, DEFAULT_ELL_MAX, DEFAULT_RANK_TOL,
};
use synthop_core::linalg::max_real_eigenvalue;
use synthop_core::lmi::Margins;
use synthop_core::sdp::BarrierSolver;
use synthop_core::signals::{simulate_lti, Interpolation, Signal, Trajectory, UniformGrid};
use synthop_core::synthesis::gram_blocks;
use synthop_core::systems::{batch_reactor, batch_reactor_input};

fn batch_reactor_data(segments: usize) -> Trajectory {
    let sys = batch_reactor();
    let grid = UniformGrid::new(1.0, segments).unwrap();
    let u = batch_reactor_input(grid).unwrap();
    simulate_lti(&sys.a, &sys.b, &sys.x0, &u, None, grid).unwrap()
}

fn scalar_data(a: f64, b: f64, segments: usize, input: impl Fn(f64) -> f64) -> Trajectory {
    let grid = UniformGrid::new(1.0, segments).unwrap();
    let u = Signal::sample_nodes(grid, 1, |t| vec![input(t)]).unwrap();
    simulate_lti(
        &DMatrix::from_element(1, 1, a),
        &DMatrix::from_element(1, 1, b),
        &DVector::from_element(1, 1.0),
        &u,
        None,
        grid,
    )
    .unwrap()
}

#[test]
fn scalar_identification_on_a_fine_grid() {
    let traj = scalar_data(-1.0, 2.0, 8192, |t| (2.0 * std::f64::consts::PI * t).sin());
    let (a, b) = identify(&gram_blocks(&traj).unwrap(), DEFAULT_RANK_TOL).unwrap();
    assert!((a[(0, 0)] + 1.0).abs() <= 1e-6 && (b[(0, 0)] - 2.0).abs() <= 1e-6, "a {a} b {b}");
}

#[test]
fn batch_reactor_identification_scan_is_monotone() {
    let traj = batch_reactor_data(1024);
    let search = ell_search(&traj, HatPredicate::Identification, DEFAULT_ELL_MAX, DEFAULT_RANK_TOL, &BarrierSolver::default()).unwrap();
    let level = search.level.expect("some level passes");
    assert!(level <= 6);
    assert!(check_identification_hat(&traj, level + 1, DEFAULT_RANK_TOL).unwrap().verdict);
    assert!(!check_identification_hat(&traj, 6, DEFAULT_RANK_TOL).unwrap().values.is_empty());
}

#[test]
fn batch_reactor_hat_gain_at_level_six() {
    let sys = batch_reactor();
    let traj = batch_reactor_data(1024);
    let g = design_gain_hat(&traj, 6, &BarrierSolver::default()).unwrap();
    assert!(g.s_max < 0.0);
    assert!(max_real_eigenvalue(&(&sys.a + &sys.b * &g.k)) < 0.0);
    // Phi_l Theta symmetric positive definite in raw units
    let h = synthop_core::synthesis::hat_matrices(&traj, 6).unwrap();
    let pt = &h.phi * &g.theta;
    assert!((&pt - pt.transpose()).amax() <= 1e-8 * pt.amax(), "asym {} of {}", (&pt - pt.transpose()).amax(), pt.amax());
    assert!(pt.cholesky().is_some());
}

#[test]
fn stabilization_search_finds_a_level() {
    let traj = batch_reactor_data(1024);
    let s = ell_search(&traj, HatPredicate::Stabilization, DEFAULT_ELL_MAX, DEFAULT_RANK_TOL, &BarrierSolver::default()).unwrap();
    assert_eq!(s.outcome, "passed");
    assert_eq!(s.attempts.len() as u32, s.level.unwrap());
}

#[test]
fn zero_data_is_inconclusive_on_the_hat_route() {
    let grid = UniformGrid::new(1.0, 16).unwrap();
    let traj = Trajectory::new(
        Signal::zeros(grid, Interpolation::PiecewiseLinear, 2).unwrap(),
        Signal::zeros(grid, Interpolation::PiecewiseConstant, 1).unwrap(),
    )
    .unwrap();
    let s = ell_search(&traj, HatPredicate::Identification, 5, DEFAULT_RANK_TOL, &BarrierSolver::default()).unwrap();
    assert_eq!(s.level, None);
    assert_eq!(s.outcome, "inconclusive");
    let v = check_stabilization_noiseless(&gram_blocks(&traj).unwrap(), Margins::default(), &BarrierSolver::default()).unwrap();
    assert!(!v.informative);
}

#[test]
fn uncontrollable_unstable_scalar_is_not_stabilizable() {
    let traj = scalar_data(1.0, 0.0, 256, |_| 0.0);
    let g = gram_blocks(&traj).unwrap();
    let v = check_stabilization_noiseless(&g, Margins::default(), &BarrierSolver::default()).unwrap();
    assert!(!v.informative, "{v:?}");
    assert!(v.report.is_none());
}

#[test]
fn batch_reactor_noiseless_stabilization_verdict() {
    let sys = batch_reactor();
    let traj = batch_reactor_data(1 << 14);
    let g = gram_blocks(&traj).unwrap();
    let v = check_stabilization_noiseless(&g, Margins::default(), &BarrierSolver::default()).unwrap();
    let k = &v.report.expect("feasible").k;
    assert!(max_real_eigenvalue(&(&sys.a + &sys.b * k)) < 0.0);
}

#[test]
fn gram_and_hat_routes_agree_on_random_data() {
    let mut informative = 0;
    for seed in 0..24u64 {
        let mut r = common::rng(seed);
        let n = 1 + (seed % 3) as usize;
        let m = 1 + (seed % 2) as usize;
        // Few segments on purpose: some datasets lack rank.
        let segments = [1usize, 2, 4, 16, 64][(seed % 5) as usize];
        let traj = common::random_trajectory(&mut r, n, m, segments, 1.0);
        let gram = check_identification(&gram_blocks(&traj).unwrap(), DEFAULT_RANK_TOL).unwrap();
        let hat = ell_search(&traj, HatPredicate::Identification, 10, DEFAULT_RANK_TOL, &BarrierSolver::default()).unwrap();
        assert_eq!(gram.verdict, hat.level.is_some(), "seed {seed}: gram {gram:?} hat {hat:?}");
        informative += gram.verdict as usize;
    }
    assert!(informative > 0 && informative < 24);
}

#[test]
fn verdicts_are_scale_invariant() {
    let traj = batch_reactor_data(512);
    for k in [1e-3, -2.0, 1e3] {
        let scaled = traj.scaled(k);
        assert!(check_identification(&gram_blocks(&scaled).unwrap(), DEFAULT_RANK_TOL).unwrap().verdict);
        assert!(check_identification_hat(&scaled, 3, DEFAULT_RANK_TOL).unwrap().verdict);
        assert!(!check_identification_hat(&scaled, 2, DEFAULT_RANK_TOL).unwrap().verdict);
    }
}
