mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use synthop_core::informativity::{identify, DEFAULT_RANK_TOL};
use synthop_core::linalg::{lambda_max, lambda_min, scale_of};
use synthop_core::lmi::{assemble_noisy_lmi, synthesize_gain, Margins};
use synthop_core::sdp::BarrierSolver;
use synthop_core::signals::{trajectory_from_csv, trajectory_to_csv, Interpolation, Signal, Trajectory, UniformGrid};
use synthop_core::synthesis::{adjoint_norm, gram_blocks, gram_tt, green_kernel, stack_ab};
use synthop_core::verify::{default_membership_tol, membership, sample_members, synthetic_gram};

fn signal_on(tau: f64, max_dim: usize, max_segments: usize) -> impl Strategy<Value = Signal> {
    (1..=max_dim, 1..=max_segments, any::<bool>()).prop_flat_map(move |(dim, segs, pl)| {
        let len = if pl { (segs + 1) * dim } else { segs * dim };
        prop::collection::vec(-5.0f64..5.0, len).prop_map(move |v| {
            let law = if pl { Interpolation::PiecewiseLinear } else { Interpolation::PiecewiseConstant };
            Signal::new(UniformGrid::new(tau, segs).unwrap(), law, dim, v).unwrap()
        })
    })
}

fn signal_strategy(max_dim: usize, max_segments: usize) -> impl Strategy<Value = Signal> {
    (0.2f64..3.0).prop_flat_map(move |tau| signal_on(tau, max_dim, max_segments))
}

fn signal_pair() -> impl Strategy<Value = (Signal, Signal)> {
    (0.2f64..3.0).prop_flat_map(|tau| (signal_on(tau, 3, 12), signal_on(tau, 2, 12)))
}

fn trajectory_strategy() -> impl Strategy<Value = Trajectory> {
    (1usize..=3, 1usize..=2, 1usize..=16, 0.2f64..3.0, any::<bool>(), any::<u64>()).prop_map(
        |(n, m, segs, tau, pl, seed)| {
            let mut r = common::rng(seed);
            let grid = UniformGrid::new(tau, segs).unwrap();
            let xs = common::normal_matrix(&mut r, 1, (segs + 1) * n);
            let x = Signal::new(grid, Interpolation::PiecewiseLinear, n, xs.iter().copied().collect()).unwrap();
            let (law, len) = if pl {
                (Interpolation::PiecewiseLinear, (segs + 1) * m)
            } else {
                (Interpolation::PiecewiseConstant, segs * m)
            };
            let us = common::normal_matrix(&mut r, 1, len);
            let u = Signal::new(grid, law, m, us.iter().copied().collect()).unwrap();
            Trajectory::new(x, u).unwrap()
        },
    )
}

/// Positive definite excitation Gram `V V*` and a system.
fn synthetic_strategy() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    (1usize..=3, 1usize..=2, any::<u64>()).prop_map(|(n, m, seed)| {
        let mut r = common::rng(seed);
        let a = common::normal_matrix(&mut r, n, n);
        let b = common::normal_matrix(&mut r, n, m);
        let f = common::normal_matrix(&mut r, n + m, n + m);
        let vv = &f * f.transpose() + DMatrix::identity(n + m, n + m) * 0.1;
        (a, b, vv)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn green_kernel_symmetric_and_nonnegative(t in 0.0f64..1.0, s in 0.0f64..1.0, tau in 0.1f64..5.0) {
        let (t, s) = (t * tau, s * tau);
        let g = green_kernel(t, s, tau).unwrap();
        prop_assert!(g >= 0.0);
        prop_assert!((g - green_kernel(s, t, tau).unwrap()).abs() <= 1e-15 * tau);
    }

    #[test]
    fn gram_blocks_psd_and_quadratic_in_data(traj in trajectory_strategy(), k in 0.1f64..4.0) {
        let g = gram_blocks(&traj).unwrap();
        let tol = 1e-10 * g.scale().max(1e-300);
        for block in [&g.gdd, &g.gxx, &g.guu, &g.data_gram()] {
            prop_assert!(lambda_min(block) >= -tol);
        }
        let gk = gram_blocks(&traj.scaled(k)).unwrap();
        let diff = (gk.data_gram() - g.data_gram() * (k * k)).amax();
        prop_assert!(diff <= 1e-12 * k * k * g.scale().max(1.0));
        prop_assert!((&gk.gdd - &g.gdd * (k * k)).amax() <= 1e-12 * k * k * g.scale().max(1.0));
    }

    #[test]
    fn gram_tt_transpose_symmetry((f, g) in signal_pair()) {
        let fg = gram_tt(&f, &g).unwrap();
        let gf = gram_tt(&g, &f).unwrap();
        prop_assert!((fg - gf.transpose()).amax() <= 1e-12 * scale_of(&[&gf]).max(1e-300));
    }

    #[test]
    fn adjoint_norm_squares_to_top_eigenvalue(f in signal_strategy(3, 24)) {
        let top = lambda_max(&gram_tt(&f, &f).unwrap());
        prop_assume!(top > 1e-12);
        let norm = adjoint_norm(&f, 1e-6).unwrap();
        prop_assert!((norm * norm - top).abs() <= 3e-6 * top);
    }

    #[test]
    fn csv_round_trip(traj in trajectory_strategy()) {
        let text = trajectory_to_csv(&traj).unwrap();
        let back = trajectory_from_csv(&text).unwrap();
        prop_assert_eq!(back.n(), traj.n());
        prop_assert_eq!(back.u().interpolation(), traj.u().interpolation());
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        prop_assert!(close(back.x().values(), traj.x().values()));
        prop_assert!(close(back.u().values(), traj.u().values()));
    }

    #[test]
    fn identify_is_exact_on_consistent_blocks((a, b, vv) in synthetic_strategy()) {
        let g = synthetic_gram(&a, &b, &vv, None, 1.0).unwrap();
        let (ah, bh) = identify(&g, DEFAULT_RANK_TOL).unwrap();
        let err = (stack_ab(&ah, &bh) - stack_ab(&a, &b)).amax();
        prop_assert!(err <= 1e-7 * (1.0 + stack_ab(&a, &b).amax()), "err {}", err);
    }

    #[test]
    fn membership_is_midpoint_convex((a, b, vv) in synthetic_strategy(), c in 0.01f64..1.0, seed in any::<u64>()) {
        let g = synthetic_gram(&a, &b, &vv, Some(&(DMatrix::identity(a.nrows(), a.nrows()) * 0.5 * c)), 1.0).unwrap();
        let samples = sample_members(&g, c, 8, seed).unwrap();
        let tol = default_membership_tol(c);
        for (x, y) in samples.iter().zip(samples.iter().rev()) {
            prop_assert!(membership(&g, &x.0, &x.1, c, tol).unwrap().member);
            let mid = membership(&g, &((&x.0 + &y.0) / 2.0), &((&x.1 + &y.1) / 2.0), c, tol).unwrap();
            prop_assert!(mid.member, "midpoint lambda_max {} > c {}", mid.lambda_max, c);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn certificates_survive_smaller_noise_levels((a, b, vv) in synthetic_strategy(), c in 0.001f64..0.05, shrink in 0.0f64..1.0) {
        let n = a.nrows();
        let g = synthetic_gram(&a, &b, &vv, Some(&(DMatrix::identity(n, n) * 0.5 * c)), 1.0).unwrap();
        let report = synthesize_gain(&g, c, Margins::default(), &BarrierSolver::default());
        prop_assume!(report.is_ok());
        let r = report.unwrap();
        let lower = assemble_noisy_lmi(&g, r.c_effective * shrink, Margins::default()).unwrap();
        prop_assert!(lower.certify(&r.p, &r.l, r.alpha).unwrap().passes);
    }
}
