mod common;

use common::*;
use ddsat::data::{generate_dataset, saturate, uniform_setpoint_reference, SaturationBounds};
use ddsat::ident::{build_instrument, closed_loop_matrices, compute_products, estimate_open_loop};
use ddsat::sdp::{solve, AffineExpr, SdpProblem, SolveOptions};
use ddsat::sim::{simulate, verify_convergence_bound, LinearSaturatedSystem};
use nalgebra::{DMatrix, DVector};
use proptest::collection::vec;
use proptest::prelude::*;

proptest! {
    #![proptest_config(config(CASES))]

    #[test]
    fn saturation_and_deadzone(case in bounds_and_input()) {
        saturation_identities(case)?;
    }

    #[test]
    fn hankel_blocks_are_samples(case in signal_and_window()) {
        hankel_reconstruction(case)?;
    }

    #[test]
    fn persistence_of_excitation_is_monotone(case in excitation_signal()) {
        pe_monotone(case)?;
    }

    #[test]
    fn ellipsoid_membership_and_boundary(case in ellipsoid_case()) {
        ellipsoid_geometry(case)?;
    }

    #[test]
    fn condition_number_identities(q in spd_matrix()) {
        condition_identities(q)?;
    }
}

fn gain() -> impl Strategy<Value = DMatrix<f64>> {
    vec(-1.0f64..1.0, 9).prop_map(|v| DMatrix::from_vec(3, 3, v))
}

fn state() -> impl Strategy<Value = DVector<f64>> {
    vec(-2.0f64..2.0, 3).prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn noise_free_records_coincide(seed in any::<u64>()) {
        noise_free_outputs(seed)?;
    }

    #[test]
    fn normalization_leaves_the_estimate_unchanged(seed in any::<u64>()) {
        let sys = LinearSaturatedSystem::benchmark();
        let r = uniform_setpoint_reference(3, 300, -1.0, 1.0, seed);
        let d = generate_dataset(&sys, Some(&DMatrix::identity(3, 3)), &r, 0.1, seed, 300).unwrap();
        let a = estimate_open_loop(&compute_products(&d, &build_instrument(&d, true)).unwrap());
        let b = estimate_open_loop(&compute_products(&d, &build_instrument(&d, false)).unwrap());
        prop_assert!((&a.a_hat - &b.a_hat).amax() < 1e-12);
        prop_assert!((&a.b_hat - &b.b_hat).amax() < 1e-12);
    }

    #[test]
    fn closed_loop_input_matrix_is_the_estimate(seed in any::<u64>()) {
        let sys = LinearSaturatedSystem::benchmark();
        let r = uniform_setpoint_reference(3, 200, -1.0, 1.0, seed);
        let d = generate_dataset(&sys, Some(&DMatrix::identity(3, 3)), &r, 0.1, seed, 200).unwrap();
        let p = compute_products(&d, &build_instrument(&d, true)).unwrap();
        prop_assert_eq!(p.b_cl(), &estimate_open_loop(&p).b_hat);
    }

    #[test]
    fn data_representation_predicts_one_step(seed in any::<u64>(), k in gain(), x in state()) {
        let sys = LinearSaturatedSystem::benchmark();
        let r = uniform_setpoint_reference(3, 100, -1.0, 1.0, seed);
        let d = generate_dataset(&sys, Some(&DMatrix::identity(3, 3)), &r, 0.0, seed, 100).unwrap();
        let p = compute_products(&d, &build_instrument(&d, true)).unwrap();
        let g = p.parametrize_gain(&k).unwrap();
        let (a_cl, _) = closed_loop_matrices(&p, &g).unwrap();
        let scale = (1.0f64).min(1.0 / (&k * &x).amax().max(1e-12));
        let x = x * scale;
        let predicted = &a_cl * &x;
        let simulated = sys.a() * &x + sys.b() * saturate(&(&k * &x), sys.bounds()).unwrap();
        prop_assert!((predicted - simulated).amax() < 1e-8);
    }

    #[test]
    fn simulation_recursion_is_exact(k in gain(), x0 in state(), ws in vec(-0.5f64..0.5, 3 * 30)) {
        let sys = LinearSaturatedSystem::benchmark();
        let w = ddsat::data::SignalRecord::new(DMatrix::from_vec(3, 30, ws)).unwrap();
        let tr = match simulate(&sys, &(&k * 0.5 - DMatrix::identity(3, 3)), &x0, Some(&w), 29) {
            Ok(tr) => tr,
            Err(_) => return Ok(()),
        };
        for t in 0..tr.horizon() {
            let x = tr.states.column(t).into_owned();
            let v = tr.saturated.column(t).into_owned();
            prop_assert_eq!(&v, &saturate(&tr.inputs.column(t).into_owned(), sys.bounds()).unwrap());
            let next = sys.a() * &x + sys.b() * &v + tr.disturbance.column(t);
            prop_assert_eq!(next, tr.states.column(t + 1).into_owned());
        }
    }

    #[test]
    fn linear_region_matches_unsaturated_recursion(k in gain(), x0 in state()) {
        let sys = LinearSaturatedSystem::benchmark();
        let k = &k * 0.3 - DMatrix::identity(3, 3) * 0.5;
        let x0 = x0 * 0.2;
        let tr = simulate(&sys, &k, &x0, None, 40).unwrap();
        let unsaturated = tr.inputs.iter().all(|u| u.abs() <= 1.0);
        prop_assume!(unsaturated);
        let acl = sys.a() + sys.b() * &k;
        let mut x = x0.clone();
        for t in 0..=40 {
            prop_assert!((&x - tr.states.column(t)).amax() <= 1e-12 * x.amax().max(1.0));
            x = &acl * &x;
        }
    }

    #[test]
    fn convergence_bound_monotone_in_eta(k in gain(), x0 in state(), eta in 0.3f64..1.0, bump in 0.0f64..0.5) {
        let sys = LinearSaturatedSystem::benchmark();
        let tr = simulate(&sys, &(&k * 0.2 - DMatrix::identity(3, 3) * 0.8), &x0, None, 30).unwrap();
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let eta2 = (eta + bump).min(1.0);
        if verify_convergence_bound(&tr, &q, eta).unwrap().holds {
            prop_assert!(verify_convergence_bound(&tr, &q, eta2).unwrap().holds);
        }
    }
}

proptest! {
    #![proptest_config(config(48))]

    /// Random trace-minimization SDPs: `min tr(C X)` over `X >= a I`, `X <= b I`, `X_00 = c`.
    #[test]
    fn solver_is_deterministic_and_checked_independently(
        n in 1usize..4,
        cdiag in vec(0.1f64..3.0, 3),
        a in 0.1f64..0.5,
        b in 1.0f64..4.0,
        pin in 0.0f64..1.0,
    ) {
        let c = DMatrix::from_diagonal(&DVector::from_vec(cdiag[..n].to_vec()));
        let mut p = SdpProblem::new();
        let x = p.symmetric("X", n);
        p.add_psd("lower", AffineExpr::var(x) - AffineExpr::identity(n).scale(a), 0.0).unwrap();
        p.add_psd("upper", AffineExpr::identity(n).scale(b) - AffineExpr::var(x), 1e-7).unwrap();
        let pinned = a + pin * (b - a) * 0.9;
        let e0 = DMatrix::from_fn(1, n, |_, j| if j == 0 { 1.0 } else { 0.0 });
        p.add_eq(
            "pin",
            AffineExpr::var(x).lmul(&e0).rmul(&e0.transpose()) - AffineExpr::constant(DMatrix::from_element(1, 1, pinned)),
        ).unwrap();
        p.minimize(vec![(x, c.clone())], 0.0).unwrap();
        let opts = SolveOptions::default();
        let s1 = solve(&p, &opts).unwrap();
        let s2 = solve(&p, &opts).unwrap();
        prop_assert_eq!(s1.status, s2.status);
        prop_assert!((s1.objective_value - s2.objective_value).abs() <= 1e-9 * s1.objective_value.abs().max(1.0));
        prop_assert!(s1.status.is_optimal(), "{}", s1.status);
        let expected = c[(0, 0)] * pinned + (1..n).map(|i| c[(i, i)] * a).sum::<f64>();
        prop_assert!((s1.objective_value - expected).abs() < 1e-6 * expected.max(1.0));
        let report = p.evaluate_constraints(&s1.assignment).unwrap();
        prop_assert!(report.feasible(opts.tolerance));
        let upper = report.get("upper").unwrap();
        prop_assert!(upper.slack.unwrap() >= -opts.tolerance * upper.scale);
    }
}

#[test]
fn saturation_bounds_reject_nonpositive() {
    assert!(SaturationBounds::new(vec![1.0, 0.0]).is_err());
    assert!(SaturationBounds::new(vec![]).is_err());
}
