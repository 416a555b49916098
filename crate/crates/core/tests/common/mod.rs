//! Strategies and property bodies shared by `properties.rs` and the
//! acceptance runner.
#![allow(dead_code)]

use ddsat::data::{
    deadzone, generate_dataset, hankel, is_persistently_exciting, saturate,
    uniform_setpoint_reference, SaturationBounds, SignalRecord,
};
use ddsat::linalg::symmetrize;
use ddsat::sim::{condition_number, Ellipsoid, LinearSaturatedSystem};
use nalgebra::{DMatrix, DVector};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{
    Config, FileFailurePersistence, RngAlgorithm, RngSeed, TestCaseError, TestRunner,
};

pub const CASES: u32 = 1000;
pub const SEED: u64 = 0x5eed_0001;

/// Seeded, non-persisting runner configuration.
pub fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(SEED),
        rng_algorithm: RngAlgorithm::ChaCha,
        failure_persistence: Some(Box::new(FileFailurePersistence::Off)),
        ..Config::default()
    }
}

pub fn runner(cases: u32) -> TestRunner {
    TestRunner::new(config(cases))
}

type Check = Result<(), TestCaseError>;

pub fn bounds_and_input() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|n| (vec(0.01f64..10.0, n), vec(-50.0f64..50.0, n)))
}

pub fn saturation_identities((ubar, u): (Vec<f64>, Vec<f64>)) -> Check {
    let b = SaturationBounds::new(ubar.clone()).unwrap();
    let u = DVector::from_vec(u);
    let s = saturate(&u, &b).unwrap();
    prop_assert_eq!(saturate(&s, &b).unwrap(), s.clone(), "idempotence");
    let dz = deadzone(&u, &b).unwrap();
    let back = &s + &dz;
    for j in 0..u.len() {
        if u[j].abs() <= 2.0 * ubar[j] {
            prop_assert_eq!(back[j], u[j], "sat + dz = u");
        } else {
            let ulp = u[j].abs().next_up() - u[j].abs();
            prop_assert!(
                (back[j] - u[j]).abs() <= ulp,
                "sat + dz = u to one rounding"
            );
        }
        prop_assert!(s[j].abs() <= ubar[j]);
        if u[j].abs() <= ubar[j] {
            prop_assert_eq!(dz[j], 0.0);
            prop_assert_eq!(s[j], u[j]);
        } else {
            prop_assert_eq!(s[j].abs(), ubar[j]);
            prop_assert_eq!(dz[j].signum(), u[j].signum());
        }
    }
    Ok(())
}

pub fn signal_and_window() -> impl Strategy<Value = (DMatrix<f64>, usize, usize, usize)> {
    (1usize..4, 2usize..40).prop_flat_map(|(dim, horizon)| {
        let samples = vec(-10.0f64..10.0, dim * (horizon + 1))
            .prop_map(move |v| DMatrix::from_vec(dim, horizon + 1, v));
        (samples, 0..horizon).prop_flat_map(move |(m, k0)| {
            (Just(m), Just(k0), (k0 + 1)..=horizon)
                .prop_flat_map(move |(m, k0, k1)| (Just(m), Just(k0), 1..=(k1 - k0 + 1), Just(k1)))
        })
    })
}

pub fn hankel_reconstruction((m, k0, l, k1): (DMatrix<f64>, usize, usize, usize)) -> Check {
    let v = SignalRecord::new(m).unwrap();
    let h = hankel(&v, k0, l, k1).unwrap();
    prop_assert_eq!(h.ncols(), k1 - k0 + 2 - l);
    prop_assert_eq!(h.entries().nrows(), v.dim() * l);
    for r in 0..l {
        for c in 0..h.ncols() {
            prop_assert_eq!(
                h.block(r, c).into_owned(),
                v.sample(k0 + r + c).into_owned()
            );
        }
    }
    Ok(())
}

/// Random signals, half of them rank-deficient (repeated channel or short).
pub fn excitation_signal() -> impl Strategy<Value = (DMatrix<f64>, usize)> {
    (1usize..3, 4usize..40, any::<bool>(), 1usize..6).prop_flat_map(
        |(dim, horizon, degenerate, order)| {
            vec(-1.0f64..1.0, dim * (horizon + 1)).prop_map(move |v| {
                let mut m = DMatrix::from_vec(dim, horizon + 1, v);
                if degenerate && dim > 1 {
                    let first = m.row(0).into_owned();
                    m.set_row(1, &first);
                }
                (m, order)
            })
        },
    )
}

pub fn pe_monotone((m, order): (DMatrix<f64>, usize)) -> Check {
    let v = SignalRecord::new(m).unwrap();
    let pe = |l| is_persistently_exciting(&v, l).unwrap();
    if order <= v.horizon() && pe(order) {
        for lower in 1..order {
            prop_assert!(pe(lower), "PE of order {} but not {}", order, lower);
        }
    }
    Ok(())
}

/// Symmetric positive definite matrices with condition number up to about 1e4.
pub fn spd_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..5).prop_flat_map(|n| {
        (vec(-1.0f64..1.0, n * n), vec(0.01f64..100.0, n)).prop_map(move |(a, d)| {
            let qr = DMatrix::from_vec(n, n, a).qr();
            let u = qr.q();
            symmetrize(&(&u * DMatrix::from_diagonal(&DVector::from_vec(d)) * u.transpose()))
        })
    })
}

pub fn ellipsoid_geometry((q, level, seed): (DMatrix<f64>, f64, u64)) -> Check {
    let e = Ellipsoid::new(&q, level).unwrap();
    let n = q.nrows();
    prop_assert!(e.contains(&DVector::zeros(n)));
    let qinv = q.clone().try_inverse().unwrap();
    for x in e.boundary_samples(20, seed) {
        let lv = e.normalized_level(&x);
        prop_assert!((lv - 1.0).abs() < 1e-10, "boundary level {}", lv);
        let direct = (x.transpose() * &qinv * &x)[0] / (level * level);
        prop_assert!((direct - 1.0).abs() < 1e-8 * condition_number(&q).unwrap().max(1.0));
        prop_assert!(e.contains(&(&x * 0.999)));
        prop_assert!(!e.contains(&(&x * 1.001)));
    }
    Ok(())
}

pub fn ellipsoid_case() -> impl Strategy<Value = (DMatrix<f64>, f64, u64)> {
    (spd_matrix(), 0.1f64..10.0, any::<u64>())
}

pub fn condition_identities(q: DMatrix<f64>) -> Check {
    let c = condition_number(&q).unwrap();
    prop_assert!(c >= 1.0 - 1e-12);
    let ci = condition_number(&q.clone().try_inverse().unwrap()).unwrap();
    prop_assert!(
        (c - ci).abs() <= 1e-6 * c,
        "c(Q) = {} vs c(Q^-1) = {}",
        c,
        ci
    );
    let cs = condition_number(&(&q * 7.5)).unwrap();
    prop_assert!((c - cs).abs() <= 1e-9 * c, "scale invariance");
    let d = DMatrix::from_diagonal(&q.diagonal().map(|x| x.abs() + 0.5));
    let dd = d.diagonal();
    let expected = dd.max() / dd.min();
    prop_assert!((condition_number(&d).unwrap() - expected).abs() <= 1e-12 * expected);
    Ok(())
}

/// Benchmark dataset without noise: both output records coincide.
pub fn noise_free_outputs(seed: u64) -> Check {
    let sys = LinearSaturatedSystem::benchmark();
    let r = uniform_setpoint_reference(3, 40, -1.0, 1.0, seed);
    let d = generate_dataset(&sys, Some(&DMatrix::identity(3, 3)), &r, 0.0, seed, 40).unwrap();
    prop_assert_eq!(d.y(), d.y_tilde());
    Ok(())
}
