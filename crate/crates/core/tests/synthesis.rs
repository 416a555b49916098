use ddsat::data::{generate_dataset, uniform_setpoint_reference};
use ddsat::ident::{build_instrument, compute_products, estimate_open_loop, DataProducts};
use ddsat::linalg::spectral_radius;
use ddsat::sdp::SolveStatus;
use ddsat::sim::LinearSaturatedSystem;
use ddsat::synth::{
    check_certificate, performance_index, synth_boa, synth_indirect, synth_l2gain, synth_oracle,
    synth_reachable, Certificate, DesignBasis, DesignMode, PerformanceChannel, SynthesisOptions,
    SynthesisProgram,
};
use nalgebra::DMatrix;

// Reference optima of the benchmark computed with an independent
// conic solver on the true model.
const ALPHA_STAR_0995: f64 = 2766.8608;
const GAMMA2_STAR: f64 = 0.77152;

fn products(noise: f64, seed: u64, t: usize) -> DataProducts {
    let sys = LinearSaturatedSystem::benchmark();
    let r = uniform_setpoint_reference(3, t, -1.0, 1.0, seed);
    let d = generate_dataset(&sys, Some(&DMatrix::identity(3, 3)), &r, noise, seed, t).unwrap();
    compute_products(&d, &build_instrument(&d, true)).unwrap()
}

fn boa_options(eta: f64) -> SynthesisOptions {
    SynthesisOptions::default().with_eta(eta)
}

#[test]
fn oracle_basin_matches_reference() {
    let sys = LinearSaturatedSystem::benchmark();
    let r = synth_oracle(
        &sys,
        SynthesisProgram::BasinOfAttraction,
        &boa_options(0.995).with_mode(DesignMode::Oracle),
    )
    .unwrap();
    assert!(r.is_optimal(), "{}", r.status);
    let alpha = r.alpha().unwrap();
    assert!(
        (alpha - ALPHA_STAR_0995).abs() / ALPHA_STAR_0995 < 1e-4,
        "alpha = {alpha}"
    );
    assert!(spectral_radius(&(sys.a() + sys.b() * &r.k)) < 0.995 + 1e-6);
}

#[test]
fn oracle_gain_matches_reference() {
    let sys = LinearSaturatedSystem::benchmark();
    let ch = PerformanceChannel::benchmark();
    let r = synth_oracle(
        &sys,
        SynthesisProgram::L2Gain(&ch),
        &SynthesisOptions::default(),
    )
    .unwrap();
    assert!(r.is_optimal(), "{}", r.status);
    assert!(
        (r.objective_value - GAMMA2_STAR).abs() / GAMMA2_STAR < 1e-3,
        "{}",
        r.objective_value
    );
}

#[test]
fn noise_free_direct_matches_oracle() {
    let p = products(0.0, 1, 600);
    let sys = LinearSaturatedSystem::benchmark();
    let r = synth_boa(&p, sys.bounds(), &boa_options(0.995)).unwrap();
    assert!(r.is_optimal(), "{}", r.status);
    let idx = performance_index(r.alpha().unwrap(), ALPHA_STAR_0995).unwrap();
    assert!(idx < 5.0, "index {idx}");
    assert!(r.consistency_residual.unwrap() < 1e-6);
    let basis = DesignBasis::Direct(&p);
    assert!(r.gain_identity_residual(&basis) <= 1e-8 * r.q.norm());
    assert!(spectral_radius(&(sys.a() + sys.b() * &r.k)) < 0.995 + 1e-6);
    assert!(r.recheck().unwrap().feasible(1e-7));
}

#[test]
fn noisy_direct_and_indirect_basins() {
    let p = products(0.1, 1, 6000);
    let sys = LinearSaturatedSystem::benchmark();
    let direct = synth_boa(&p, sys.bounds(), &boa_options(0.995)).unwrap();
    let est = estimate_open_loop(&p);
    let indirect = synth_indirect(
        &est,
        sys.bounds(),
        SynthesisProgram::BasinOfAttraction,
        &boa_options(0.995).with_mode(DesignMode::Indirect),
    )
    .unwrap();
    println!(
        "direct alpha {} ({}), indirect alpha {} ({})",
        direct.alpha().unwrap(),
        direct.status,
        indirect.alpha().unwrap(),
        indirect.status
    );
    // The slowest open-loop mode of the benchmark sits just above 0.995, so
    // noisy estimates often leave an uncontrolled direction and an
    // unbounded optimal face; the solver then surfaces `inaccurate`.
    for r in [&direct, &indirect] {
        assert!(
            matches!(r.status, SolveStatus::Optimal | SolveStatus::Inaccurate),
            "{}",
            r.status
        );
    }
    let (ad, ai) = (direct.alpha().unwrap(), indirect.alpha().unwrap());
    assert!((ad - ai).abs() / ai < 0.05, "direct {ad} vs indirect {ai}");
}

#[test]
fn basin_alpha_monotone_in_eta() {
    let sys = LinearSaturatedSystem::benchmark();
    let opts = |eta| boa_options(eta).with_mode(DesignMode::Oracle);
    let alphas: Vec<f64> = [1.0, 0.995, 0.98]
        .iter()
        .map(|&eta| {
            synth_oracle(&sys, SynthesisProgram::BasinOfAttraction, &opts(eta))
                .unwrap()
                .alpha()
                .unwrap()
        })
        .collect();
    println!("alphas {alphas:?}");
    assert!(alphas[0] >= alphas[1] * (1.0 - 1e-6));
    assert!(alphas[1] >= alphas[2] * (1.0 - 1e-6));
}

#[test]
fn certificates_nest_on_gain_solution() {
    let p = products(0.1, 2, 6000);
    let sys = LinearSaturatedSystem::benchmark();
    let ch = PerformanceChannel::benchmark();
    let opts = SynthesisOptions::default();
    let r = synth_l2gain(&p, sys.bounds(), &ch, &opts).unwrap();
    let basis = DesignBasis::Direct(&p);
    let l2 = check_certificate(
        &basis,
        &r,
        Certificate::L2Gain {
            channel: &ch,
            gamma2: r.objective_value,
        },
        opts.epsilon,
    )
    .unwrap();
    let reach = check_certificate(&basis, &r, Certificate::Reachable, opts.epsilon).unwrap();
    let decay =
        check_certificate(&basis, &r, Certificate::Decay { eta: 1.0 }, opts.epsilon).unwrap();
    for c in [&l2, &reach, &decay] {
        assert!(c.slack.unwrap() >= -1e-7, "{}: {:?}", c.name, c.slack);
    }
    assert!(reach.slack.unwrap() >= l2.slack.unwrap() - 1e-9);
    assert!(decay.slack.unwrap() >= reach.slack.unwrap() - 1e-9);
}

#[test]
fn zero_channel_gain_vanishes() {
    let sys = LinearSaturatedSystem::benchmark();
    let ch = PerformanceChannel::new(
        DMatrix::zeros(1, 3),
        DMatrix::zeros(1, 3),
        DMatrix::zeros(1, 3),
    )
    .unwrap();
    let r = synth_oracle(
        &sys,
        SynthesisProgram::L2Gain(&ch),
        &SynthesisOptions::default(),
    )
    .unwrap();
    assert!(r.objective_value < 1e-5, "{}", r.objective_value);
}

#[test]
fn feedthrough_channel_gain_at_least_one() {
    let sys = LinearSaturatedSystem::benchmark();
    let ch = PerformanceChannel::new(
        DMatrix::zeros(3, 3),
        DMatrix::zeros(3, 3),
        DMatrix::identity(3, 3),
    )
    .unwrap();
    let r = synth_oracle(
        &sys,
        SynthesisProgram::L2Gain(&ch),
        &SynthesisOptions::default(),
    )
    .unwrap();
    assert!(r.gamma().unwrap() >= 1.0 - 1e-6, "{:?}", r.gamma());
}

#[test]
fn reachable_set_is_invariant_to_energy_rescaling() {
    // Doubling s while doubling every bound leaves the program unchanged.
    let sys = LinearSaturatedSystem::benchmark();
    let scaled = LinearSaturatedSystem::new(
        sys.a().clone(),
        sys.b().clone(),
        ddsat::data::SaturationBounds::uniform(3, 2.0).unwrap(),
    )
    .unwrap();
    let o1 = SynthesisOptions::default();
    let o2 = SynthesisOptions {
        s: 2.0,
        ..SynthesisOptions::default()
    };
    let r1 = synth_oracle(&sys, SynthesisProgram::ReachableSet, &o1).unwrap();
    let r2 = synth_oracle(&scaled, SynthesisProgram::ReachableSet, &o2).unwrap();
    assert!((r1.objective_value - r2.objective_value).abs() < 1e-6 * r1.objective_value.max(1.0));
}

#[test]
fn direct_reachable_feasible_on_benchmark() {
    let p = products(0.1, 3, 6000);
    let sys = LinearSaturatedSystem::benchmark();
    let r = synth_reachable(&p, sys.bounds(), &SynthesisOptions::default()).unwrap();
    assert!(r.is_optimal(), "{}", r.status);
    assert!(r.objective_value > 0.0);
}
