//! Acceptance runner: one PASS/FAIL line per criterion, exit status 1 when
//! any criterion fails. Run with `cargo test --release --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use ddsat::data::{generate_dataset, uniform_setpoint_reference, Dataset};
use ddsat::ident::{build_instrument, compute_products, estimate_open_loop, DataProducts};
use ddsat::sim::{
    simulate, standard_suite, verify_convergence_bound, verify_l2_gain, verify_reachable,
    Ellipsoid, LinearSaturatedSystem, SimError,
};
use ddsat::synth::{
    check_certificate, performance_index, synth_boa, synth_indirect, synth_l2gain, synth_oracle,
    synth_reachable, Certificate, DesignBasis, DesignMode, PerformanceChannel, SynthesisOptions,
    SynthesisProgram, SynthesisResult,
};
use nalgebra::{DMatrix, DVector};
use proptest::strategy::Strategy;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEEDS: u64 = 20;
const T: usize = 6000;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn dataset(noise: f64, seed: u64, t: usize) -> Dataset {
    let sys = LinearSaturatedSystem::benchmark();
    let r = uniform_setpoint_reference(3, t, -1.0, 1.0, seed);
    generate_dataset(&sys, Some(&DMatrix::identity(3, 3)), &r, noise, seed, t).unwrap()
}

fn products(noise: f64, seed: u64, t: usize) -> DataProducts {
    let d = dataset(noise, seed, t);
    compute_products(&d, &build_instrument(&d, true)).unwrap()
}

fn seeds() -> Vec<u64> {
    (1..=SEEDS).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn identification() -> Outcome {
    let sys = LinearSaturatedSystem::benchmark();
    let err =
        |noise, seed, t| estimate_open_loop(&products(noise, seed, t)).error(sys.a(), sys.b());
    let exact = err(0.0, 1, T);
    let short: Vec<f64> = seeds().par_iter().map(|&s| err(0.1, s, 1500)).collect();
    let long: Vec<f64> = seeds().par_iter().map(|&s| err(0.1, s, 24000)).collect();
    let (ms, ml) = (mean(&short), mean(&long));
    Outcome::new(
        exact < 1e-8 && ml < ms,
        format!(
            "noise-free error {exact:.2e} (< 1e-8); mean error T=1500 {ms:.4}, T=24000 {ml:.4}"
        ),
    )
}

fn initial_states(seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    (0..100)
        .map(|_| DVector::from_fn(3, |_, _| rng.random_range(-2.0..=2.0)))
        .collect()
}

struct BasinStats {
    runs: usize,
    converged: usize,
    inside: usize,
    violations: usize,
}

fn basin_runs(sys: &LinearSaturatedSystem, r: &SynthesisResult, seed: u64) -> BasinStats {
    let e = Ellipsoid::new(&r.q, 1.0).unwrap();
    let eta = r.eta.unwrap_or(1.0);
    let mut st = BasinStats {
        runs: 0,
        converged: 0,
        inside: 0,
        violations: 0,
    };
    for x0 in initial_states(seed) {
        st.runs += 1;
        let inside = e.contains(&x0);
        st.inside += inside as usize;
        match simulate(sys, &r.k, &x0, None, 200) {
            Ok(tr) => {
                st.converged += tr.settling_step(1e-2).is_some_and(|k| k <= 60) as usize;
                if inside && !verify_convergence_bound(&tr, &r.q, eta).unwrap().holds {
                    st.violations += 1;
                }
            }
            Err(SimError::Diverged { .. }) => st.violations += inside as usize,
            Err(e) => panic!("{e}"),
        }
    }
    st
}

fn basin_campaign(kappa2: Option<f64>) -> (BasinStats, usize) {
    let sys = LinearSaturatedSystem::benchmark();
    let opts = SynthesisOptions {
        kappa2,
        ..SynthesisOptions::default().with_eta(0.995)
    };
    let per_seed: Vec<(BasinStats, bool)> = seeds()
        .par_iter()
        .map(|&seed| {
            let r = synth_boa(&products(0.1, seed, T), sys.bounds(), &opts).unwrap();
            (basin_runs(&sys, &r, seed), r.is_optimal())
        })
        .collect();
    let mut total = BasinStats {
        runs: 0,
        converged: 0,
        inside: 0,
        violations: 0,
    };
    let mut optimal = 0;
    for (s, ok) in per_seed {
        total.runs += s.runs;
        total.converged += s.converged;
        total.inside += s.inside;
        total.violations += s.violations;
        optimal += ok as usize;
    }
    (total, optimal)
}

fn basin() -> Outcome {
    let (st, optimal) = basin_campaign(None);
    let rate = st.converged as f64 / st.runs as f64;
    Outcome::new(
        rate >= 0.95 && st.violations == 0,
        format!(
            "converged within 60 steps {:.1}% (>= 95%); {} of {} runs start in E(Q,1), {} bound violations; {optimal}/{SEEDS} solves optimal",
            100.0 * rate,
            st.inside,
            st.runs,
            st.violations
        ),
    )
}

fn basin_capped() -> String {
    let (st, optimal) = basin_campaign(Some(1e4));
    format!(
        "with Q <= 1e4 I: converged {:.1}%, {} bound violations, {optimal}/{SEEDS} optimal",
        100.0 * st.converged as f64 / st.runs as f64,
        st.violations
    )
}

type Designs = [Result<SynthesisResult, String>; 2];

/// Direct and indirect basin designs for every seed, with the oracle optimum.
fn direct_indirect(noise: f64, eta: f64) -> (f64, Vec<Designs>) {
    let sys = LinearSaturatedSystem::benchmark();
    let opts = SynthesisOptions::default().with_eta(eta);
    let alpha_star = synth_oracle(
        &sys,
        SynthesisProgram::BasinOfAttraction,
        &opts.clone().with_mode(DesignMode::Oracle),
    )
    .unwrap()
    .alpha()
    .unwrap();
    let rows = seeds()
        .par_iter()
        .map(|&seed| {
            let p = products(noise, seed, T);
            let direct = synth_boa(&p, sys.bounds(), &opts).map_err(|e| e.to_string());
            let indirect = synth_indirect(
                &estimate_open_loop(&p),
                sys.bounds(),
                SynthesisProgram::BasinOfAttraction,
                &opts.clone().with_mode(DesignMode::Indirect),
            )
            .map_err(|e| e.to_string());
            [direct, indirect]
        })
        .collect();
    (alpha_star, rows)
}

fn index_of(r: &Result<SynthesisResult, String>, alpha_star: f64) -> Option<f64> {
    let a = r.as_ref().ok()?.alpha()?;
    performance_index(a, alpha_star).ok()
}

fn oracle_agreement() -> Outcome {
    let (alpha_star, rows) = direct_indirect(0.1, 0.995);
    let mut means = [0.0; 2];
    let mut failed = 0;
    for mode in 0..2 {
        let idx: Vec<f64> = rows
            .iter()
            .filter_map(|r| index_of(&r[mode], alpha_star))
            .collect();
        failed += rows.len() - idx.len();
        means[mode] = if idx.is_empty() {
            f64::INFINITY
        } else {
            mean(&idx)
        };
    }
    Outcome::new(
        failed == 0 && means.iter().all(|&m| m < 5.0),
        format!(
            "alpha* {alpha_star:.2}; mean index direct {:.2}%, indirect {:.2}% (< 5%); {failed} failed solves",
            means[0], means[1]
        ),
    )
}

fn fragility() -> Outcome {
    let (alpha_star, rows) = direct_indirect(1e-5, 1.0);
    let mut flagged = 0;
    let mut ordered = 0;
    let mut bad = Vec::new();
    for (seed, r) in seeds().iter().zip(&rows) {
        let non_optimal = match &r[0] {
            Ok(d) => !d.is_optimal(),
            Err(_) => true,
        };
        let larger = match (index_of(&r[0], alpha_star), index_of(&r[1], alpha_star)) {
            (Some(d), Some(i)) => d >= i,
            _ => false,
        };
        flagged += non_optimal as usize;
        ordered += larger as usize;
        if !(non_optimal || larger) {
            bad.push(*seed);
        }
    }
    Outcome::new(
        bad.is_empty() && rows.len() == SEEDS as usize,
        format!(
            "{} seeds reported; direct non-optimal on {flagged}, direct index >= indirect on {ordered}; seeds meeting neither: {bad:?}",
            rows.len()
        ),
    )
}

fn reachable() -> Outcome {
    let sys = LinearSaturatedSystem::benchmark();
    let opts = SynthesisOptions::default();
    let r = synth_reachable(&products(0.1, 1, T), sys.bounds(), &opts).unwrap();
    let e = Ellipsoid::new(&r.q, r.s).unwrap();
    let suite = standard_suite(3, 300, r.s, 50, 1);
    let rep = verify_reachable(&sys, &r.k, &e, &suite, 300, 1e-6).unwrap();
    Outcome::new(
        suite.len() == 50 && rep.margin() >= -1e-6 && rep.diverged == 0,
        format!(
            "{} ({}); {} signals, worst level {:.6}, margin {:.2e} (>= -1e-6)",
            r.status,
            r.objective.as_str(),
            rep.runs,
            rep.worst_level,
            rep.margin()
        ),
    )
}

fn l2_gain() -> Outcome {
    let sys = LinearSaturatedSystem::benchmark();
    let ch = PerformanceChannel::benchmark();
    let opts = SynthesisOptions::default();
    let per_seed: Vec<(f64, bool, f64)> = seeds()
        .par_iter()
        .map(|&seed| {
            let r = synth_l2gain(&products(0.1, seed, T), sys.bounds(), &ch, &opts).unwrap();
            let g = r.gamma().unwrap();
            let suite = standard_suite(3, 300, r.s, 50, seed);
            let rep = verify_l2_gain(&sys, &r.k, g, r.s, &suite, 300, 1e-6).unwrap();
            (g, rep.holds, rep.max_ratio / g)
        })
        .collect();
    let gammas: Vec<f64> = per_seed.iter().map(|p| p.0).collect();
    let m = mean(&gammas);
    let violations = per_seed.iter().filter(|p| !p.1).count();
    let worst = per_seed.iter().map(|p| p.2).fold(0.0, f64::max);
    Outcome::new(
        (0.61..=1.11).contains(&m) && violations == 0,
        format!("mean gamma {m:.4} (in [0.61, 1.11]); {violations} seeds violate the gain bound; worst |z|/(gamma |w|) {worst:.3}"),
    )
}

fn nesting() -> Outcome {
    let sys = LinearSaturatedSystem::benchmark();
    let ch = PerformanceChannel::benchmark();
    let opts = SynthesisOptions::default();
    let results: Vec<(u64, bool, String)> = (1..=5u64)
        .into_par_iter()
        .map(|seed| {
            let p = products(0.1, seed, T);
            let r = synth_l2gain(&p, sys.bounds(), &ch, &opts).unwrap();
            let basis = DesignBasis::Direct(&p);
            let tol = opts.solver.check_tolerance;
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
            let reach =
                check_certificate(&basis, &r, Certificate::Reachable, opts.epsilon).unwrap();
            let decay =
                check_certificate(&basis, &r, Certificate::Decay { eta: 1.0 }, opts.epsilon)
                    .unwrap();
            let ok = l2.satisfied(tol) && reach.satisfied(tol) && decay.satisfied(tol);
            (
                seed,
                ok,
                format!(
                    "{:.1e}/{:.1e}",
                    reach.slack.unwrap_or(f64::NAN),
                    decay.slack.unwrap_or(f64::NAN)
                ),
            )
        })
        .collect();
    let bad: Vec<u64> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    let slacks: Vec<&str> = results.iter().map(|r| r.2.as_str()).collect();
    Outcome::new(
        bad.is_empty(),
        format!(
            "5 seeds, reachable/decay slacks {}; infeasible on {bad:?}",
            slacks.join(" ")
        ),
    )
}

fn suite<S: Strategy>(
    name: &str,
    strategy: S,
    body: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(CASES)
        .run(&strategy, body)
        .map_err(|e| format!("{name}: {e}"))
}

fn properties() -> Outcome {
    let results = [
        suite("saturation", bounds_and_input(), saturation_identities),
        suite("hankel", signal_and_window(), hankel_reconstruction),
        suite("pe", excitation_signal(), pe_monotone),
        suite("ellipsoid", ellipsoid_case(), ellipsoid_geometry),
        suite("condition", spd_matrix(), condition_identities),
    ];
    let errors: Vec<String> = results.into_iter().filter_map(Result::err).collect();
    Outcome::new(
        errors.is_empty(),
        if errors.is_empty() {
            format!("5 suites x {CASES} cases, seed {SEED:#x}")
        } else {
            errors.join("; ")
        },
    )
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags; listing must not run the campaign.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 identification consistency", identification),
        ("2 basin of attraction", basin),
        ("3 oracle agreement at eta=0.995", oracle_agreement),
        ("4 fragility surfacing at eta=1", fragility),
        ("5 reachable set containment", reachable),
        ("6 l2 gain", l2_gain),
        ("7 certificate nesting", nesting),
        ("8 primitive property suites", properties),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let o = f();
        failed += (!o.pass) as usize;
        println!(
            "{} [{name}] {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        if name.starts_with('2') {
            println!("INFO [2 basin of attraction] {}", basin_capped());
        }
    }
    println!(
        "{} of 8 criteria passed in {:.1}s",
        8 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
