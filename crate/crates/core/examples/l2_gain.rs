//! Minimum l2-gain design for the benchmark performance output and an
//! empirical check of `|z|_2 <= gamma |w|_2`.

use ddsat::data::{generate_dataset, uniform_setpoint_reference};
use ddsat::ident::{build_instrument, compute_products};
use ddsat::sim::{standard_suite, verify_l2_gain, LinearSaturatedSystem};
use ddsat::synth::{
    synth_l2gain, synth_oracle, DesignMode, PerformanceChannel, SynthesisOptions, SynthesisProgram,
};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = LinearSaturatedSystem::benchmark();
    let ch = PerformanceChannel::benchmark();
    let opts = SynthesisOptions::default();
    let oracle = synth_oracle(
        &sys,
        SynthesisProgram::L2Gain(&ch),
        &opts.clone().with_mode(DesignMode::Oracle),
    )?;
    println!("oracle gamma = {:.4}", oracle.gamma().unwrap());

    let mut gammas = Vec::new();
    for seed in 1..=5 {
        let r = uniform_setpoint_reference(3, 6000, -1.0, 1.0, seed);
        let d = generate_dataset(&sys, Some(&DMatrix::identity(3, 3)), &r, 0.1, seed, 6000)?;
        let p = compute_products(&d, &build_instrument(&d, true))?;
        let res = synth_l2gain(&p, sys.bounds(), &ch, &opts)?;
        let gamma = res.gamma().unwrap();
        let rep = verify_l2_gain(
            &sys,
            &res.k,
            gamma,
            res.s,
            &standard_suite(3, 300, res.s, 50, seed),
            300,
            1e-6,
        )?;
        println!(
            "seed {seed}: gamma = {gamma:.4} ({}), empirical max |z|/|w| = {:.4}, holds: {}",
            res.status, rep.max_ratio, rep.holds
        );
        gammas.push(gamma);
    }
    println!(
        "mean gamma {:.4}",
        gammas.iter().sum::<f64>() / gammas.len() as f64
    );
    Ok(())
}
