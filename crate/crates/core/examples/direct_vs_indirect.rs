//! Direct design on data products against certainty-equivalence design on
//! the identified model, both scored by the performance index against the oracle.

use ddsat::data::{generate_dataset, uniform_setpoint_reference};
use ddsat::ident::{build_instrument, compute_products, estimate_open_loop};
use ddsat::sim::LinearSaturatedSystem;
use ddsat::synth::{
    performance_index, synth_boa, synth_indirect, synth_oracle, DesignMode, SynthesisOptions,
    SynthesisProgram,
};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = LinearSaturatedSystem::benchmark();
    for (eta, noise) in [(0.995, 0.1), (1.0, 1e-5)] {
        let opts = SynthesisOptions::default().with_eta(eta);
        let star = synth_oracle(
            &sys,
            SynthesisProgram::BasinOfAttraction,
            &opts.clone().with_mode(DesignMode::Oracle),
        )?
        .alpha()
        .unwrap();
        println!("eta = {eta}, sigma = {noise:e}: alpha* = {star:.2}");
        for seed in 1..=5 {
            let r = uniform_setpoint_reference(3, 6000, -1.0, 1.0, seed);
            let d = generate_dataset(&sys, Some(&DMatrix::identity(3, 3)), &r, noise, seed, 6000)?;
            let p = compute_products(&d, &build_instrument(&d, true))?;
            let direct = synth_boa(&p, sys.bounds(), &opts)?;
            let indirect = synth_indirect(
                &estimate_open_loop(&p),
                sys.bounds(),
                SynthesisProgram::BasinOfAttraction,
                &opts.clone().with_mode(DesignMode::Indirect),
            )?;
            let idx = |r: &ddsat::synth::SynthesisResult| {
                performance_index(r.alpha().unwrap(), star).unwrap()
            };
            println!(
                "  seed {seed}: direct {:6.2}% ({:<10}) indirect {:6.2}% ({})",
                idx(&direct),
                direct.status.to_string(),
                idx(&indirect),
                indirect.status
            );
        }
    }
    Ok(())
}
