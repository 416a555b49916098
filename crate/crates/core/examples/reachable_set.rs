//! Smallest ellipsoid bounding the states reachable with `|w|_2 <= s`,
//! designed from data and tested against a suite of disturbances.

use ddsat::data::{generate_dataset, uniform_setpoint_reference};
use ddsat::ident::{build_instrument, compute_products};
use ddsat::sim::{standard_suite, verify_reachable, Ellipsoid, LinearSaturatedSystem};
use ddsat::synth::{synth_reachable, SynthesisOptions};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = LinearSaturatedSystem::benchmark();
    let r = uniform_setpoint_reference(3, 6000, -1.0, 1.0, 3);
    let d = generate_dataset(&sys, Some(&DMatrix::identity(3, 3)), &r, 0.1, 3, 6000)?;
    let p = compute_products(&d, &build_instrument(&d, true))?;

    for s in [0.5, 1.0] {
        let opts = SynthesisOptions {
            s,
            ..SynthesisOptions::default()
        };
        let res = synth_reachable(&p, sys.bounds(), &opts)?;
        let e = Ellipsoid::new(&res.q, s)?;
        let suite = standard_suite(3, 300, s, 50, 3);
        let rep = verify_reachable(&sys, &res.k, &e, &suite, 300, 1e-6)?;
        println!(
            "s = {s}: trace(Q) = {:.4} ({}), worst level over {} runs {:.4}, inside: {}",
            res.objective_value, res.status, rep.runs, rep.worst_level, rep.holds
        );
    }
    Ok(())
}
