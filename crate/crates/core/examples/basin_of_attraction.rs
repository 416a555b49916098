//! Direct basin-of-attraction design from one noisy experiment, compared with
//! the oracle design on the true plant and checked in closed loop.

use ddsat::data::{generate_dataset, uniform_setpoint_reference};
use ddsat::ident::{build_instrument, compute_products};
use ddsat::linalg::spectral_radius;
use ddsat::sim::{simulate, verify_convergence_bound, Ellipsoid, LinearSaturatedSystem};
use ddsat::synth::{
    performance_index, synth_boa, synth_oracle, DesignMode, SynthesisOptions, SynthesisProgram,
};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = LinearSaturatedSystem::benchmark();
    let eta = 0.995;
    let opts = SynthesisOptions::default().with_eta(eta);

    let oracle = synth_oracle(
        &sys,
        SynthesisProgram::BasinOfAttraction,
        &opts.clone().with_mode(DesignMode::Oracle),
    )?;
    let alpha_star = oracle.alpha().unwrap();
    println!("oracle: alpha* = {alpha_star:.2} ({})", oracle.status);

    let r = uniform_setpoint_reference(3, 6000, -1.0, 1.0, 2);
    let d = generate_dataset(&sys, Some(&DMatrix::identity(3, 3)), &r, 0.1, 2, 6000)?;
    let p = compute_products(&d, &build_instrument(&d, true))?;
    // Pass a cap through `kappa2` to keep Q bounded when the data leave a
    // mode that needs no control at this eta.
    let direct = synth_boa(&p, sys.bounds(), &opts)?;
    let alpha = direct.alpha().unwrap();
    println!(
        "direct: alpha = {alpha:.2} ({}), index {:.1}%, consistency residual {:.1e}",
        direct.status,
        performance_index(alpha, alpha_star)?,
        direct.consistency_residual.unwrap()
    );
    println!("K = {:.4}", direct.k);
    println!(
        "true closed-loop spectral radius {:.4}",
        spectral_radius(&(sys.a() + sys.b() * &direct.k))
    );

    for (name, res) in [("oracle", &oracle), ("direct", &direct)] {
        let e = Ellipsoid::new(&res.q, 1.0)?;
        let x0 = DVector::from_vec(vec![2.0, -1.5, 1.0]);
        let tr = simulate(&sys, &res.k, &x0, None, 400)?;
        let bound = verify_convergence_bound(&tr, &res.q, eta)?;
        println!(
            "{name}: x0 inside E(Q,1): {}, |x| < 1e-2 from step {:?}, decay bound holds: {}",
            e.contains(&x0),
            tr.settling_step(1e-2),
            bound.holds
        );
    }
    Ok(())
}
