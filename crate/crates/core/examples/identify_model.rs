//! Instrumental-variable estimate of (A, B) and how its error shrinks with T.

use ddsat::data::{generate_dataset, uniform_setpoint_reference};
use ddsat::ident::{build_instrument, compute_products, estimate_open_loop};
use ddsat::sim::LinearSaturatedSystem;
use nalgebra::DMatrix;

fn error(
    sys: &LinearSaturatedSystem,
    noise: f64,
    t: usize,
    seed: u64,
) -> Result<f64, Box<dyn std::error::Error>> {
    let r = uniform_setpoint_reference(3, t, -1.0, 1.0, seed);
    let d = generate_dataset(sys, Some(&DMatrix::identity(3, 3)), &r, noise, seed, t)?;
    let p = compute_products(&d, &build_instrument(&d, true))?;
    Ok(estimate_open_loop(&p).error(sys.a(), sys.b()))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = LinearSaturatedSystem::benchmark();
    println!(
        "noise-free, T=6000: |[B^ A^] - [B A]|_F = {:.2e}",
        error(&sys, 0.0, 6000, 1)?
    );
    for t in [1500, 6000, 24000] {
        let errs: Vec<f64> = (1..=10)
            .map(|s| error(&sys, 0.1, t, s))
            .collect::<Result<_, _>>()?;
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        println!("sigma=0.1, T={t:>5}: mean error over 10 seeds {mean:.4}");
    }
    Ok(())
}
