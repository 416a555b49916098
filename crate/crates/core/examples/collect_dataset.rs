//! One excitation experiment on the benchmark plant, saved and read back.
//!
//! `cargo run --example collect_dataset -- [path.csv]`

use ddsat::data::{
    generate_dataset, is_persistently_exciting, read_dataset, uniform_setpoint_reference,
    write_dataset, Dataset,
};
use ddsat::sim::LinearSaturatedSystem;
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = LinearSaturatedSystem::benchmark();
    let (t, seed, noise) = (6000, 1, 0.1);
    println!(
        "minimum admissible T = {}",
        Dataset::min_horizon(sys.nx(), sys.nu())
    );

    // u = K (r - x) with K = I and r redrawn uniformly in [-1, 1] every sample.
    let r = uniform_setpoint_reference(sys.nu(), t, -1.0, 1.0, seed);
    let d = generate_dataset(&sys, Some(&DMatrix::identity(3, 3)), &r, noise, seed, t)?;
    let diag = d.diagnostics(sys.bounds());
    println!(
        "SNR {:.2} dB, {:.1}% of inputs saturated",
        diag.snr_db,
        100.0 * diag.saturation_hit_ratio
    );
    println!(
        "persistently exciting of order nx+1: {}",
        is_persistently_exciting(d.v(), sys.nx() + 1)?
    );

    let dir = tempfile::tempdir()?;
    let path = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| dir.path().join("seed_0001.csv"));
    write_dataset(&d, &path)?;
    let back = read_dataset(&path)?;
    assert_eq!(back.dataset, d);
    println!(
        "wrote and re-read {} ({} samples)",
        path.display(),
        d.horizon() + 1
    );
    Ok(())
}
