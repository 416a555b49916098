//! Posing and solving a small LMI program directly with the `sdp` module:
//! the minimum-trace Lyapunov matrix `P >= I`, `A' P A - P <= -I`.

use ddsat::linalg::max_eigenvalue;
use ddsat::sdp::{solve, write_sdpa, AffineExpr, SdpProblem, SolveOptions};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = DMatrix::from_row_slice(2, 2, &[0.9, 0.2, -0.1, 0.7]);
    let mut p = SdpProblem::new();
    let pv = p.symmetric("P", 2);
    p.add_psd("P >= I", AffineExpr::var(pv) - AffineExpr::identity(2), 0.0)?;
    let decrease = AffineExpr::var(pv).lmul(&a.transpose()).rmul(&a) - AffineExpr::var(pv)
        + AffineExpr::identity(2);
    p.add_nsd("lyapunov", decrease, 0.0)?;
    p.minimize(vec![(pv, DMatrix::identity(2, 2))], 0.0)?;

    let sol = solve(&p, &SolveOptions::default())?;
    let pm = sol.assignment.value(pv);
    println!(
        "status {} after {} iterations, trace(P) = {:.6}",
        sol.status, sol.iterations, sol.objective_value
    );
    println!("P = {pm:.6}");
    let lhs = a.transpose() * pm * &a - pm;
    println!("max eig(A' P A - P) = {:.6}", max_eigenvalue(&lhs));
    for c in &sol.residuals.constraints {
        println!(
            "  {:<10} slack {:+.3e}",
            c.name,
            c.slack.unwrap_or(f64::NAN)
        );
    }

    let mut buf = Vec::new();
    write_sdpa(&p, &mut buf)?;
    println!("SDPA form:\n{}", String::from_utf8(buf)?);
    Ok(())
}
