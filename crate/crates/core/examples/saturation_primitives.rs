//! Saturation, dead-zone, the sector condition they satisfy, and ellipsoid geometry.

use ddsat::data::{deadzone, saturate, SaturationBounds};
use ddsat::sim::{condition_number, Ellipsoid};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bounds = SaturationBounds::new(vec![1.0, 0.5, 2.0])?;
    let u = DVector::from_vec(vec![1.7, -0.2, -3.0]);
    let v = saturate(&u, &bounds)?;
    let dz = deadzone(&u, &bounds)?;
    println!("u       = {:?}", u.as_slice());
    println!("sat(u)  = {:?}", v.as_slice());
    println!("dz(u)   = {:?}", dz.as_slice());
    assert_eq!(&v + &dz, u);

    // dz(u)' W (u - dz(u) + H x) >= 0 whenever |H x| stays inside the bounds.
    let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5]);
    let e = Ellipsoid::new(&q, 1.0)?;
    let h = DMatrix::from_row_slice(3, 3, &[0.4, 0.0, 0.1, 0.0, 0.3, 0.0, 0.2, 0.0, 1.0]) * 0.5;
    let w = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 0.5]));
    let mut checked = 0;
    for x in e.boundary_samples(1000, 7) {
        let hx = &h * &x;
        if deadzone(&hx, &bounds)?.amax() > 0.0 {
            continue;
        }
        let sector = dz.dot(&(&w * (&u - &dz + &hx)));
        assert!(sector >= -1e-12, "sector condition violated: {sector}");
        checked += 1;
    }
    println!("sector condition held on {checked} boundary points of E(Q, 1)");

    println!(
        "c(Q) = {:.4}, c(Q^-1) = {:.4}",
        condition_number(&q)?,
        condition_number(&q.clone().try_inverse().unwrap())?
    );
    println!("x = 0 inside: {}", e.contains(&DVector::zeros(3)));
    Ok(())
}
