//! Matrix-inequality builders shared by the direct and model-based designs.
//!
//! Every builder works on a [`DesignBasis`], which supplies the two
//! products that differ between designs: the gain term `K Q` and the
//! closed-loop term `(A + B K) Q`.

use nalgebra::DMatrix;

use super::{PerformanceChannel, SynthError};
use crate::data::SaturationBounds;
use crate::ident::{DataProducts, EstimatedModel};
use crate::sdp::{AffineExpr, BlockGrid, ConstraintId, SdpProblem, VarRef};

use super::options::DesignMode;

#[derive(Debug, Clone, Copy)]
pub enum DesignBasis<'a> {
    /// `K Q = VZ F`, `(A + B K) Q = YZ F`, `B = B_cl`.
    Direct(&'a DataProducts),
    /// `K Q = Y`, `(A + B K) Q = A_hat Q + B_hat Y`.
    Indirect(&'a EstimatedModel),
    /// As `Indirect` with the true matrices.
    Oracle {
        a: &'a DMatrix<f64>,
        b: &'a DMatrix<f64>,
    },
}

impl<'a> DesignBasis<'a> {
    pub fn mode(&self) -> DesignMode {
        match self {
            DesignBasis::Direct(_) => DesignMode::Direct,
            DesignBasis::Indirect(_) => DesignMode::Indirect,
            DesignBasis::Oracle { .. } => DesignMode::Oracle,
        }
    }

    pub fn nx(&self) -> usize {
        match self {
            DesignBasis::Direct(p) => p.nx(),
            DesignBasis::Indirect(m) => m.a_hat.nrows(),
            DesignBasis::Oracle { a, .. } => a.nrows(),
        }
    }

    pub fn nu(&self) -> usize {
        match self {
            DesignBasis::Direct(p) => p.nu(),
            DesignBasis::Indirect(m) => m.b_hat.ncols(),
            DesignBasis::Oracle { b, .. } => b.ncols(),
        }
    }

    /// Input matrix of the closed loop.
    pub fn b_cl(&self) -> &'a DMatrix<f64> {
        match *self {
            DesignBasis::Direct(p) => p.b_cl(),
            DesignBasis::Indirect(m) => &m.b_hat,
            DesignBasis::Oracle { b, .. } => b,
        }
    }

    /// Shape of the lifted variable: `F` for direct designs, `Y = K Q` otherwise.
    pub fn lift_shape(&self) -> (usize, usize) {
        match self {
            DesignBasis::Direct(_) => (self.nu() + self.nx(), self.nx()),
            _ => (self.nu(), self.nx()),
        }
    }

    pub fn lift_name(&self) -> &'static str {
        match self {
            DesignBasis::Direct(_) => "F",
            _ => "Y",
        }
    }

    fn check(&self) -> Result<(), SynthError> {
        let nx = self.nx();
        let (a, b) = match *self {
            DesignBasis::Direct(_) => return Ok(()),
            DesignBasis::Indirect(m) => (&m.a_hat, &m.b_hat),
            DesignBasis::Oracle { a, b } => (a, b),
        };
        if a.shape() != (nx, nx) || b.nrows() != nx {
            return Err(SynthError::Dimension(format!(
                "model matrices A {:?}, B {:?} are inconsistent",
                a.shape(),
                b.shape()
            )));
        }
        Ok(())
    }

    /// `K Q` as an affine expression of the lifted variable.
    pub fn gain_term(&self, vars: &LmiVariables) -> AffineExpr {
        match self {
            DesignBasis::Direct(p) => AffineExpr::var(vars.lift).lmul(p.vz()),
            _ => AffineExpr::var(vars.lift),
        }
    }

    /// `(A + B K) Q` as an affine expression.
    pub fn closed_loop_term(&self, vars: &LmiVariables) -> AffineExpr {
        match *self {
            DesignBasis::Direct(p) => AffineExpr::var(vars.lift).lmul(p.yz()),
            DesignBasis::Indirect(m) => {
                AffineExpr::var(vars.q).lmul(&m.a_hat) + AffineExpr::var(vars.lift).lmul(&m.b_hat)
            }
            DesignBasis::Oracle { a, b } => {
                AffineExpr::var(vars.q).lmul(a) + AffineExpr::var(vars.lift).lmul(b)
            }
        }
    }

    /// Value of `K Q` at a lifted-variable value.
    pub fn gain_value(&self, lift: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            DesignBasis::Direct(p) => p.vz() * lift,
            _ => lift.clone(),
        }
    }
}

/// Decision variables common to all three programs.
#[derive(Debug, Clone, Copy)]
pub struct LmiVariables {
    pub q: VarRef,
    pub n: VarRef,
    pub m: VarRef,
    /// `F` or `Y`, depending on the basis.
    pub lift: VarRef,
}

impl LmiVariables {
    pub fn declare(problem: &mut SdpProblem, basis: &DesignBasis<'_>) -> Result<Self, SynthError> {
        basis.check()?;
        let (nx, nu) = (basis.nx(), basis.nu());
        let q = problem.symmetric("Q", nx);
        let n = problem.rectangular("N", nu, nx);
        let m = problem.diagonal("M", nu);
        let (lr, lc) = basis.lift_shape();
        let lift = problem.rectangular(basis.lift_name(), lr, lc);
        Ok(Self { q, n, m, lift })
    }
}

fn row_selector(j: usize, n: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(1, n);
    e[(0, j)] = 1.0;
    e
}

/// `[[Q, N_j'], [N_j, ubar_j^2 / s^2]] >= margin I` for every input channel.
pub fn build_saturation_lmis(
    problem: &mut SdpProblem,
    vars: &LmiVariables,
    bounds: &SaturationBounds,
    s: f64,
    margin: f64,
) -> Result<Vec<ConstraintId>, SynthError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(SynthError::InvalidOptions(format!(
            "saturation constraints need s > 0, got {s}"
        )));
    }
    let nu = vars.n.rows;
    if bounds.channels() != nu {
        return Err(SynthError::Dimension(format!(
            "{} saturation bounds for {nu} inputs",
            bounds.channels()
        )));
    }
    let nx = vars.q.rows;
    let mut ids = Vec::with_capacity(nu);
    for j in 0..nu {
        let ub = bounds.get(j);
        let mut grid = BlockGrid::new(&[nx, 1]);
        grid.set(0, 0, AffineExpr::var(vars.q))?;
        grid.set(1, 0, AffineExpr::var(vars.n).lmul(&row_selector(j, nu)))?;
        grid.set(
            1,
            1,
            AffineExpr::constant(DMatrix::from_element(1, 1, ub * ub / (s * s))),
        )?;
        ids.push(problem.add_psd(&format!("saturation[{j}]"), grid.symmetric(), margin)?);
    }
    Ok(ids)
}

fn check_eta(eta: f64) -> Result<(), SynthError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(SynthError::InvalidOptions(format!(
            "eta must lie in (0, 1], got {eta}"
        )));
    }
    Ok(())
}

/// Decay-rate LMI: `He` of the lower block grid with diagonal
/// `(-eta/2 Q, -M, -eta/2 Q)` is `<= -margin I`.
pub fn build_boa_lmi(
    problem: &mut SdpProblem,
    basis: &DesignBasis<'_>,
    vars: &LmiVariables,
    eta: f64,
    margin: f64,
) -> Result<ConstraintId, SynthError> {
    check_eta(eta)?;
    let (nx, nu) = (basis.nx(), basis.nu());
    let q = AffineExpr::var(vars.q);
    let bm = AffineExpr::var(vars.m).lmul(basis.b_cl());
    let mut grid = BlockGrid::new(&[nx, nu, nx]);
    grid.set(0, 0, q.clone().scale(-eta / 2.0))?;
    grid.set(1, 0, basis.gain_term(vars) + AffineExpr::var(vars.n))?;
    grid.set(1, 1, -AffineExpr::var(vars.m))?;
    grid.set(2, 0, basis.closed_loop_term(vars))?;
    grid.set(2, 1, -bm)?;
    grid.set(2, 2, q.scale(-eta / 2.0))?;
    Ok(problem.add_he_block_inequality("decay", &grid, margin)?)
}

/// `Y_{0,T-1} Z' F = Q`, tying the lifted variable to the data.
pub fn build_consistency_equalities(
    problem: &mut SdpProblem,
    products: &DataProducts,
    vars: &LmiVariables,
) -> Result<ConstraintId, SynthError> {
    let expected = (products.nu() + products.nx(), products.nx());
    if (vars.lift.rows, vars.lift.cols) != expected {
        return Err(SynthError::Dimension(format!(
            "F must be {}x{}",
            expected.0, expected.1
        )));
    }
    let expr = AffineExpr::var(vars.lift).lmul(products.y0z()) - AffineExpr::var(vars.q);
    Ok(problem.add_eq("consistency", expr)?)
}

/// Reachable-set LMI with an identity disturbance input.
pub fn build_reachable_lmi(
    problem: &mut SdpProblem,
    basis: &DesignBasis<'_>,
    vars: &LmiVariables,
    margin: f64,
) -> Result<ConstraintId, SynthError> {
    let (nx, nu) = (basis.nx(), basis.nu());
    let q = AffineExpr::var(vars.q);
    let mut grid = BlockGrid::new(&[nx, nu, nx, nx]);
    grid.set(0, 0, q.clone().scale(-0.5))?;
    grid.set(1, 0, basis.gain_term(vars) + AffineExpr::var(vars.n))?;
    grid.set(1, 1, -AffineExpr::var(vars.m))?;
    grid.set(2, 2, AffineExpr::identity(nx).scale(-0.5))?;
    grid.set(3, 0, basis.closed_loop_term(vars))?;
    grid.set(3, 1, -AffineExpr::var(vars.m).lmul(basis.b_cl()))?;
    grid.set(3, 2, AffineExpr::identity(nx))?;
    grid.set(3, 3, q.scale(-0.5))?;
    Ok(problem.add_he_block_inequality("reachable", &grid, margin)?)
}

/// Gain LMI for `z = C x + D_u v + D_w w` with `gamma2` a scalar variable.
pub fn build_l2_lmi(
    problem: &mut SdpProblem,
    basis: &DesignBasis<'_>,
    channel: &PerformanceChannel,
    vars: &LmiVariables,
    gamma2: VarRef,
    margin: f64,
) -> Result<ConstraintId, SynthError> {
    let (nx, nu) = (basis.nx(), basis.nu());
    if channel.nx() != nx || channel.nu() != nu || channel.nw() != nx {
        return Err(SynthError::Dimension(format!(
            "channel expects nx={}, nu={}, nw={} but the design has nx={nx}, nu={nu}",
            channel.nx(),
            channel.nu(),
            channel.nw()
        )));
    }
    let nz = channel.nz();
    let q = AffineExpr::var(vars.q);
    let mut grid = BlockGrid::new(&[nx, nu, nx, nz, nx]);
    grid.set(0, 0, q.clone().scale(-0.5))?;
    grid.set(1, 0, basis.gain_term(vars) + AffineExpr::var(vars.n))?;
    grid.set(1, 1, -AffineExpr::var(vars.m))?;
    grid.set(2, 2, AffineExpr::identity(nx).scale(-0.5))?;
    grid.set(
        3,
        0,
        q.clone().lmul(channel.c()) + basis.gain_term(vars).lmul(channel.d_u()),
    )?;
    grid.set(3, 1, -AffineExpr::var(vars.m).lmul(channel.d_u()))?;
    grid.set(3, 2, AffineExpr::constant(channel.d_w().clone()))?;
    grid.set(3, 3, AffineExpr::scalar_identity(gamma2, nz).scale(-0.5))?;
    grid.set(4, 0, basis.closed_loop_term(vars))?;
    grid.set(4, 1, -AffineExpr::var(vars.m).lmul(basis.b_cl()))?;
    grid.set(4, 2, AffineExpr::identity(nx))?;
    grid.set(4, 4, q.scale(-0.5))?;
    Ok(problem.add_he_block_inequality("l2_gain", &grid, margin)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::Assignment;

    fn scalar_model(a: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        (
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, 1.0),
        )
    }

    #[test]
    fn zero_n_reduces_saturation_to_positivity() {
        let (a, b) = scalar_model(0.5);
        let basis = DesignBasis::Oracle { a: &a, b: &b };
        let mut p = SdpProblem::new();
        let v = LmiVariables::declare(&mut p, &basis).unwrap();
        let bounds = SaturationBounds::uniform(1, 1.0).unwrap();
        let ids = build_saturation_lmis(&mut p, &v, &bounds, 1.0, 0.0).unwrap();
        assert_eq!(ids.len(), 1);
        let mut asg = Assignment::new();
        asg.set(v.q, DMatrix::from_element(1, 1, 0.3)).unwrap();
        asg.set(v.n, DMatrix::zeros(1, 1)).unwrap();
        let r = p.evaluate_constraints(&asg).unwrap();
        assert!((r.min_slack - 0.3).abs() < 1e-12);
        asg.set(v.q, DMatrix::from_element(1, 1, -0.3)).unwrap();
        assert!(!p.evaluate_constraints(&asg).unwrap().feasible(1e-12));
    }

    #[test]
    fn benchmark_installs_one_block_per_channel() {
        let a = DMatrix::identity(3, 3);
        let b = DMatrix::identity(3, 3);
        let basis = DesignBasis::Oracle { a: &a, b: &b };
        let mut p = SdpProblem::new();
        let v = LmiVariables::declare(&mut p, &basis).unwrap();
        let bounds = SaturationBounds::uniform(3, 1.0).unwrap();
        assert_eq!(
            build_saturation_lmis(&mut p, &v, &bounds, 1.0, 1e-7)
                .unwrap()
                .len(),
            3
        );
        assert!(build_saturation_lmis(&mut p, &v, &bounds, 0.0, 1e-7).is_err());
        assert!(build_saturation_lmis(
            &mut p,
            &v,
            &SaturationBounds::uniform(2, 1.0).unwrap(),
            1.0,
            0.0
        )
        .is_err());
    }

    #[test]
    fn eta_zero_rejected() {
        let (a, b) = scalar_model(0.5);
        let basis = DesignBasis::Oracle { a: &a, b: &b };
        let mut p = SdpProblem::new();
        let v = LmiVariables::declare(&mut p, &basis).unwrap();
        assert!(build_boa_lmi(&mut p, &basis, &v, 0.0, 0.0).is_err());
        assert!(build_boa_lmi(&mut p, &basis, &v, 1.0, 0.0).is_ok());
    }

    #[test]
    fn decay_lmi_matches_explicit_matrix() {
        // scalar: K = -0.2, Q = 2, N = 0.1, M = 0.5, eta = 0.9, A = 0.5, B = 1
        let (a, b) = scalar_model(0.5);
        let basis = DesignBasis::Oracle { a: &a, b: &b };
        let mut p = SdpProblem::new();
        let v = LmiVariables::declare(&mut p, &basis).unwrap();
        let id = build_boa_lmi(&mut p, &basis, &v, 0.9, 0.0).unwrap();
        let (q, k, n, m, eta) = (2.0, -0.2, 0.1, 0.5, 0.9);
        let mut asg = Assignment::new();
        asg.set(v.q, DMatrix::from_element(1, 1, q)).unwrap();
        asg.set(v.lift, DMatrix::from_element(1, 1, k * q)).unwrap();
        asg.set(v.n, DMatrix::from_element(1, 1, n)).unwrap();
        asg.set(v.m, DMatrix::from_element(1, 1, m)).unwrap();
        let value = p.constraint(id).expr.evaluate_with(|x| asg.get(x)).unwrap();
        let acl = (0.5 + k) * q;
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                -eta * q,
                k * q + n,
                acl,
                k * q + n,
                -2.0 * m,
                -m,
                acl,
                -m,
                -eta * q,
            ],
        );
        assert!((value - expected).norm() < 1e-12);
    }

    #[test]
    fn consistency_holds_for_parametrized_gain() {
        use crate::data::{generate_dataset, uniform_setpoint_reference};
        use crate::ident::{build_instrument, compute_products};
        use crate::sim::LinearSaturatedSystem;
        let sys = LinearSaturatedSystem::benchmark();
        let r = uniform_setpoint_reference(3, 200, -1.0, 1.0, 5);
        let d = generate_dataset(&sys, Some(&DMatrix::identity(3, 3)), &r, 0.1, 5, 200).unwrap();
        let prod = compute_products(&d, &build_instrument(&d, true)).unwrap();
        let basis = DesignBasis::Direct(&prod);
        let mut p = SdpProblem::new();
        let v = LmiVariables::declare(&mut p, &basis).unwrap();
        build_consistency_equalities(&mut p, &prod, &v).unwrap();
        let k = DMatrix::from_row_slice(3, 3, &[-0.5, 0.1, 0.0, 0.0, -0.4, 0.2, 0.3, 0.0, -0.6]);
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.5, 0.0, 0.1, 0.0, 1.0]);
        let f = prod.parametrize_gain(&k).unwrap() * &q;
        let mut asg = Assignment::new();
        asg.set(v.q, q.clone()).unwrap();
        asg.set(v.lift, f).unwrap();
        assert!(p.evaluate_constraints(&asg).unwrap().max_eq_violation < 1e-9);
        asg.set(v.lift, DMatrix::zeros(6, 3)).unwrap();
        assert!(p.evaluate_constraints(&asg).unwrap().max_eq_violation > 0.5);
    }
}
