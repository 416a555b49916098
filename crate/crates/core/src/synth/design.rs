use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lmi::{
    build_boa_lmi, build_consistency_equalities, build_l2_lmi, build_reachable_lmi,
    build_saturation_lmis, DesignBasis, LmiVariables,
};
use super::options::{DesignMode, SynthesisOptions};
use super::{PerformanceChannel, SynthError};
use crate::data::SaturationBounds;
use crate::ident::{DataProducts, EstimatedModel};
use crate::linalg::serde_matrix;
use crate::sdp::{
    solve, AffineExpr, Assignment, ConstraintResidual, ResidualReport, SdpProblem, SolveStatus,
};
use crate::sim::LinearSaturatedSystem;

/// Quantity optimized by a program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Maximized lower bound `alpha I <= Q` on the basin estimate.
    Alpha,
    /// Minimized `trace(Q)` of the reachable-set bound.
    TraceQ,
    /// Minimized squared gain bound `gamma^2`.
    Gamma2,
}

impl ObjectiveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveKind::Alpha => "alpha",
            ObjectiveKind::TraceQ => "trace_q",
            ObjectiveKind::Gamma2 => "gamma2",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum SynthesisProgram<'a> {
    /// Largest certified basin of attraction at decay rate `eta`.
    BasinOfAttraction,
    /// Smallest ellipsoid containing the reachable set for `|w|_2 <= s`.
    ReachableSet,
    /// Smallest `l2` gain bound from `w` to the channel output.
    L2Gain(&'a PerformanceChannel),
}

impl SynthesisProgram<'_> {
    pub fn objective(&self) -> ObjectiveKind {
        match self {
            SynthesisProgram::BasinOfAttraction => ObjectiveKind::Alpha,
            SynthesisProgram::ReachableSet => ObjectiveKind::TraceQ,
            SynthesisProgram::L2Gain(_) => ObjectiveKind::Gamma2,
        }
    }
}

/// Synthesized gain together with its certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub mode: DesignMode,
    pub objective: ObjectiveKind,
    /// `alpha`, `trace(Q)` or `gamma^2`, depending on `objective`.
    pub objective_value: f64,
    pub status: SolveStatus,
    #[serde(with = "serde_matrix")]
    pub k: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub q: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub n: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub m: DMatrix<f64>,
    /// `F` (direct) or `Y = K Q` (model based).
    #[serde(with = "serde_matrix")]
    pub lift: DMatrix<f64>,
    /// Decay rate certified by the basin program.
    pub eta: Option<f64>,
    /// Level of the certified ellipsoid `E(Q, s)`.
    pub s: f64,
    pub residuals: ResidualReport,
    /// `|Y_{0,T-1} Z' F - Q|_F`, direct designs only.
    pub consistency_residual: Option<f64>,
    pub iterations: usize,
    #[serde(skip)]
    pub problem: Option<SdpProblem>,
    #[serde(skip)]
    pub assignment: Option<Assignment>,
}

impl SynthesisResult {
    pub fn is_optimal(&self) -> bool {
        self.status.is_optimal()
    }

    pub fn alpha(&self) -> Option<f64> {
        (self.objective == ObjectiveKind::Alpha).then_some(self.objective_value)
    }

    pub fn gamma(&self) -> Option<f64> {
        (self.objective == ObjectiveKind::Gamma2).then(|| self.objective_value.max(0.0).sqrt())
    }

    /// `H = N Q^-1`, the gain whose level set bounds the sector region.
    pub fn sector_gain(&self) -> Result<DMatrix<f64>, SynthError> {
        solve_right(&self.q, &self.n)
    }

    /// `|K Q - K Q(lift)|_F`, zero when `K` was extracted exactly.
    pub fn gain_identity_residual(&self, basis: &DesignBasis<'_>) -> f64 {
        (&self.k * &self.q - basis.gain_value(&self.lift)).norm()
    }

    /// Re-evaluate the stored problem at the stored solution.
    pub fn recheck(&self) -> Option<ResidualReport> {
        let (p, a) = (self.problem.as_ref()?, self.assignment.as_ref()?);
        p.evaluate_constraints(a).ok()
    }
}

/// `X Q = B`, i.e. `X = B Q^-1`, without forming the inverse.
fn solve_right(q: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, SynthError> {
    let bt = b.transpose();
    let xt = match q.clone().cholesky() {
        Some(ch) => ch.solve(&bt),
        None => q.clone().lu().solve(&bt).ok_or(SynthError::SingularQ)?,
    };
    Ok(xt.transpose())
}

/// `|alpha_star - alpha| / alpha_star * 100`.
pub fn performance_index(alpha: f64, alpha_star: f64) -> Result<f64, SynthError> {
    if !(alpha_star > 0.0) {
        return Err(SynthError::InvalidOptions(format!(
            "reference alpha must be positive, got {alpha_star}"
        )));
    }
    Ok((alpha_star - alpha).abs() / alpha_star * 100.0)
}

/// Pose and solve `program` on `basis`.
pub fn synthesize(
    basis: DesignBasis<'_>,
    program: SynthesisProgram<'_>,
    bounds: &SaturationBounds,
    options: &SynthesisOptions,
) -> Result<SynthesisResult, SynthError> {
    options.validate()?;
    let eps = options.epsilon;
    let mut problem = SdpProblem::new();
    let vars = LmiVariables::declare(&mut problem, &basis)?;
    let nx = basis.nx();

    let level = match program {
        SynthesisProgram::BasinOfAttraction => 1.0,
        _ => options.s,
    };
    build_saturation_lmis(&mut problem, &vars, bounds, level, eps)?;
    if let DesignBasis::Direct(products) = basis {
        build_consistency_equalities(&mut problem, products, &vars)?;
    }

    let scalar = match program {
        SynthesisProgram::BasinOfAttraction => {
            build_boa_lmi(&mut problem, &basis, &vars, options.eta, eps)?;
            let alpha = problem.scalar("alpha");
            problem.add_psd(
                "alpha_bound",
                AffineExpr::var(vars.q) - AffineExpr::scalar_identity(alpha, nx),
                0.0,
            )?;
            if let Some(k2) = options.kappa2 {
                problem.add_psd(
                    "kappa_bound",
                    AffineExpr::identity(nx).scale(k2) - AffineExpr::var(vars.q),
                    0.0,
                )?;
            }
            problem.minimize_scalar(alpha, -1.0)?;
            Some(alpha)
        }
        SynthesisProgram::ReachableSet => {
            build_reachable_lmi(&mut problem, &basis, &vars, eps)?;
            problem.minimize(vec![(vars.q, DMatrix::identity(nx, nx))], 0.0)?;
            None
        }
        SynthesisProgram::L2Gain(channel) => {
            let gamma2 = problem.scalar("gamma2");
            build_l2_lmi(&mut problem, &basis, channel, &vars, gamma2, eps)?;
            problem.minimize_scalar(gamma2, 1.0)?;
            Some(gamma2)
        }
    };

    let sol = solve(&problem, &options.solver)?;
    match sol.status {
        SolveStatus::Infeasible => return Err(SynthError::Infeasible),
        SolveStatus::Unbounded => return Err(SynthError::Solver(sol.status)),
        _ => {}
    }
    let a = &sol.assignment;
    let q = a.value(vars.q).clone();
    let lift = a.value(vars.lift).clone();
    let kq = basis.gain_value(&lift);
    let k = solve_right(&q, &kq).map_err(|_| SynthError::Solver(sol.status))?;
    let objective_value = match scalar {
        Some(v) => a.scalar(v),
        None => q.trace(),
    };
    let consistency_residual = match basis {
        DesignBasis::Direct(p) => Some((p.y0z() * &lift - &q).norm()),
        _ => None,
    };
    log::debug!(
        "{} {} synthesis: {} = {objective_value:.6e} ({})",
        basis.mode(),
        program.objective().as_str(),
        program.objective().as_str(),
        sol.status
    );
    Ok(SynthesisResult {
        mode: basis.mode(),
        objective: program.objective(),
        objective_value,
        status: sol.status,
        k,
        n: a.value(vars.n).clone(),
        m: a.value(vars.m).clone(),
        q,
        lift,
        eta: matches!(program, SynthesisProgram::BasinOfAttraction).then_some(options.eta),
        s: level,
        residuals: sol.residuals,
        consistency_residual,
        iterations: sol.iterations,
        assignment: Some(sol.assignment),
        problem: Some(problem),
    })
}

fn require_direct(options: &SynthesisOptions) -> Result<(), SynthError> {
    if options.mode != DesignMode::Direct {
        return Err(SynthError::InvalidOptions(format!(
            "data-driven synthesis needs mode = direct, got {}",
            options.mode
        )));
    }
    Ok(())
}

/// Maximize the basin estimate `E(Q, 1)` at decay rate `options.eta`.
pub fn synth_boa(
    products: &DataProducts,
    bounds: &SaturationBounds,
    options: &SynthesisOptions,
) -> Result<SynthesisResult, SynthError> {
    require_direct(options)?;
    synthesize(
        DesignBasis::Direct(products),
        SynthesisProgram::BasinOfAttraction,
        bounds,
        options,
    )
}

/// Minimize `trace(Q)` of the reachable-set bound `E(Q, options.s)`.
pub fn synth_reachable(
    products: &DataProducts,
    bounds: &SaturationBounds,
    options: &SynthesisOptions,
) -> Result<SynthesisResult, SynthError> {
    require_direct(options)?;
    synthesize(
        DesignBasis::Direct(products),
        SynthesisProgram::ReachableSet,
        bounds,
        options,
    )
}

/// Minimize the `l2` gain bound `gamma(s)^2` over `|w|_2 <= options.s`.
pub fn synth_l2gain(
    products: &DataProducts,
    bounds: &SaturationBounds,
    channel: &PerformanceChannel,
    options: &SynthesisOptions,
) -> Result<SynthesisResult, SynthError> {
    require_direct(options)?;
    synthesize(
        DesignBasis::Direct(products),
        SynthesisProgram::L2Gain(channel),
        bounds,
        options,
    )
}

/// Certainty-equivalence design on an identified model. With
/// `options.mode = oracle` the model is taken as the true system.
pub fn synth_indirect(
    estimated: &EstimatedModel,
    bounds: &SaturationBounds,
    program: SynthesisProgram<'_>,
    options: &SynthesisOptions,
) -> Result<SynthesisResult, SynthError> {
    let basis = match options.mode {
        DesignMode::Indirect => DesignBasis::Indirect(estimated),
        DesignMode::Oracle => DesignBasis::Oracle {
            a: &estimated.a_hat,
            b: &estimated.b_hat,
        },
        DesignMode::Direct => {
            return Err(SynthError::InvalidOptions(
                "model-based synthesis needs mode = indirect or oracle".into(),
            ))
        }
    };
    synthesize(basis, program, bounds, options)
}

/// Model-based design on the true matrices of `system`.
pub fn synth_oracle(
    system: &LinearSaturatedSystem,
    program: SynthesisProgram<'_>,
    options: &SynthesisOptions,
) -> Result<SynthesisResult, SynthError> {
    synthesize(
        DesignBasis::Oracle {
            a: system.a(),
            b: system.b(),
        },
        program,
        system.bounds(),
        options,
    )
}

/// A single matrix inequality to re-evaluate at a result's variables.
#[derive(Debug, Clone, Copy)]
pub enum Certificate<'a> {
    Decay {
        eta: f64,
    },
    Reachable,
    L2Gain {
        channel: &'a PerformanceChannel,
        gamma2: f64,
    },
}

/// Rebuild one certificate LMI from scratch and evaluate it at the
/// `(Q, N, M, F/Y)` stored in `result`.
pub fn check_certificate(
    basis: &DesignBasis<'_>,
    result: &SynthesisResult,
    certificate: Certificate<'_>,
    margin: f64,
) -> Result<ConstraintResidual, SynthError> {
    let mut p = SdpProblem::new();
    let vars = LmiVariables::declare(&mut p, basis)?;
    let mut a = Assignment::new();
    let id = match certificate {
        Certificate::Decay { eta } => build_boa_lmi(&mut p, basis, &vars, eta, margin)?,
        Certificate::Reachable => build_reachable_lmi(&mut p, basis, &vars, margin)?,
        Certificate::L2Gain { channel, gamma2 } => {
            let g = p.scalar("gamma2");
            a.set(g, DMatrix::from_element(1, 1, gamma2))?;
            build_l2_lmi(&mut p, basis, channel, &vars, g, margin)?
        }
    };
    a.set(vars.q, result.q.clone())?;
    a.set(vars.n, result.n.clone())?;
    a.set(vars.m, result.m.clone())?;
    a.set(vars.lift, result.lift.clone())?;
    let report = p.evaluate_constraints(&a)?;
    Ok(report.constraints[id.0].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{min_eigenvalue, spectral_radius};

    fn capped() -> SynthesisOptions {
        SynthesisOptions {
            kappa2: Some(10.0),
            ..SynthesisOptions::default()
        }
    }

    fn scalar_system(a: f64, ubar: f64) -> LinearSaturatedSystem {
        LinearSaturatedSystem::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, 1.0),
            SaturationBounds::uniform(1, ubar).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn index_arithmetic() {
        assert_eq!(performance_index(5.0, 5.0).unwrap(), 0.0);
        assert_eq!(performance_index(0.0, 5.0).unwrap(), 100.0);
        assert!((performance_index(4.5, 5.0).unwrap() - 10.0).abs() < 1e-12);
        assert!(performance_index(1.0, 0.0).is_err());
    }

    #[test]
    fn scalar_stable_plant_basin() {
        let sys = scalar_system(0.5, 1.0);
        let opts = capped().with_mode(DesignMode::Oracle);
        let r = synth_oracle(&sys, SynthesisProgram::BasinOfAttraction, &opts).unwrap();
        assert!(r.is_optimal(), "{:?}", r.status);
        assert!(min_eigenvalue(&r.q) > 0.0);
        assert!((r.alpha().unwrap() - 10.0).abs() < 1e-6);
        let acl = sys.a() + sys.b() * &r.k;
        assert!(spectral_radius(&acl) < 1.0);
    }

    #[test]
    fn stable_plant_basin_is_unbounded_without_cap() {
        let sys = scalar_system(0.5, 1.0);
        let r = synth_oracle(
            &sys,
            SynthesisProgram::BasinOfAttraction,
            &SynthesisOptions::default(),
        );
        assert!(
            matches!(r, Err(SynthError::Solver(SolveStatus::Unbounded))),
            "{r:?}"
        );
    }

    #[test]
    fn reachable_infeasible_for_weak_actuator() {
        let sys = scalar_system(1.5, 1e-3);
        let opts = SynthesisOptions::default();
        assert!(matches!(
            synth_oracle(&sys, SynthesisProgram::ReachableSet, &opts),
            Err(SynthError::Infeasible)
        ));
    }

    #[test]
    fn gain_is_extracted_multiplicatively() {
        let sys = LinearSaturatedSystem::benchmark();
        let opts = SynthesisOptions::default().with_eta(0.995);
        let r = synth_oracle(&sys, SynthesisProgram::BasinOfAttraction, &opts).unwrap();
        let basis = DesignBasis::Oracle {
            a: sys.a(),
            b: sys.b(),
        };
        assert!(r.gain_identity_residual(&basis) < 1e-8 * r.q.norm());
        assert!(r.recheck().unwrap().feasible(1e-7));
    }

    #[test]
    fn result_round_trips_through_json() {
        let sys = scalar_system(0.5, 1.0);
        let r = synth_oracle(&sys, SynthesisProgram::BasinOfAttraction, &capped()).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: SynthesisResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back.k, r.k);
        assert_eq!(back.status, r.status);
        assert!(back.problem.is_none());
    }

    #[test]
    fn direct_mode_required_for_data_programs() {
        let est = EstimatedModel {
            a_hat: DMatrix::from_element(1, 1, 0.5),
            b_hat: DMatrix::from_element(1, 1, 1.0),
        };
        let bounds = SaturationBounds::uniform(1, 1.0).unwrap();
        let opts = capped();
        assert!(synth_indirect(&est, &bounds, SynthesisProgram::BasinOfAttraction, &opts).is_err());
        let opts = opts.with_mode(DesignMode::Indirect);
        let r = synth_indirect(&est, &bounds, SynthesisProgram::BasinOfAttraction, &opts).unwrap();
        assert_eq!(r.mode, DesignMode::Indirect);
        assert!(r.consistency_residual.is_none());
    }
}
