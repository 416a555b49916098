use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::compile::{compile, ConeProgram, Layout};
use super::ipm::{self, IpmSettings, IpmStatus};
use super::problem::{Assignment, ResidualReport, SdpProblem};
use super::SdpError;
use crate::linalg::{numerical_rank, vstack};

pub const DENSE_IPM: &str = "dense-ipm";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// Primal and dual feasibility tolerance of the solver.
    pub tolerance: f64,
    pub abstol: f64,
    pub reltol: f64,
    /// Slack the independent checker tolerates before demoting `optimal`.
    pub check_tolerance: f64,
    pub max_iterations: usize,
    pub backend: String,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            abstol: 1e-8,
            reltol: 1e-8,
            check_tolerance: 1e-7,
            max_iterations: 100,
            backend: DENSE_IPM.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Stopped near, but not within, the requested tolerances; or the
    /// checker rejected a nominally optimal point.
    Inaccurate,
    Infeasible,
    /// The dual is infeasible: the objective is unbounded below.
    Unbounded,
    NumericalFailure,
}

impl SolveStatus {
    pub fn is_optimal(self) -> bool {
        self == SolveStatus::Optimal
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Inaccurate => "inaccurate",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// Final (or best) primal iterate; meaningless for `Infeasible`.
    pub assignment: Assignment,
    pub objective_value: f64,
    /// Objective of the internally normalized program.
    pub scaled_objective: f64,
    pub residuals: ResidualReport,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub backend: String,
}

/// Something that can solve an [`SdpProblem`].
pub trait SdpBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, problem: &SdpProblem, options: &SolveOptions) -> Result<SdpSolution, SdpError>;
}

/// The bundled dense primal-dual interior-point method.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseIpm;

pub fn backend(name: &str) -> Result<Box<dyn SdpBackend>, SdpError> {
    match name {
        DENSE_IPM => Ok(Box::new(DenseIpm)),
        other => Err(SdpError::BackendUnavailable(other.to_string())),
    }
}

pub fn solve(problem: &SdpProblem, options: &SolveOptions) -> Result<SdpSolution, SdpError> {
    backend(&options.backend)?.solve(problem, options)
}

struct Reduced {
    a: DMatrix<f64>,
    b: DVector<f64>,
    consistent: bool,
}

/// Replace `A x = b` by an equivalent system with independent rows.
fn reduce_equalities(a: &DMatrix<f64>, b: &DVector<f64>) -> Reduced {
    let n = a.ncols();
    if a.nrows() == 0 {
        return Reduced {
            a: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
            consistent: true,
        };
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd u");
    let vt = svd.v_t.as_ref().expect("svd v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = a.nrows().max(n) as f64 * smax * 1e-12;
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol)
        .collect();
    if keep.len() == a.nrows() {
        return Reduced {
            a: a.clone(),
            b: b.clone(),
            consistent: true,
        };
    }
    let r = keep.len();
    let mut ar = DMatrix::zeros(r, n);
    let mut br = DVector::zeros(r);
    let mut proj = DVector::zeros(b.len());
    for (k, &i) in keep.iter().enumerate() {
        let ui = u.column(i);
        let coef = ui.dot(b);
        br[k] = coef;
        proj += ui * coef;
        ar.row_mut(k)
            .copy_from(&(vt.row(i) * svd.singular_values[i]));
    }
    let consistent = (b - proj).norm() <= 1e-9 * b.norm().max(1.0);
    Reduced {
        a: ar,
        b: br,
        consistent,
    }
}

impl SdpBackend for DenseIpm {
    fn name(&self) -> &'static str {
        DENSE_IPM
    }

    fn solve(&self, problem: &SdpProblem, options: &SolveOptions) -> Result<SdpSolution, SdpError> {
        let layout = Layout::new(problem);
        if layout.n == 0 {
            return Err(SdpError::Degenerate(
                "problem has no decision variables".into(),
            ));
        }
        let prog = compile(problem, &layout)?;
        if prog.blocks.is_empty() {
            return Err(SdpError::Degenerate(
                "problem has no matrix inequalities".into(),
            ));
        }
        let reduced = reduce_equalities(&prog.a, &prog.b);
        let stacked = vstack(&[&prog.g, &reduced.a]);
        let rank = numerical_rank(&stacked);
        if rank < layout.n {
            return Err(SdpError::Degenerate(format!(
                "constraints determine only {rank} of {} unknowns (a variable appears in no constraint?)",
                layout.n
            )));
        }

        let c_norm = prog.c.norm();
        let c_scale = if c_norm > 0.0 { c_norm } else { 1.0 };
        let scaled = ConeProgram {
            c: &prog.c / c_scale,
            g: prog.g.clone(),
            h: prog.h.clone(),
            a: reduced.a,
            b: reduced.b,
            blocks: prog.blocks.clone(),
        };

        if !reduced.consistent {
            let assignment = layout.assignment(&DVector::zeros(layout.n));
            let residuals = problem.evaluate_constraints(&assignment)?;
            return Ok(SdpSolution {
                status: SolveStatus::Infeasible,
                objective_value: f64::NAN,
                scaled_objective: f64::NAN,
                assignment,
                residuals,
                iterations: 0,
                primal_residual: f64::INFINITY,
                dual_residual: f64::INFINITY,
                gap: f64::INFINITY,
                backend: DENSE_IPM.into(),
            });
        }

        let settings = IpmSettings {
            max_iter: options.max_iterations,
            abstol: options.abstol,
            reltol: options.reltol,
            feastol: options.tolerance,
            ..IpmSettings::default()
        };
        let out = ipm::solve(&scaled, &settings);
        let assignment = layout.assignment(&out.point.x);
        let residuals = problem.evaluate_constraints(&assignment)?;
        let checked = residuals.feasible(options.check_tolerance);
        let status = match out.status {
            IpmStatus::Optimal if checked => SolveStatus::Optimal,
            IpmStatus::Optimal => SolveStatus::Inaccurate,
            IpmStatus::PrimalInfeasible => SolveStatus::Infeasible,
            IpmStatus::DualInfeasible => SolveStatus::Unbounded,
            IpmStatus::MaxIterations | IpmStatus::Stalled if out.near_optimal => {
                SolveStatus::Inaccurate
            }
            IpmStatus::MaxIterations | IpmStatus::Stalled => SolveStatus::NumericalFailure,
        };
        log::debug!(
            "dense-ipm: {} after {} iterations (pres {:.2e}, dres {:.2e}, gap {:.2e})",
            status,
            out.iterations,
            out.metrics.pres,
            out.metrics.dres,
            out.metrics.gap
        );
        let objective_value = problem.objective_value(&assignment)?;
        Ok(SdpSolution {
            status,
            objective_value,
            scaled_objective: out.metrics.pcost,
            assignment,
            residuals,
            iterations: out.iterations,
            primal_residual: out.metrics.pres,
            dual_residual: out.metrics.dres,
            gap: out.metrics.gap,
            backend: DENSE_IPM.into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::AffineExpr;

    #[test]
    fn dependent_rows_are_dropped() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let r = reduce_equalities(&a, &b);
        assert_eq!(r.a.nrows(), 2);
        assert!(r.consistent);
        let b_bad = DVector::from_vec(vec![1.0, 5.0, 3.0]);
        assert!(!reduce_equalities(&a, &b_bad).consistent);
    }

    #[test]
    fn unknown_backend() {
        let mut p = SdpProblem::new();
        let t = p.scalar("t");
        p.add_psd("t", AffineExpr::var(t), 0.0).unwrap();
        let opts = SolveOptions {
            backend: "mosek".into(),
            ..SolveOptions::default()
        };
        assert!(matches!(
            solve(&p, &opts),
            Err(SdpError::BackendUnavailable(_))
        ));
    }

    #[test]
    fn unused_variable_is_degenerate() {
        let mut p = SdpProblem::new();
        let t = p.scalar("t");
        let _u = p.symmetric("U", 2);
        p.add_psd("t", AffineExpr::var(t), 0.0).unwrap();
        assert!(matches!(
            solve(&p, &SolveOptions::default()),
            Err(SdpError::Degenerate(_))
        ));
    }
}
