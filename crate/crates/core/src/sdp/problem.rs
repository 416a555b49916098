use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::expr::{AffineExpr, BlockGrid, VarId, VarKind, VarRef};
use super::SdpError;
use crate::linalg::{max_abs, min_eigenvalue};

/// Relative asymmetry tolerated in a matrix-inequality expression.
const SYMMETRY_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ConstraintId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `expr >= margin I`.
    Psd { margin: f64 },
    /// `expr <= -margin I`.
    Nsd { margin: f64 },
    /// `expr = 0` entrywise.
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub expr: AffineExpr,
    pub kind: ConstraintKind,
}

#[derive(Debug, Clone)]
pub(crate) struct Variable {
    pub name: String,
    pub var: VarRef,
}

/// Minimize `constant + sum <C_v, V>`.
#[derive(Debug, Clone, Default)]
pub struct Objective {
    pub terms: Vec<(VarRef, DMatrix<f64>)>,
    pub constant: f64,
}

/// Values of all variables, indexed by [`VarId`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    values: Vec<Option<DMatrix<f64>>>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, var: VarRef, value: DMatrix<f64>) -> Result<(), SdpError> {
        if value.shape() != (var.rows, var.cols) {
            return Err(SdpError::Nonconformable(format!(
                "value for variable {} must be {}x{}",
                var.id.0, var.rows, var.cols
            )));
        }
        let i = var.id.0;
        if self.values.len() <= i {
            self.values.resize(i + 1, None);
        }
        self.values[i] = Some(value);
        Ok(())
    }

    pub fn get(&self, var: VarRef) -> Option<&DMatrix<f64>> {
        self.values.get(var.id.0).and_then(|v| v.as_ref())
    }

    /// Value of a variable known to be assigned.
    pub fn value(&self, var: VarRef) -> &DMatrix<f64> {
        self.get(var)
            .expect("variable has no value in this assignment")
    }

    pub fn scalar(&self, var: VarRef) -> f64 {
        self.value(var)[(0, 0)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResidual {
    pub name: String,
    pub kind: ConstraintKind,
    /// Minimum eigenvalue of `expr - margin I` (PSD) or `-expr - margin I`
    /// (NSD). `None` for equalities.
    pub slack: Option<f64>,
    /// Largest absolute entry of the expression (equalities only) or of its
    /// skew part (inequalities).
    pub violation: f64,
    /// Largest entry magnitude among the constant and the individual terms
    /// of the expression, floored at 1. Tolerances are relative to it.
    pub scale: f64,
}

impl ConstraintResidual {
    pub fn satisfied(&self, tol: f64) -> bool {
        match self.slack {
            Some(s) => s >= -tol * self.scale,
            None => self.violation <= tol * self.scale,
        }
    }
}

/// Residuals recomputed from the stored problem alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub constraints: Vec<ConstraintResidual>,
    pub min_slack: f64,
    pub max_eq_violation: f64,
}

impl ResidualReport {
    /// Every constraint holds up to `tol` relative to its own scale.
    pub fn feasible(&self, tol: f64) -> bool {
        self.constraints.iter().all(|c| c.satisfied(tol))
    }

    pub fn get(&self, name: &str) -> Option<&ConstraintResidual> {
        self.constraints.iter().find(|c| c.name == name)
    }

    pub fn violated(&self, tol: f64) -> Vec<&ConstraintResidual> {
        self.constraints
            .iter()
            .filter(|c| !c.satisfied(tol))
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct SdpProblem {
    pub(crate) variables: Vec<Variable>,
    pub(crate) constraints: Vec<Constraint>,
    pub(crate) objective: Objective,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    fn declare(&mut self, name: &str, rows: usize, cols: usize, kind: VarKind) -> VarRef {
        let var = VarRef {
            id: VarId(self.variables.len()),
            rows,
            cols,
            kind,
        };
        self.variables.push(Variable {
            name: name.to_string(),
            var,
        });
        var
    }

    pub fn symmetric(&mut self, name: &str, n: usize) -> VarRef {
        self.declare(name, n, n, VarKind::Symmetric)
    }

    pub fn rectangular(&mut self, name: &str, rows: usize, cols: usize) -> VarRef {
        self.declare(name, rows, cols, VarKind::Rectangular)
    }

    pub fn diagonal(&mut self, name: &str, n: usize) -> VarRef {
        self.declare(name, n, n, VarKind::Diagonal)
    }

    pub fn scalar(&mut self, name: &str) -> VarRef {
        self.declare(name, 1, 1, VarKind::Scalar)
    }

    pub fn variables(&self) -> impl Iterator<Item = (&str, VarRef)> {
        self.variables.iter().map(|v| (v.name.as_str(), v.var))
    }

    pub fn variable_name(&self, var: VarRef) -> &str {
        &self.variables[var.id.0].name
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, id: ConstraintId) -> &Constraint {
        &self.constraints[id.0]
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    fn check_declared(&self, expr: &AffineExpr) -> Result<(), SdpError> {
        expr.check_terms()?;
        for t in expr.terms() {
            match self.variables.get(t.var.id.0) {
                Some(v) if v.var == t.var => {}
                _ => return Err(SdpError::UndeclaredVariable(t.var.id.0)),
            }
        }
        Ok(())
    }

    fn check_symmetric(&self, name: &str, expr: &AffineExpr) -> Result<(), SdpError> {
        let (r, c) = expr.shape();
        if r != c || r == 0 {
            return Err(SdpError::Nonconformable(format!(
                "matrix inequality '{name}' needs a nonempty square expression, got {r}x{c}"
            )));
        }
        let check = |m: &DMatrix<f64>| {
            let skew = max_abs(&(m - m.transpose()));
            skew <= SYMMETRY_RTOL * max_abs(m).max(1.0)
        };
        if !check(expr.constant_part()) {
            return Err(SdpError::NotSymmetric(name.to_string()));
        }
        for (_, var) in self.variables() {
            for (i, j) in var.basis() {
                if let Some(m) = expr.coefficient(var, i, j) {
                    if !check(&m) {
                        return Err(SdpError::NotSymmetric(name.to_string()));
                    }
                }
            }
        }
        Ok(())
    }

    fn push(
        &mut self,
        name: &str,
        expr: AffineExpr,
        kind: ConstraintKind,
    ) -> Result<ConstraintId, SdpError> {
        self.check_declared(&expr)?;
        match kind {
            ConstraintKind::Psd { margin } | ConstraintKind::Nsd { margin } => {
                if !(margin >= 0.0 && margin.is_finite()) {
                    return Err(SdpError::NegativeMargin(margin));
                }
                self.check_symmetric(name, &expr)?;
            }
            ConstraintKind::Eq => {}
        }
        self.constraints.push(Constraint {
            name: name.to_string(),
            expr,
            kind,
        });
        Ok(ConstraintId(self.constraints.len() - 1))
    }

    /// `expr >= margin I`.
    pub fn add_psd(
        &mut self,
        name: &str,
        expr: AffineExpr,
        margin: f64,
    ) -> Result<ConstraintId, SdpError> {
        self.push(name, expr, ConstraintKind::Psd { margin })
    }

    /// `expr <= -margin I`.
    pub fn add_nsd(
        &mut self,
        name: &str,
        expr: AffineExpr,
        margin: f64,
    ) -> Result<ConstraintId, SdpError> {
        self.push(name, expr, ConstraintKind::Nsd { margin })
    }

    /// `expr = 0` entrywise.
    pub fn add_eq(&mut self, name: &str, expr: AffineExpr) -> Result<ConstraintId, SdpError> {
        self.push(name, expr, ConstraintKind::Eq)
    }

    /// `He(grid) + margin I <= 0`.
    pub fn add_he_block_inequality(
        &mut self,
        name: &str,
        grid: &BlockGrid,
        margin: f64,
    ) -> Result<ConstraintId, SdpError> {
        self.add_nsd(name, grid.he(), margin)
    }

    /// Replace the objective by `minimize constant + sum <C_v, V>`.
    pub fn minimize(
        &mut self,
        terms: Vec<(VarRef, DMatrix<f64>)>,
        constant: f64,
    ) -> Result<(), SdpError> {
        for (v, c) in &terms {
            if c.shape() != (v.rows, v.cols) {
                return Err(SdpError::Nonconformable(format!(
                    "objective coefficient for '{}' must be {}x{}",
                    self.variable_name(*v),
                    v.rows,
                    v.cols
                )));
            }
        }
        self.objective = Objective { terms, constant };
        Ok(())
    }

    /// Shorthand for minimizing a single scalar variable.
    pub fn minimize_scalar(&mut self, var: VarRef, sign: f64) -> Result<(), SdpError> {
        self.minimize(vec![(var, DMatrix::from_element(1, 1, sign))], 0.0)
    }

    pub fn objective_value(&self, assignment: &Assignment) -> Result<f64, SdpError> {
        let mut acc = self.objective.constant;
        for (v, c) in &self.objective.terms {
            let x = assignment
                .get(*v)
                .ok_or(SdpError::MissingVariable(v.id.0))?;
            acc += c.dot(x);
        }
        Ok(acc)
    }

    /// Recompute every constraint at `assignment`.
    pub fn evaluate_constraints(
        &self,
        assignment: &Assignment,
    ) -> Result<ResidualReport, SdpError> {
        let mut out = Vec::with_capacity(self.constraints.len());
        let mut min_slack = f64::INFINITY;
        let mut max_eq = 0.0f64;
        for c in &self.constraints {
            let value = c.expr.evaluate_with(|v| assignment.get(v))?;
            let scale = magnitude(&c.expr, assignment)?;
            let entry = match c.kind {
                ConstraintKind::Eq => {
                    let viol = max_abs(&value);
                    max_eq = max_eq.max(viol);
                    ConstraintResidual {
                        name: c.name.clone(),
                        kind: c.kind,
                        slack: None,
                        violation: viol,
                        scale,
                    }
                }
                ConstraintKind::Psd { margin } | ConstraintKind::Nsd { margin } => {
                    let signed = if matches!(c.kind, ConstraintKind::Psd { .. }) {
                        value.clone()
                    } else {
                        -value.clone()
                    };
                    let slack = min_eigenvalue(&signed) - margin;
                    min_slack = min_slack.min(slack);
                    ConstraintResidual {
                        name: c.name.clone(),
                        kind: c.kind,
                        slack: Some(slack),
                        violation: max_abs(&(&value - value.transpose())),
                        scale,
                    }
                }
            };
            out.push(entry);
        }
        Ok(ResidualReport {
            constraints: out,
            min_slack,
            max_eq_violation: max_eq,
        })
    }
}

fn magnitude(expr: &AffineExpr, assignment: &Assignment) -> Result<f64, SdpError> {
    let mut m = max_abs(expr.constant_part()).max(1.0);
    for t in expr.terms() {
        let v = assignment
            .get(t.var)
            .ok_or(SdpError::MissingVariable(t.var.id.0))?;
        let term = if t.transpose {
            &t.left * v.transpose() * &t.right
        } else {
            &t.left * v * &t.right
        };
        m = m.max(max_abs(&term));
    }
    Ok(m)
}
