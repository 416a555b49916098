//! Lowering of an [`SdpProblem`] to the standard conic form
//!
//! ```text
//! minimize c'x  subject to  G x + s = h,  A x = b,  s in S_1 x ... x S_k
//! ```
//!
//! where each `S_i` is a PSD cone stored in `svec` form.

use nalgebra::{DMatrix, DVector};

use super::cone::svec;
use super::expr::VarRef;
use super::problem::{Assignment, ConstraintKind, SdpProblem};
use super::SdpError;

#[derive(Debug, Clone)]
pub(crate) struct ConeProgram {
    pub c: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Order of each PSD block, in constraint order.
    pub blocks: Vec<usize>,
}

impl ConeProgram {
    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn degree(&self) -> usize {
        self.blocks.iter().sum()
    }
}

/// Maps variables to columns of the conic program.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub vars: Vec<(VarRef, usize)>,
    pub n: usize,
}

impl Layout {
    pub fn new(problem: &SdpProblem) -> Self {
        let mut vars = Vec::with_capacity(problem.variables.len());
        let mut n = 0;
        for v in &problem.variables {
            vars.push((v.var, n));
            n += v.var.dof();
        }
        Self { vars, n }
    }

    pub fn assignment(&self, x: &DVector<f64>) -> Assignment {
        let mut a = Assignment::new();
        for &(v, off) in &self.vars {
            let vals: Vec<f64> = x.rows(off, v.dof()).iter().cloned().collect();
            a.set(v, v.assemble(&vals)).expect("layout shapes match");
        }
        a
    }
}

pub(crate) fn compile(problem: &SdpProblem, layout: &Layout) -> Result<ConeProgram, SdpError> {
    let n = layout.n;
    let mut c = DVector::zeros(n);
    for (v, coef) in &problem.objective.terms {
        let off = layout.vars[v.id.0].1;
        for (k, (i, j)) in v.basis().into_iter().enumerate() {
            c[off + k] = if v.kind == super::VarKind::Symmetric && i != j {
                coef[(i, j)] + coef[(j, i)]
            } else {
                coef[(i, j)]
            };
        }
    }

    let mut g_cols: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut h: Vec<f64> = Vec::new();
    let mut a_rows: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut blocks = Vec::new();

    for con in &problem.constraints {
        let (rows, cols) = con.expr.shape();
        match con.kind {
            ConstraintKind::Psd { margin } | ConstraintKind::Nsd { margin } => {
                let sign = if matches!(con.kind, ConstraintKind::Psd { .. }) {
                    1.0
                } else {
                    -1.0
                };
                // s = sign*expr - margin I = h - G x
                let h0 = con.expr.constant_part() * sign - DMatrix::identity(rows, rows) * margin;
                let hv = svec(&h0);
                let len = hv.len();
                h.extend(hv.iter());
                for &(v, off) in &layout.vars {
                    for (k, (i, j)) in v.basis().into_iter().enumerate() {
                        let col = &mut g_cols[off + k];
                        match con.expr.coefficient(v, i, j) {
                            Some(m) => col.extend(svec(&(m * (-sign))).iter()),
                            None => col.extend(std::iter::repeat_n(0.0, len)),
                        }
                    }
                }
                blocks.push(rows);
            }
            ConstraintKind::Eq => {
                // vec(expr) = 0  becomes  A x = -vec(C)
                let base = a_rows.len();
                for jc in 0..cols {
                    for ir in 0..rows {
                        b.push(-con.expr.constant_part()[(ir, jc)]);
                        a_rows.push(vec![0.0; n]);
                    }
                }
                for &(v, off) in &layout.vars {
                    for (k, (i, j)) in v.basis().into_iter().enumerate() {
                        if let Some(m) = con.expr.coefficient(v, i, j) {
                            for jc in 0..cols {
                                for ir in 0..rows {
                                    a_rows[base + jc * rows + ir][off + k] = m[(ir, jc)];
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    let m = h.len();
    let g = DMatrix::from_fn(m, n, |i, j| g_cols[j][i]);
    let p = a_rows.len();
    let a = DMatrix::from_fn(p, n, |i, j| a_rows[i][j]);
    Ok(ConeProgram {
        c,
        g,
        h: DVector::from_vec(h),
        a,
        b: DVector::from_vec(b),
        blocks,
    })
}
