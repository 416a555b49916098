use std::ops::{Add, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::SdpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Symmetric,
    Rectangular,
    Diagonal,
    Scalar,
}

/// Handle to a declared decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarRef {
    pub id: VarId,
    pub rows: usize,
    pub cols: usize,
    pub kind: VarKind,
}

impl VarRef {
    /// Number of scalar unknowns.
    pub fn dof(&self) -> usize {
        match self.kind {
            VarKind::Symmetric => self.rows * (self.rows + 1) / 2,
            VarKind::Rectangular => self.rows * self.cols,
            VarKind::Diagonal => self.rows,
            VarKind::Scalar => 1,
        }
    }

    /// `(i, j)` index pairs of the unknowns, in vectorization order.
    /// A symmetric pair `i < j` stands for `E_ij + E_ji`.
    pub(crate) fn basis(&self) -> Vec<(usize, usize)> {
        match self.kind {
            VarKind::Symmetric => (0..self.rows)
                .flat_map(|j| (0..=j).map(move |i| (i, j)))
                .collect(),
            VarKind::Rectangular => (0..self.cols)
                .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
                .collect(),
            VarKind::Diagonal => (0..self.rows).map(|i| (i, i)).collect(),
            VarKind::Scalar => vec![(0, 0)],
        }
    }

    /// Rebuild the matrix value from unknowns in [`VarRef::basis`] order.
    pub(crate) fn assemble(&self, values: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (&(i, j), &v) in self.basis().iter().zip(values) {
            m[(i, j)] = v;
            if self.kind == VarKind::Symmetric {
                m[(j, i)] = v;
            }
        }
        m
    }
}

/// One `L X R` (or `L X' R`) product.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub left: DMatrix<f64>,
    pub var: VarRef,
    pub transpose: bool,
    pub right: DMatrix<f64>,
}

impl Term {
    fn shape_of_var(&self) -> (usize, usize) {
        if self.transpose {
            (self.var.cols, self.var.rows)
        } else {
            (self.var.rows, self.var.cols)
        }
    }

    pub fn evaluate(&self, value: &DMatrix<f64>) -> DMatrix<f64> {
        if self.transpose {
            &self.left * value.transpose() * &self.right
        } else {
            &self.left * value * &self.right
        }
    }
}

/// `C + sum_t L_t X_t R_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    pub(crate) constant: DMatrix<f64>,
    pub(crate) terms: Vec<Term>,
}

impl AffineExpr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(DMatrix::zeros(rows, cols))
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        Self {
            constant: m,
            terms: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(DMatrix::identity(n, n))
    }

    pub fn var(v: VarRef) -> Self {
        Self {
            constant: DMatrix::zeros(v.rows, v.cols),
            terms: vec![Term {
                left: DMatrix::identity(v.rows, v.rows),
                var: v,
                transpose: false,
                right: DMatrix::identity(v.cols, v.cols),
            }],
        }
    }

    /// `gamma I_n` for a scalar variable `gamma`.
    pub fn scalar_identity(v: VarRef, n: usize) -> Self {
        assert_eq!(
            v.kind,
            VarKind::Scalar,
            "scalar_identity needs a scalar variable"
        );
        let terms = (0..n)
            .map(|i| {
                let mut e = DMatrix::zeros(n, 1);
                e[(i, 0)] = 1.0;
                Term {
                    right: e.transpose(),
                    left: e,
                    var: v,
                    transpose: false,
                }
            })
            .collect();
        Self {
            constant: DMatrix::zeros(n, n),
            terms,
        }
    }

    pub fn rows(&self) -> usize {
        self.constant.nrows()
    }

    pub fn cols(&self) -> usize {
        self.constant.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.constant.shape()
    }

    pub fn constant_part(&self) -> &DMatrix<f64> {
        &self.constant
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    /// `M * self`.
    pub fn lmul(mut self, m: &DMatrix<f64>) -> Self {
        assert_eq!(m.ncols(), self.rows(), "lmul: nonconformable");
        self.constant = m * &self.constant;
        for t in &mut self.terms {
            t.left = m * &t.left;
        }
        self
    }

    /// `self * M`.
    pub fn rmul(mut self, m: &DMatrix<f64>) -> Self {
        assert_eq!(self.cols(), m.nrows(), "rmul: nonconformable");
        self.constant = &self.constant * m;
        for t in &mut self.terms {
            t.right = &t.right * m;
        }
        self
    }

    pub fn scale(mut self, a: f64) -> Self {
        self.constant *= a;
        for t in &mut self.terms {
            t.left *= a;
        }
        self
    }

    pub fn transpose(self) -> Self {
        Self {
            constant: self.constant.transpose(),
            terms: self
                .terms
                .into_iter()
                .map(|t| Term {
                    left: t.right.transpose(),
                    var: t.var,
                    transpose: !t.transpose,
                    right: t.left.transpose(),
                })
                .collect(),
        }
    }

    pub fn try_add(mut self, other: Self) -> Result<Self, SdpError> {
        if self.shape() != other.shape() {
            return Err(SdpError::Nonconformable(format!(
                "cannot add {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        self.constant += other.constant;
        self.terms.extend(other.terms);
        Ok(self)
    }

    /// Place `self` at `(r0, c0)` inside a `rows x cols` zero matrix.
    pub(crate) fn embed(self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let (r, c) = self.shape();
        let mut pl = DMatrix::zeros(rows, r);
        for i in 0..r {
            pl[(r0 + i, i)] = 1.0;
        }
        let mut pr = DMatrix::zeros(c, cols);
        for j in 0..c {
            pr[(j, c0 + j)] = 1.0;
        }
        self.lmul(&pl).rmul(&pr)
    }

    pub(crate) fn check_terms(&self) -> Result<(), SdpError> {
        for t in &self.terms {
            let (vr, vc) = t.shape_of_var();
            if t.left.ncols() != vr
                || t.right.nrows() != vc
                || t.left.nrows() != self.rows()
                || t.right.ncols() != self.cols()
            {
                return Err(SdpError::Nonconformable(format!(
                    "term on variable {} does not fit a {:?} expression",
                    t.var.id.0,
                    self.shape()
                )));
            }
        }
        Ok(())
    }

    /// Evaluate at an assignment; `lookup` returns the value of a variable.
    pub fn evaluate_with<'a>(
        &self,
        mut lookup: impl FnMut(VarRef) -> Option<&'a DMatrix<f64>>,
    ) -> Result<DMatrix<f64>, SdpError> {
        let mut out = self.constant.clone();
        for t in &self.terms {
            let value = lookup(t.var).ok_or(SdpError::MissingVariable(t.var.id.0))?;
            out += t.evaluate(value);
        }
        Ok(out)
    }

    /// Coefficient matrix multiplying unknown `(i, j)` of `var`.
    pub(crate) fn coefficient(&self, var: VarRef, i: usize, j: usize) -> Option<DMatrix<f64>> {
        let mut acc: Option<DMatrix<f64>> = None;
        let pairs: &[(usize, usize)] = if var.kind == VarKind::Symmetric && i != j {
            &[(i, j), (j, i)]
        } else {
            &[(i, j)]
        };
        for t in self.terms.iter().filter(|t| t.var.id == var.id) {
            for &(a, b) in pairs {
                let (a, b) = if t.transpose { (b, a) } else { (a, b) };
                let m = t.left.column(a) * t.right.row(b);
                match &mut acc {
                    Some(x) => *x += m,
                    None => acc = Some(m),
                }
            }
        }
        acc
    }
}

impl From<VarRef> for AffineExpr {
    fn from(v: VarRef) -> Self {
        Self::var(v)
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;

    fn add(self, rhs: Self) -> Self {
        self.try_add(rhs)
            .expect("AffineExpr + AffineExpr: shape mismatch")
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;

    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale(-1.0)
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;

    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

/// Square block partition filled on and below the diagonal.
#[derive(Debug, Clone)]
pub struct BlockGrid {
    sizes: Vec<usize>,
    blocks: Vec<Vec<Option<AffineExpr>>>,
}

impl BlockGrid {
    pub fn new(sizes: &[usize]) -> Self {
        let n = sizes.len();
        Self {
            sizes: sizes.to_vec(),
            blocks: (0..n).map(|i| vec![None; i + 1]).collect(),
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Set block `(i, j)`, `i >= j`, replacing any earlier content.
    pub fn set(&mut self, i: usize, j: usize, expr: AffineExpr) -> Result<&mut Self, SdpError> {
        if j > i || i >= self.sizes.len() {
            return Err(SdpError::Nonconformable(format!(
                "block ({i}, {j}) is not in the lower triangle of a {}-block grid",
                self.sizes.len()
            )));
        }
        if expr.shape() != (self.sizes[i], self.sizes[j]) {
            return Err(SdpError::Nonconformable(format!(
                "block ({i}, {j}) must be {}x{}, got {:?}",
                self.sizes[i],
                self.sizes[j],
                expr.shape()
            )));
        }
        expr.check_terms()?;
        self.blocks[i][j] = Some(expr);
        Ok(self)
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = vec![0; self.sizes.len()];
        for k in 1..self.sizes.len() {
            off[k] = off[k - 1] + self.sizes[k - 1];
        }
        off
    }

    fn lower(&self, include_diagonal: bool) -> AffineExpr {
        let n = self.dim();
        let off = self.offsets();
        let mut out = AffineExpr::zeros(n, n);
        for (i, row) in self.blocks.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                if i == j && !include_diagonal {
                    continue;
                }
                if let Some(b) = b {
                    out = out + b.clone().embed(off[i], off[j], n, n);
                }
            }
        }
        out
    }

    fn diagonal(&self) -> AffineExpr {
        let n = self.dim();
        let off = self.offsets();
        let mut out = AffineExpr::zeros(n, n);
        for (i, row) in self.blocks.iter().enumerate() {
            if let Some(b) = &row[i] {
                out = out + b.clone().embed(off[i], off[i], n, n);
            }
        }
        out
    }

    /// `L + L'` where `L` is the block lower-triangular matrix of the grid.
    pub fn he(&self) -> AffineExpr {
        let l = self.lower(true);
        l.clone() + l.transpose()
    }

    /// The symmetric matrix whose lower triangle is the grid; diagonal
    /// blocks are taken as given.
    pub fn symmetric(&self) -> AffineExpr {
        let l = self.lower(false);
        self.diagonal() + l.clone() + l.transpose()
    }
}
