//! PSD-cone primitives: `svec`/`smat`, Nesterov-Todd scaling and step
//! lengths, all for products of dense symmetric blocks.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::linalg::symmetrize;

const SQRT2: f64 = std::f64::consts::SQRT_2;

pub(crate) fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Lower triangle, column by column, off-diagonals scaled by `sqrt(2)`,
/// so that `svec(X) . svec(Y) = trace(X Y)` for symmetric arguments.
pub(crate) fn svec(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(svec_len(n));
    for j in 0..n {
        out.push(m[(j, j)]);
        for i in j + 1..n {
            out.push(0.5 * (m[(i, j)] + m[(j, i)]) * SQRT2);
        }
    }
    DVector::from_vec(out)
}

pub(crate) fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        m[(j, j)] = v[k];
        k += 1;
        for i in j + 1..n {
            let x = v[k] / SQRT2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

/// Split a cone vector into its symmetric blocks.
pub(crate) fn unpack(v: &DVector<f64>, blocks: &[usize]) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(blocks.len());
    let mut off = 0;
    for &n in blocks {
        let len = svec_len(n);
        out.push(smat(&v.as_slice()[off..off + len], n));
        off += len;
    }
    out
}

pub(crate) fn pack(ms: &[DMatrix<f64>]) -> DVector<f64> {
    let total: usize = ms.iter().map(|m| svec_len(m.nrows())).sum();
    let mut out = DVector::zeros(total);
    let mut off = 0;
    for m in ms {
        let v = svec(m);
        out.rows_mut(off, v.len()).copy_from(&v);
        off += v.len();
    }
    out
}

pub(crate) fn identity(blocks: &[usize]) -> DVector<f64> {
    pack(
        &blocks
            .iter()
            .map(|&n| DMatrix::identity(n, n))
            .collect::<Vec<_>>(),
    )
}

/// Smallest eigenvalue over all blocks.
pub(crate) fn min_eig(v: &DVector<f64>, blocks: &[usize]) -> f64 {
    unpack(v, blocks)
        .iter()
        .map(|m| {
            SymmetricEigen::new(m.clone())
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Any `L` with `L L' = M`: Cholesky, or an eigenvalue square root with
/// clamped spectrum when Cholesky breaks down.
fn factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let m = symmetrize(m);
    if let Some(ch) = Cholesky::new(m.clone()) {
        return ch.l();
    }
    let eig = SymmetricEigen::new(m);
    let top = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0, f64::max)
        .max(1e-300);
    let d = eig.eigenvalues.map(|x| x.max(top * 1e-15).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d)
}

/// Nesterov-Todd scaling of one block: `R' Z R = R^-1 S R^-T = diag(lambda)`.
#[derive(Debug, Clone)]
pub(crate) struct BlockScaling {
    pub r: DMatrix<f64>,
    pub rinv: DMatrix<f64>,
    pub lambda: DVector<f64>,
}

impl BlockScaling {
    pub fn from_pair(s: &DMatrix<f64>, z: &DMatrix<f64>) -> Self {
        let ls = factor(s);
        let lz = factor(z);
        let svd = (lz.transpose() * &ls).svd(true, true);
        let u = svd.u.expect("svd u");
        let vt = svd.v_t.expect("svd v_t");
        let lambda = svd.singular_values.map(|x| x.max(1e-300));
        let isq = lambda.map(|x| 1.0 / x.sqrt());
        let r = &ls * vt.transpose() * DMatrix::from_diagonal(&isq);
        let rinv = DMatrix::from_diagonal(&isq) * u.transpose() * lz.transpose();
        Self { r, rinv, lambda }
    }

    pub fn lambda_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.lambda)
    }
}

/// Scaling for the whole product cone.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    pub blocks: Vec<BlockScaling>,
}

impl Scaling {
    pub fn new(s: &DVector<f64>, z: &DVector<f64>, sizes: &[usize]) -> Self {
        let ss = unpack(s, sizes);
        let zs = unpack(z, sizes);
        Self {
            blocks: ss
                .iter()
                .zip(&zs)
                .map(|(s, z)| BlockScaling::from_pair(s, z))
                .collect(),
        }
    }

    fn map(
        &self,
        v: &DVector<f64>,
        f: impl Fn(&BlockScaling, &DMatrix<f64>) -> DMatrix<f64>,
    ) -> DVector<f64> {
        let sizes: Vec<usize> = self.blocks.iter().map(|b| b.lambda.len()).collect();
        let ms = unpack(v, &sizes);
        let out: Vec<DMatrix<f64>> = self.blocks.iter().zip(&ms).map(|(b, m)| f(b, m)).collect();
        pack(&out)
    }

    /// `W z = R' Z R`.
    pub fn w(&self, v: &DVector<f64>) -> DVector<f64> {
        self.map(v, |b, m| b.r.transpose() * m * &b.r)
    }

    /// `W' x = R X R'`.
    pub fn wt(&self, v: &DVector<f64>) -> DVector<f64> {
        self.map(v, |b, m| &b.r * m * b.r.transpose())
    }

    /// `W^-1 x = R^-T X R^-1`.
    pub fn winv(&self, v: &DVector<f64>) -> DVector<f64> {
        self.map(v, |b, m| b.rinv.transpose() * m * &b.rinv)
    }

    /// `W^-T x = R^-1 X R^-T`.
    pub fn wit(&self, v: &DVector<f64>) -> DVector<f64> {
        self.map(v, |b, m| &b.rinv * m * b.rinv.transpose())
    }

    pub fn lambda(&self) -> DVector<f64> {
        pack(
            &self
                .blocks
                .iter()
                .map(|b| b.lambda_matrix())
                .collect::<Vec<_>>(),
        )
    }

    /// Solve `lambda o X = D` (Jordan product) for `X`.
    pub fn lambda_solve(&self, d: &DVector<f64>) -> DVector<f64> {
        self.map(d, |b, m| {
            let l = &b.lambda;
            DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| 2.0 * m[(i, j)] / (l[i] + l[j]))
        })
    }

    /// Largest `alpha` with `lambda + alpha d` in the cone (infinite when unbounded).
    pub fn max_step(&self, d: &DVector<f64>) -> f64 {
        let sizes: Vec<usize> = self.blocks.iter().map(|b| b.lambda.len()).collect();
        let ms = unpack(d, &sizes);
        let mut alpha = f64::INFINITY;
        for (b, m) in self.blocks.iter().zip(&ms) {
            let isq = b.lambda.map(|x| 1.0 / x.sqrt());
            let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * isq[i] * isq[j]);
            let lo = SymmetricEigen::new(scaled)
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if lo < 0.0 {
                alpha = alpha.min(-1.0 / lo);
            }
        }
        alpha
    }

    /// Unscaled `(s, z) = (W' lambda, W^-1 lambda)`.
    #[cfg(test)]
    pub fn unscaled_pair(&self) -> (DVector<f64>, DVector<f64>) {
        let lam = self.lambda();
        (self.wt(&lam), self.winv(&lam))
    }
}

/// Jordan product `(X Y + Y X) / 2` blockwise.
pub(crate) fn jordan(x: &DVector<f64>, y: &DVector<f64>, sizes: &[usize]) -> DVector<f64> {
    let xs = unpack(x, sizes);
    let ys = unpack(y, sizes);
    let out: Vec<DMatrix<f64>> = xs
        .iter()
        .zip(&ys)
        .map(|(a, b)| (a * b + b * a) * 0.5)
        .collect();
    pack(&out)
}
