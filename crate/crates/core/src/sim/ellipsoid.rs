use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::SimError;
use crate::linalg::{sym_eigenvalues, symmetrize};

/// `E(Q, s) = { x : x' Q^-1 x <= s^2 }`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    q: DMatrix<f64>,
    level: f64,
    chol: Cholesky<f64, Dyn>,
}

impl Ellipsoid {
    pub fn new(q: &DMatrix<f64>, level: f64) -> Result<Self, SimError> {
        if !q.is_square() {
            return Err(SimError::DimensionMismatch {
                what: "Q (square)",
                expected: q.nrows(),
                got: q.ncols(),
            });
        }
        let q = symmetrize(q);
        let chol = Cholesky::new(q.clone()).ok_or(SimError::NotPositiveDefinite)?;
        if !(level.is_finite() && level > 0.0) {
            return Err(SimError::NotPositiveDefinite);
        }
        Ok(Self { q, level, chol })
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// `x' Q^-1 x`, through the Cholesky factor.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        let y = self
            .chol
            .l_dirty()
            .solve_lower_triangular(x)
            .expect("Cholesky factor has a nonzero diagonal");
        y.norm_squared()
    }

    /// `sqrt(x' Q^-1 x) / s`; at most one inside the ellipsoid.
    pub fn normalized_level(&self, x: &DVector<f64>) -> f64 {
        self.quadratic_form(x).sqrt() / self.level
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        self.quadratic_form(x) <= self.level * self.level
    }

    /// `count` points on the boundary: uniform directions on the unit
    /// sphere mapped through `s L` with `Q = L L'`.
    pub fn boundary_samples(&self, count: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dim();
        let l = self.chol.l();
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let d = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = d.norm();
            if norm < 1e-12 {
                continue;
            }
            out.push(&l * (d * (self.level / norm)));
        }
        out
    }
}

/// `lambda_max(Q) / lambda_min(Q)` for symmetric positive definite `Q`.
pub fn condition_number(q: &DMatrix<f64>) -> Result<f64, SimError> {
    if !q.is_square() || q.nrows() == 0 {
        return Err(SimError::NotPositiveDefinite);
    }
    let ev = sym_eigenvalues(&symmetrize(q));
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) {
        return Err(SimError::NotPositiveDefinite);
    }
    Ok(hi / lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_basics() {
        let e = Ellipsoid::new(&DMatrix::identity(3, 3), 1.0).unwrap();
        assert!(e.contains(&DVector::zeros(3)));
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(e.contains(&x));
        assert_eq!(e.quadratic_form(&x), 1.0);
        assert!(!e.contains(&DVector::from_vec(vec![1.0, 1e-6, 0.0])));
    }

    #[test]
    fn boundary_samples_lie_on_boundary() {
        let q = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]);
        let e = Ellipsoid::new(&q, 1.7).unwrap();
        for x in e.boundary_samples(200, 3) {
            assert!((e.quadratic_form(&x) - 1.7f64.powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(Ellipsoid::new(&q, 1.0).is_err());
        assert!(condition_number(&q).is_err());
    }

    #[test]
    fn condition_numbers() {
        assert_eq!(condition_number(&DMatrix::identity(3, 3)).unwrap(), 1.0);
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        assert!((condition_number(&q).unwrap() - 4.0).abs() < 1e-12);
    }
}
