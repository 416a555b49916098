use nalgebra::{DMatrix, DVector, DVectorView};
use serde::{Deserialize, Serialize};

use super::DataError;

/// Symmetric per-channel saturation limits `|v_j| <= ubar_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SaturationBounds {
    ubar: DVector<f64>,
}

impl SaturationBounds {
    pub fn new(ubar: Vec<f64>) -> Result<Self, DataError> {
        if ubar.is_empty() {
            return Err(DataError::EmptyBounds);
        }
        for (index, &value) in ubar.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(DataError::NonPositiveBound { index, value });
            }
        }
        Ok(Self {
            ubar: DVector::from_vec(ubar),
        })
    }

    /// Same bound on every channel.
    pub fn uniform(channels: usize, ubar: f64) -> Result<Self, DataError> {
        Self::new(vec![ubar; channels])
    }

    pub fn channels(&self) -> usize {
        self.ubar.len()
    }

    pub fn ubar(&self) -> &DVector<f64> {
        &self.ubar
    }

    pub fn get(&self, j: usize) -> f64 {
        self.ubar[j]
    }

    fn check(&self, len: usize) -> Result<(), DataError> {
        if len != self.channels() {
            return Err(DataError::DimensionMismatch {
                expected: self.channels(),
                got: len,
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for SaturationBounds {
    type Error = DataError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<SaturationBounds> for Vec<f64> {
    fn from(b: SaturationBounds) -> Self {
        b.ubar.iter().cloned().collect()
    }
}

/// Decentralized saturation: `max(-ubar_j, min(ubar_j, u_j))` per channel.
pub fn saturate(u: &DVector<f64>, bounds: &SaturationBounds) -> Result<DVector<f64>, DataError> {
    bounds.check(u.len())?;
    Ok(saturate_unchecked(u.as_view(), bounds))
}

pub(crate) fn saturate_unchecked(
    u: DVectorView<'_, f64>,
    bounds: &SaturationBounds,
) -> DVector<f64> {
    DVector::from_iterator(
        u.len(),
        u.iter()
            .zip(bounds.ubar.iter())
            .map(|(&x, &b)| x.min(b).max(-b)),
    )
}

/// Dead-zone `dz(u) = u - sat(u)`, zero inside the saturation box.
///
/// `sat(u) + dz(u)` reproduces `u` exactly for `|u_j| <= 2 ubar_j` and up
/// to one rounding beyond.
pub fn deadzone(u: &DVector<f64>, bounds: &SaturationBounds) -> Result<DVector<f64>, DataError> {
    let s = saturate(u, bounds)?;
    Ok(u - s)
}

/// A sampled vector signal `v(0), ..., v(T)` stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    samples: DMatrix<f64>,
}

impl SignalRecord {
    /// Columns are time samples; requires at least two columns (T >= 1).
    pub fn new(samples: DMatrix<f64>) -> Result<Self, DataError> {
        if samples.ncols() < 2 {
            return Err(DataError::HorizonTooShort(samples.ncols()));
        }
        if samples.nrows() == 0 {
            return Err(DataError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        Ok(Self { samples })
    }

    pub fn from_samples(samples: &[DVector<f64>]) -> Result<Self, DataError> {
        let dim = samples.first().map(|s| s.len()).unwrap_or(0);
        for s in samples {
            if s.len() != dim {
                return Err(DataError::DimensionMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
        }
        if samples.len() < 2 {
            return Err(DataError::HorizonTooShort(samples.len()));
        }
        Self::new(DMatrix::from_columns(samples))
    }

    /// Scalar signal from a slice of values.
    pub fn scalar(values: &[f64]) -> Result<Self, DataError> {
        Self::new(DMatrix::from_row_slice(1, values.len(), values))
    }

    pub fn zeros(dim: usize, horizon: usize) -> Self {
        Self {
            samples: DMatrix::zeros(dim.max(1), horizon.max(1) + 1),
        }
    }

    pub fn dim(&self) -> usize {
        self.samples.nrows()
    }

    /// T, the index of the last sample.
    pub fn horizon(&self) -> usize {
        self.samples.ncols() - 1
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample(&self, k: usize) -> DVectorView<'_, f64> {
        self.samples.column(k)
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    /// Sum over all samples of `|v(k)|^2`, square-rooted.
    pub fn energy(&self) -> f64 {
        self.samples.norm()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: &self.samples * factor,
        }
    }

    /// Columns `from..=to` as a single-row block.
    pub fn window(&self, from: usize, to: usize) -> DMatrix<f64> {
        self.samples.columns(from, to + 1 - from).into_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: &[f64]) -> SaturationBounds {
        SaturationBounds::new(v.to_vec()).unwrap()
    }

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn saturate_examples() {
        assert_eq!(saturate(&dv(&[0.5]), &b(&[1.0])).unwrap(), dv(&[0.5]));
        assert_eq!(
            saturate(&dv(&[2.0, -3.0]), &b(&[1.0, 1.0])).unwrap(),
            dv(&[1.0, -1.0])
        );
        assert_eq!(saturate(&dv(&[-1.0]), &b(&[1.0])).unwrap(), dv(&[-1.0]));
    }

    #[test]
    fn deadzone_examples() {
        assert_eq!(deadzone(&dv(&[0.5]), &b(&[1.0])).unwrap(), dv(&[0.0]));
        assert_eq!(deadzone(&dv(&[2.0]), &b(&[1.0])).unwrap(), dv(&[1.0]));
        assert_eq!(
            deadzone(&dv(&[-3.0, 0.0]), &b(&[1.0, 1.0])).unwrap(),
            dv(&[-2.0, 0.0])
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        assert!(matches!(
            saturate(&dv(&[1.0, 2.0]), &b(&[1.0])),
            Err(DataError::DimensionMismatch {
                expected: 1,
                got: 2
            })
        ));
        assert!(deadzone(&dv(&[1.0]), &b(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn bounds_must_be_positive() {
        assert!(SaturationBounds::new(vec![1.0, 0.0]).is_err());
        assert!(SaturationBounds::new(vec![-1.0]).is_err());
        assert!(SaturationBounds::new(vec![]).is_err());
    }

    #[test]
    fn record_requires_two_samples() {
        assert!(SignalRecord::scalar(&[1.0]).is_err());
        let r = SignalRecord::scalar(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.horizon(), 2);
        assert_eq!(r.dim(), 1);
    }
}
