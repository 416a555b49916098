use serde::Serialize;

use super::{DataError, SaturationBounds, SignalRecord};

/// One experiment: known disturbance `w`, saturated input `v` and two
/// output records `y`, `y_tilde` measured over the same input with
/// independent noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    w: SignalRecord,
    v: SignalRecord,
    y: SignalRecord,
    y_tilde: SignalRecord,
}

/// Quick quality indicators for a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetDiagnostics {
    /// Sample SNR in dB estimated from the two output records.
    /// Infinite when both records coincide.
    pub snr_db: f64,
    /// Fraction of input entries sitting on the saturation bound.
    pub saturation_hit_ratio: f64,
    pub meets_length_bound: bool,
}

impl Dataset {
    pub fn new(
        w: SignalRecord,
        v: SignalRecord,
        y: SignalRecord,
        y_tilde: SignalRecord,
    ) -> Result<Self, DataError> {
        let t = v.horizon();
        for (name, rec) in [("w", &w), ("y", &y), ("y_tilde", &y_tilde)] {
            if rec.horizon() != t {
                return Err(DataError::HorizonMismatch(format!(
                    "v has T={t} but {name} has T={}",
                    rec.horizon()
                )));
            }
        }
        let nx = y.dim();
        for rec in [&w, &y_tilde] {
            if rec.dim() != nx {
                return Err(DataError::DimensionMismatch {
                    expected: nx,
                    got: rec.dim(),
                });
            }
        }
        Ok(Self { w, v, y, y_tilde })
    }

    /// `(nu + 1) * nx + nu`, the shortest admissible horizon.
    pub fn min_horizon(nx: usize, nu: usize) -> usize {
        (nu + 1) * nx + nu
    }

    pub fn nx(&self) -> usize {
        self.y.dim()
    }

    pub fn nu(&self) -> usize {
        self.v.dim()
    }

    pub fn horizon(&self) -> usize {
        self.v.horizon()
    }

    pub fn w(&self) -> &SignalRecord {
        &self.w
    }

    pub fn v(&self) -> &SignalRecord {
        &self.v
    }

    pub fn y(&self) -> &SignalRecord {
        &self.y
    }

    pub fn y_tilde(&self) -> &SignalRecord {
        &self.y_tilde
    }

    pub fn meets_length_bound(&self) -> bool {
        self.horizon() >= Self::min_horizon(self.nx(), self.nu())
    }

    pub fn check_length_bound(&self) -> Result<(), DataError> {
        if self.meets_length_bound() {
            Ok(())
        } else {
            Err(DataError::LengthBound {
                horizon: self.horizon(),
                required: Self::min_horizon(self.nx(), self.nu()),
            })
        }
    }

    /// Every recorded input lies within `bounds` (with a 1e-12 relative slack).
    pub fn check_bounds(&self, bounds: &SaturationBounds) -> Result<(), DataError> {
        if bounds.channels() != self.nu() {
            return Err(DataError::DimensionMismatch {
                expected: self.nu(),
                got: bounds.channels(),
            });
        }
        for k in 0..self.v.len() {
            for (j, &x) in self.v.sample(k).iter().enumerate() {
                if x.abs() > bounds.get(j) * (1.0 + 1e-12) {
                    return Err(DataError::OutOfBounds {
                        sample: k,
                        channel: j,
                    });
                }
            }
        }
        Ok(())
    }

    /// SNR from the two records: `E[y . y_tilde]` estimates the signal power
    /// and `E|y - y_tilde|^2 / 2` the noise power.
    pub fn snr_db(&self) -> f64 {
        let y = self.y.samples();
        let yt = self.y_tilde.samples();
        let signal = y.dot(yt);
        let noise = (y - yt).norm_squared() / 2.0;
        if noise == 0.0 {
            return f64::INFINITY;
        }
        10.0 * (signal / noise).log10()
    }

    pub fn saturation_hit_ratio(&self, bounds: &SaturationBounds) -> f64 {
        let mut hits = 0usize;
        let mut total = 0usize;
        for k in 0..self.v.len() {
            for (j, &x) in self.v.sample(k).iter().enumerate() {
                total += 1;
                if x.abs() >= bounds.get(j) * (1.0 - 1e-12) {
                    hits += 1;
                }
            }
        }
        hits as f64 / total.max(1) as f64
    }

    pub fn diagnostics(&self, bounds: &SaturationBounds) -> DatasetDiagnostics {
        DatasetDiagnostics {
            snr_db: self.snr_db(),
            saturation_hit_ratio: self.saturation_hit_ratio(bounds),
            meets_length_bound: self.meets_length_bound(),
        }
    }
}
