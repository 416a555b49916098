use nalgebra::DMatrix;

use crate::data::SaturationBounds;
use crate::synth::PerformanceChannel;

/// `x+ = A x + B sat(u) + w`, with an optional performance output
/// `z = C x + D_w w + D_u sat(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSaturatedSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    bounds: SaturationBounds,
    channel: Option<PerformanceChannel>,
}

impl LinearSaturatedSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        bounds: SaturationBounds,
    ) -> Result<Self, super::SimError> {
        let nx = a.nrows();
        if a.ncols() != nx {
            return Err(super::SimError::DimensionMismatch {
                what: "A (square)",
                expected: nx,
                got: a.ncols(),
            });
        }
        if b.nrows() != nx {
            return Err(super::SimError::DimensionMismatch {
                what: "B rows",
                expected: nx,
                got: b.nrows(),
            });
        }
        if bounds.channels() != b.ncols() {
            return Err(super::SimError::DimensionMismatch {
                what: "saturation channels",
                expected: b.ncols(),
                got: bounds.channels(),
            });
        }
        Ok(Self {
            a,
            b,
            bounds,
            channel: None,
        })
    }

    pub fn with_channel(mut self, channel: PerformanceChannel) -> Result<Self, super::SimError> {
        if channel.nx() != self.nx() || channel.nu() != self.nu() || channel.nw() != self.nx() {
            return Err(super::SimError::DimensionMismatch {
                what: "performance channel",
                expected: self.nx(),
                got: channel.nx(),
            });
        }
        self.channel = Some(channel);
        Ok(self)
    }

    /// Open-loop unstable three-state plant with `B = I`, unit saturation
    /// and the scalar performance output used throughout the examples.
    pub fn benchmark() -> Self {
        let a =
            DMatrix::from_row_slice(3, 3, &[1.01, 0.01, 0.0, 0.01, 1.01, 0.01, 0.0, 0.01, 1.01]);
        let b = DMatrix::identity(3, 3);
        let bounds = SaturationBounds::uniform(3, 1.0).expect("positive bound");
        Self::new(a, b, bounds)
            .and_then(|s| s.with_channel(PerformanceChannel::benchmark()))
            .expect("benchmark dimensions are consistent")
    }

    pub fn nx(&self) -> usize {
        self.a.nrows()
    }

    pub fn nu(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn bounds(&self) -> &SaturationBounds {
        &self.bounds
    }

    pub fn channel(&self) -> Option<&PerformanceChannel> {
        self.channel.as_ref()
    }
}
