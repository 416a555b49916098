use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::SynthError;

/// Performance output `z = C x + D_w w + D_u v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRepr", into = "ChannelRepr")]
pub struct PerformanceChannel {
    c: DMatrix<f64>,
    d_u: DMatrix<f64>,
    d_w: DMatrix<f64>,
}

impl PerformanceChannel {
    pub fn new(c: DMatrix<f64>, d_u: DMatrix<f64>, d_w: DMatrix<f64>) -> Result<Self, SynthError> {
        let nz = c.nrows();
        for (name, m) in [("D_u", &d_u), ("D_w", &d_w)] {
            if m.nrows() != nz {
                return Err(SynthError::Dimension(format!(
                    "{name} has {} rows, C has {nz}",
                    m.nrows()
                )));
            }
        }
        Ok(Self { c, d_u, d_w })
    }

    /// Scalar output `z = x_2 - v_1 + v_3 + 0.3 w_2 - 0.8 w_3` on the three-state benchmark.
    pub fn benchmark() -> Self {
        Self {
            c: DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 0.0]),
            d_u: DMatrix::from_row_slice(1, 3, &[-1.0, 0.0, 1.0]),
            d_w: DMatrix::from_row_slice(1, 3, &[0.0, 0.3, -0.8]),
        }
    }

    pub fn nz(&self) -> usize {
        self.c.nrows()
    }

    pub fn nx(&self) -> usize {
        self.c.ncols()
    }

    pub fn nu(&self) -> usize {
        self.d_u.ncols()
    }

    pub fn nw(&self) -> usize {
        self.d_w.ncols()
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d_u(&self) -> &DMatrix<f64> {
        &self.d_u
    }

    pub fn d_w(&self) -> &DMatrix<f64> {
        &self.d_w
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelRepr {
    c: Vec<Vec<f64>>,
    d_u: Vec<Vec<f64>>,
    d_w: Vec<Vec<f64>>,
}

impl TryFrom<ChannelRepr> for PerformanceChannel {
    type Error = SynthError;

    fn try_from(r: ChannelRepr) -> Result<Self, SynthError> {
        let parse = |rows: &[Vec<f64>], name: &str| {
            crate::linalg::matrix_from_rows(rows)
                .ok_or_else(|| SynthError::Dimension(format!("{name}: ragged or empty rows")))
        };
        Self::new(
            parse(&r.c, "C")?,
            parse(&r.d_u, "D_u")?,
            parse(&r.d_w, "D_w")?,
        )
    }
}

impl From<PerformanceChannel> for ChannelRepr {
    fn from(p: PerformanceChannel) -> Self {
        use crate::linalg::matrix_to_rows;
        Self {
            c: matrix_to_rows(&p.c),
            d_u: matrix_to_rows(&p.d_u),
            d_w: matrix_to_rows(&p.d_w),
        }
    }
}
