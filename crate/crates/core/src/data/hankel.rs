use nalgebra::{DMatrix, DVectorView};

use super::{DataError, SignalRecord};
use crate::linalg::numerical_rank;

/// Block Hankel matrix of a signal window.
///
/// Block row `r`, column `c` holds `v(k0 + r + c)`. The window runs from
/// `v(k0)` (top left) to `v(k1)` (bottom right), so there are
/// `k1 - k0 - L + 2` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix {
    entries: DMatrix<f64>,
    block_rows: usize,
    signal_dim: usize,
}

impl HankelMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn signal_dim(&self) -> usize {
        self.signal_dim
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    /// The `signal_dim`-vector stored in block row `r`, column `c`.
    pub fn block(&self, r: usize, c: usize) -> DVectorView<'_, f64> {
        self.entries.generic_view(
            (r * self.signal_dim, c),
            (nalgebra::Dyn(self.signal_dim), nalgebra::Const::<1>),
        )
    }
}

/// `V_{k0,L,k1}`. Requires `k0 < k1 <= T` and `1 <= L <= k1 - k0 + 1`.
pub fn hankel(
    v: &SignalRecord,
    k0: usize,
    block_rows: usize,
    k1: usize,
) -> Result<HankelMatrix, DataError> {
    let horizon = v.horizon();
    if k0 >= k1 || k1 > horizon || block_rows == 0 || block_rows > k1 - k0 + 1 {
        return Err(DataError::InvalidHankelRange {
            k0,
            block_rows,
            k1,
            horizon,
        });
    }
    let n = v.dim();
    let cols = k1 - k0 + 2 - block_rows;
    let mut entries = DMatrix::zeros(n * block_rows, cols);
    for r in 0..block_rows {
        for c in 0..cols {
            entries
                .view_mut((r * n, c), (n, 1))
                .copy_from(&v.sample(k0 + r + c));
        }
    }
    Ok(HankelMatrix {
        entries,
        block_rows,
        signal_dim: n,
    })
}

/// True iff `V_{0,L,T-1}` has full row rank `n * L`.
pub fn is_persistently_exciting(v: &SignalRecord, order: usize) -> Result<bool, DataError> {
    let t = v.horizon();
    if t < 2 {
        return Err(DataError::HorizonTooShort(v.len()));
    }
    let h = hankel(v, 0, order, t - 1)?;
    if h.ncols() < v.dim() * order {
        return Ok(false);
    }
    Ok(numerical_rank(h.entries()) == v.dim() * order)
}
