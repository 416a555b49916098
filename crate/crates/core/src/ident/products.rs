use nalgebra::DMatrix;
use serde::Serialize;

use super::IdentError;
use crate::data::Dataset;
use crate::linalg::{condition_2, numerical_rank, vstack};

/// Largest accepted 2-norm condition number of `XZ`.
pub const CONDITION_LIMIT: f64 = 1e12;

/// `Z = [V_{0,T-1}; Y~_{0,T-1}]`, optionally divided by `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    z: DMatrix<f64>,
    normalized: bool,
}

impl Instrument {
    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }
}

pub fn build_instrument(dataset: &Dataset, normalize: bool) -> Instrument {
    let t = dataset.horizon();
    let v = dataset.v().window(0, t - 1);
    let yt = dataset.y_tilde().window(0, t - 1);
    let mut z = vstack(&[&v, &yt]);
    if normalize {
        z /= t as f64;
    }
    Instrument {
        z,
        normalized: normalize,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductDiagnostics {
    pub xz_condition: f64,
    pub instrument_rank: usize,
    pub regressor_rank: usize,
    pub normalized: bool,
}

/// Instrument-compressed data matrices. `XZ^-1` is factored once here.
#[derive(Debug, Clone)]
pub struct DataProducts {
    yz: DMatrix<f64>,
    vz: DMatrix<f64>,
    y0z: DMatrix<f64>,
    xz: DMatrix<f64>,
    xz_inv: DMatrix<f64>,
    theta: DMatrix<f64>,
    b_cl: DMatrix<f64>,
    nx: usize,
    nu: usize,
    horizon: usize,
    diagnostics: ProductDiagnostics,
}

impl DataProducts {
    /// `Ybar_{1,T} Z'` with `Ybar_{1,T} = Y_{1,T} - W_{0,T-1}`.
    pub fn yz(&self) -> &DMatrix<f64> {
        &self.yz
    }

    /// `V_{0,T-1} Z'`.
    pub fn vz(&self) -> &DMatrix<f64> {
        &self.vz
    }

    /// `Y_{0,T-1} Z'`.
    pub fn y0z(&self) -> &DMatrix<f64> {
        &self.y0z
    }

    /// `[V_{0,T-1}; Y_{0,T-1}] Z'`.
    pub fn xz(&self) -> &DMatrix<f64> {
        &self.xz
    }

    pub fn xz_inv(&self) -> &DMatrix<f64> {
        &self.xz_inv
    }

    pub fn b_cl(&self) -> &DMatrix<f64> {
        &self.b_cl
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn diagnostics(&self) -> &ProductDiagnostics {
        &self.diagnostics
    }

    /// `G = XZ^-1 [K; I]` maps a gain to the data-based parametrization.
    pub fn parametrize_gain(&self, k: &DMatrix<f64>) -> Result<DMatrix<f64>, IdentError> {
        check_shape("K", k, (self.nu, self.nx))?;
        let stacked = vstack(&[k, &DMatrix::identity(self.nx, self.nx)]);
        Ok(&self.xz_inv * stacked)
    }
}

fn check_shape(
    what: &'static str,
    m: &DMatrix<f64>,
    expected: (usize, usize),
) -> Result<(), IdentError> {
    if m.shape() != expected {
        return Err(IdentError::Dimension {
            what,
            expected,
            got: m.shape(),
        });
    }
    Ok(())
}

pub fn compute_products(
    dataset: &Dataset,
    instrument: &Instrument,
) -> Result<DataProducts, IdentError> {
    dataset.check_length_bound()?;
    let (nx, nu, t) = (dataset.nx(), dataset.nu(), dataset.horizon());
    let z = instrument.z();
    if z.shape() != (nu + nx, t) {
        return Err(IdentError::Dimension {
            what: "instrument",
            expected: (nu + nx, t),
            got: z.shape(),
        });
    }
    let required = nu + nx;
    let instrument_rank = numerical_rank(z);
    if instrument_rank != required {
        return Err(IdentError::RankDeficient {
            record: "y_tilde",
            rank: instrument_rank,
            required,
        });
    }
    let v = dataset.v().window(0, t - 1);
    let y0 = dataset.y().window(0, t - 1);
    let regressor = vstack(&[&v, &y0]);
    let regressor_rank = numerical_rank(&regressor);
    if regressor_rank != required {
        return Err(IdentError::RankDeficient {
            record: "y",
            rank: regressor_rank,
            required,
        });
    }

    let ybar = dataset.y().window(1, t) - dataset.w().window(0, t - 1);
    let zt = z.transpose();
    let yz = &ybar * &zt;
    let vz = &v * &zt;
    let y0z = &y0 * &zt;
    let xz = vstack(&[&vz, &y0z]);
    let condition = condition_2(&xz);
    if !(condition <= CONDITION_LIMIT) {
        return Err(IdentError::IllConditioned {
            condition,
            limit: CONDITION_LIMIT,
        });
    }
    let xz_inv = xz
        .clone()
        .lu()
        .try_inverse()
        .ok_or(IdentError::IllConditioned {
            condition: f64::INFINITY,
            limit: CONDITION_LIMIT,
        })?;
    let theta = &yz * &xz_inv;
    let b_cl = theta.columns(0, nu).into_owned();
    Ok(DataProducts {
        yz,
        vz,
        y0z,
        xz,
        xz_inv,
        theta,
        b_cl,
        nx,
        nu,
        horizon: t,
        diagnostics: ProductDiagnostics {
            xz_condition: condition,
            instrument_rank,
            regressor_rank,
            normalized: instrument.normalized(),
        },
    })
}

/// Certainty-equivalence model `[B_hat A_hat] = YZ XZ^-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedModel {
    pub a_hat: DMatrix<f64>,
    pub b_hat: DMatrix<f64>,
}

impl EstimatedModel {
    /// `|[B_hat A_hat] - [B A]|_F`.
    pub fn error(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let da = (&self.a_hat - a).norm_squared();
        let db = (&self.b_hat - b).norm_squared();
        (da + db).sqrt()
    }
}

pub fn estimate_open_loop(products: &DataProducts) -> EstimatedModel {
    let nu = products.nu;
    EstimatedModel {
        a_hat: products.theta.columns(nu, products.nx).into_owned(),
        b_hat: products.theta.columns(0, nu).into_owned(),
    }
}

/// `(A_cl, B_cl) = (YZ G, B_cl)`.
pub fn closed_loop_matrices(
    products: &DataProducts,
    g: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>), IdentError> {
    check_shape("G", g, (products.nu + products.nx, products.nx))?;
    Ok((&products.yz * g, products.b_cl.clone()))
}

/// `|[K; I] - XZ G|_F`.
pub fn consistency_residual(
    products: &DataProducts,
    g: &DMatrix<f64>,
    k: &DMatrix<f64>,
) -> Result<f64, IdentError> {
    check_shape("G", g, (products.nu + products.nx, products.nx))?;
    check_shape("K", k, (products.nu, products.nx))?;
    let stacked = vstack(&[k, &DMatrix::identity(products.nx, products.nx)]);
    Ok((stacked - &products.xz * g).norm())
}
