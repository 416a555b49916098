use std::io::Write;

use nalgebra::{DMatrix, DVector};

use super::{LinearSaturatedSystem, SimError};
use crate::data::saturate_unchecked;
use crate::data::SignalRecord;

const OVERFLOW_GUARD: f64 = 1e12;

/// Closed-loop run of `u = K x`, `v = sat(u)`.
///
/// `states` has `T + 1` columns; the per-step signals have `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: DMatrix<f64>,
    pub inputs: DMatrix<f64>,
    pub saturated: DMatrix<f64>,
    pub disturbance: DMatrix<f64>,
    pub outputs: Option<DMatrix<f64>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn state(&self, k: usize) -> DVector<f64> {
        self.states.column(k).into_owned()
    }

    pub fn state_norms(&self) -> Vec<f64> {
        self.states.column_iter().map(|c| c.norm()).collect()
    }

    /// First step from which `|x(k)|` stays below `tol`, if any.
    pub fn settling_step(&self, tol: f64) -> Option<usize> {
        let norms = self.state_norms();
        let mut last_above = None;
        for (k, n) in norms.iter().enumerate() {
            if *n >= tol {
                last_above = Some(k);
            }
        }
        match last_above {
            None => Some(0),
            Some(k) if k + 1 < norms.len() => Some(k + 1),
            Some(_) => None,
        }
    }

    pub fn disturbance_energy(&self) -> f64 {
        self.disturbance.norm()
    }

    pub fn output_energy(&self) -> Option<f64> {
        self.outputs.as_ref().map(|z| z.norm())
    }

    /// CSV with columns `k, x.., u.., v.., w.., z..`; the per-step columns
    /// are left empty on the final state row.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<(), csv::Error> {
        let nx = self.states.nrows();
        let nu = self.inputs.nrows();
        let nz = self.outputs.as_ref().map_or(0, |z| z.nrows());
        let mut header = vec!["k".to_string()];
        header.extend((0..nx).map(|i| format!("x{i}")));
        header.extend((0..nu).map(|i| format!("u{i}")));
        header.extend((0..nu).map(|i| format!("v{i}")));
        header.extend((0..nx).map(|i| format!("w{i}")));
        header.extend((0..nz).map(|i| format!("z{i}")));
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(&header)?;
        let t = self.horizon();
        for k in 0..=t {
            let mut row = vec![k.to_string()];
            row.extend(self.states.column(k).iter().map(|x| format!("{x:?}")));
            let per_step = |m: &DMatrix<f64>, row: &mut Vec<String>| {
                if k < t {
                    row.extend(m.column(k).iter().map(|x| format!("{x:?}")));
                } else {
                    row.extend(std::iter::repeat_n(String::new(), m.nrows()));
                }
            };
            per_step(&self.inputs, &mut row);
            per_step(&self.saturated, &mut row);
            per_step(&self.disturbance, &mut row);
            if let Some(z) = &self.outputs {
                per_step(z, &mut row);
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Simulate `T` steps from `x0`. `w` supplies `w(0..T)`; missing samples are zero.
pub fn simulate(
    system: &LinearSaturatedSystem,
    k: &DMatrix<f64>,
    x0: &DVector<f64>,
    w: Option<&SignalRecord>,
    horizon: usize,
) -> Result<Trajectory, SimError> {
    let (nx, nu) = (system.nx(), system.nu());
    if horizon == 0 {
        return Err(SimError::EmptyHorizon);
    }
    if k.shape() != (nu, nx) {
        return Err(SimError::DimensionMismatch {
            what: "gain K",
            expected: nu * nx,
            got: k.len(),
        });
    }
    if x0.len() != nx {
        return Err(SimError::DimensionMismatch {
            what: "initial state",
            expected: nx,
            got: x0.len(),
        });
    }
    let mut wm = DMatrix::zeros(nx, horizon);
    if let Some(w) = w {
        if w.dim() != nx {
            return Err(SimError::DimensionMismatch {
                what: "disturbance",
                expected: nx,
                got: w.dim(),
            });
        }
        let n = w.len().min(horizon);
        wm.columns_mut(0, n).copy_from(&w.samples().columns(0, n));
    }

    let mut states = DMatrix::zeros(nx, horizon + 1);
    let mut inputs = DMatrix::zeros(nu, horizon);
    let mut saturated = DMatrix::zeros(nu, horizon);
    states.set_column(0, x0);
    let mut x = x0.clone();
    for t in 0..horizon {
        let u = k * &x;
        let v = saturate_unchecked(u.as_view(), system.bounds());
        x = system.a() * &x + system.b() * &v + wm.column(t);
        let norm = x.norm();
        if !norm.is_finite() || norm > OVERFLOW_GUARD {
            return Err(SimError::Diverged { step: t + 1, norm });
        }
        inputs.set_column(t, &u);
        saturated.set_column(t, &v);
        states.set_column(t + 1, &x);
    }
    let outputs = system
        .channel()
        .map(|ch| ch.c() * states.columns(0, horizon) + ch.d_w() * &wm + ch.d_u() * &saturated);
    Ok(Trajectory {
        states,
        inputs,
        saturated,
        disturbance: wm,
        outputs,
    })
}
