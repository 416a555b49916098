use nalgebra::{DMatrix, DVector, DVectorView};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::signal::saturate_unchecked;
use super::{DataError, Dataset, SignalRecord};
use crate::sim::LinearSaturatedSystem;

const REFERENCE_STREAM: u64 = 0;
const OUTPUT_NOISE_STREAM: u64 = 1;
const INSTRUMENT_NOISE_STREAM: u64 = 2;
const OVERFLOW_GUARD: f64 = 1e12;

/// Decides the (unsaturated) input applied at each sample of an experiment.
pub trait InputPolicy {
    fn input(&mut self, k: usize, state: DVectorView<'_, f64>) -> DVector<f64>;
}

/// Set-point tracking `u(k) = K (r(k) - x(k))` on the true state.
pub struct SetPointTracking<'a> {
    pub gain: &'a DMatrix<f64>,
    pub reference: &'a SignalRecord,
}

impl InputPolicy for SetPointTracking<'_> {
    fn input(&mut self, k: usize, state: DVectorView<'_, f64>) -> DVector<f64> {
        self.gain * (self.reference.sample(k) - state)
    }
}

/// Open-loop excitation `u(k) = r(k)`.
pub struct OpenLoop<'a> {
    pub signal: &'a SignalRecord,
}

impl InputPolicy for OpenLoop<'_> {
    fn input(&mut self, k: usize, _state: DVectorView<'_, f64>) -> DVector<f64> {
        self.signal.sample(k).into_owned()
    }
}

/// Piecewise-constant reference redrawn uniformly in `[low, high]` at every sample.
pub fn uniform_setpoint_reference(
    dim: usize,
    horizon: usize,
    low: f64,
    high: f64,
    seed: u64,
) -> SignalRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(REFERENCE_STREAM);
    let samples = DMatrix::from_fn(dim, horizon + 1, |_, _| rng.random_range(low..=high));
    SignalRecord::new(samples).expect("reference has at least two samples")
}

/// Run one experiment on `system`.
///
/// With `feedback_gain = Some(K)` the input is `K (r - x)`; otherwise the
/// reference is applied open loop. Both output records share the state
/// trajectory and get independent `N(0, noise_std^2)` noise drawn from
/// distinct streams of `seed`.
pub fn generate_dataset(
    system: &LinearSaturatedSystem,
    feedback_gain: Option<&DMatrix<f64>>,
    reference: &SignalRecord,
    noise_std: f64,
    seed: u64,
    horizon: usize,
) -> Result<Dataset, DataError> {
    if reference.dim() != system.nu() {
        return Err(DataError::DimensionMismatch {
            expected: system.nu(),
            got: reference.dim(),
        });
    }
    if reference.horizon() < horizon {
        return Err(DataError::HorizonMismatch(format!(
            "reference covers T={} but T={horizon} requested",
            reference.horizon()
        )));
    }
    match feedback_gain {
        Some(gain) => {
            if gain.shape() != (system.nu(), system.nx()) {
                return Err(DataError::DimensionMismatch {
                    expected: system.nu() * system.nx(),
                    got: gain.len(),
                });
            }
            let mut policy = SetPointTracking { gain, reference };
            generate_dataset_with_policy(system, &mut policy, None, noise_std, seed, horizon)
        }
        None => {
            let mut policy = OpenLoop { signal: reference };
            generate_dataset_with_policy(system, &mut policy, None, noise_std, seed, horizon)
        }
    }
}

/// Like [`generate_dataset`] with an arbitrary input policy and an optional
/// known disturbance record (zero when absent).
pub fn generate_dataset_with_policy(
    system: &LinearSaturatedSystem,
    policy: &mut dyn InputPolicy,
    disturbance: Option<&SignalRecord>,
    noise_std: f64,
    seed: u64,
    horizon: usize,
) -> Result<Dataset, DataError> {
    let (nx, nu) = (system.nx(), system.nu());
    if horizon < Dataset::min_horizon(nx, nu) {
        return Err(DataError::LengthBound {
            horizon,
            required: Dataset::min_horizon(nx, nu),
        });
    }
    if let Some(w) = disturbance {
        if w.dim() != nx || w.horizon() < horizon {
            return Err(DataError::DimensionMismatch {
                expected: nx,
                got: w.dim(),
            });
        }
    }
    let len = horizon + 1;
    let mut x = DMatrix::zeros(nx, len);
    let mut v = DMatrix::zeros(nu, len);
    let w = match disturbance {
        Some(w) => w.samples().columns(0, len).into_owned(),
        None => DMatrix::zeros(nx, len),
    };
    let mut state = DVector::zeros(nx);
    for k in 0..len {
        x.set_column(k, &state);
        let u = policy.input(k, state.as_view());
        if u.len() != nu {
            return Err(DataError::DimensionMismatch {
                expected: nu,
                got: u.len(),
            });
        }
        let vk = saturate_unchecked(u.as_view(), system.bounds());
        state = system.a() * &state + system.b() * &vk + w.column(k);
        v.set_column(k, &vk);
        let norm = state.norm();
        if !norm.is_finite() || norm > OVERFLOW_GUARD {
            return Err(DataError::Diverged { step: k + 1, norm });
        }
    }

    let mut rng_y = ChaCha8Rng::seed_from_u64(seed);
    rng_y.set_stream(OUTPUT_NOISE_STREAM);
    let mut rng_yt = ChaCha8Rng::seed_from_u64(seed);
    rng_yt.set_stream(INSTRUMENT_NOISE_STREAM);
    let noisy = |rng: &mut ChaCha8Rng| {
        DMatrix::from_fn(nx, len, |i, j| {
            let e: f64 = rng.sample(StandardNormal);
            x[(i, j)] + noise_std * e
        })
    };
    let y = noisy(&mut rng_y);
    let y_tilde = noisy(&mut rng_yt);

    Dataset::new(
        SignalRecord::new(w)?,
        SignalRecord::new(v)?,
        SignalRecord::new(y)?,
        SignalRecord::new(y_tilde)?,
    )
}
