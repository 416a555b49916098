use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::SignalRecord;

/// `w(t) = a [sin(t pi / 10 + 2 pi i / n)]_i` for `t = 0..=horizon`.
pub fn sinusoid_disturbance(dim: usize, horizon: usize, amplitude: f64) -> SignalRecord {
    let samples = DMatrix::from_fn(dim, horizon + 1, |i, t| {
        amplitude * (t as f64 * PI / 10.0 + 2.0 * PI * i as f64 / dim as f64).sin()
    });
    SignalRecord::new(samples).expect("horizon >= 1")
}

/// Keep samples while the running energy stays within `bound` and zero the
/// rest; the sample that would cross the bound is scaled to land exactly on it.
pub fn truncate_to_energy(w: &SignalRecord, bound: f64) -> SignalRecord {
    let budget = bound * bound;
    let mut used = 0.0;
    let mut out = w.samples().clone();
    for k in 0..out.ncols() {
        let e = out.column(k).norm_squared();
        if used + e <= budget {
            used += e;
            continue;
        }
        let remaining = (budget - used).max(0.0);
        let scale = if e > 0.0 { (remaining / e).sqrt() } else { 0.0 };
        out.column_mut(k).scale_mut(scale);
        for j in k + 1..out.ncols() {
            out.column_mut(j).fill(0.0);
        }
        break;
    }
    SignalRecord::new(out).expect("shape unchanged")
}

/// `s e_i` and `-s e_i` applied at `t = 0`, for every basis direction.
pub fn impulse_suite(dim: usize, horizon: usize, s: f64) -> Vec<SignalRecord> {
    let mut suite = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut m = DMatrix::zeros(dim, horizon + 1);
            m[(i, 0)] = sign * s;
            suite.push(SignalRecord::new(m).expect("horizon >= 1"));
        }
    }
    suite
}

/// Gaussian bursts of random length (at most `max_len` samples), rescaled to
/// energy in `(0, s]`.
pub fn random_energy_suite(
    dim: usize,
    horizon: usize,
    s: f64,
    count: usize,
    max_len: usize,
    seed: u64,
) -> Vec<SignalRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_len = max_len.clamp(1, horizon + 1);
    (0..count)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            let mut m = DMatrix::zeros(dim, horizon + 1);
            for k in 0..len {
                for i in 0..dim {
                    m[(i, k)] = rng.sample::<f64, _>(StandardNormal);
                }
            }
            let target = s * rng.random_range(0.5..=1.0);
            let e = m.norm();
            if e > 0.0 {
                m *= target / e;
            }
            SignalRecord::new(m).expect("horizon >= 1")
        })
        .collect()
}

/// `count` signals with energy at most `s`: the `2 dim` signed impulses,
/// the sinusoid of amplitude 0.1 truncated to `s`, then random bursts.
pub fn standard_suite(
    dim: usize,
    horizon: usize,
    s: f64,
    count: usize,
    seed: u64,
) -> Vec<SignalRecord> {
    let mut suite = impulse_suite(dim, horizon, s);
    suite.push(truncate_to_energy(
        &sinusoid_disturbance(dim, horizon, 0.1),
        s,
    ));
    let extra = count.saturating_sub(suite.len());
    suite.extend(random_energy_suite(
        dim,
        horizon,
        s,
        extra,
        horizon / 4 + 1,
        seed,
    ));
    suite
}
