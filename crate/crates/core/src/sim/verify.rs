use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{condition_number, simulate, Ellipsoid, LinearSaturatedSystem, SimError, Trajectory};
use crate::data::SignalRecord;

const CONVERGENCE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub holds: bool,
    /// `max_t |x(t)| / (eta^t sqrt(c(Q)) |x(0)|)`; zero for the trivial run.
    pub worst_ratio: f64,
}

/// Check `|x(t)| <= eta^t sqrt(c(Q)) |x(0)|` along the whole trajectory.
pub fn verify_convergence_bound(
    traj: &Trajectory,
    q: &DMatrix<f64>,
    eta: f64,
) -> Result<ConvergenceReport, SimError> {
    let c = condition_number(q)?;
    let norms = traj.state_norms();
    let x0 = norms[0];
    if x0 == 0.0 {
        let holds = norms.iter().all(|&n| n == 0.0);
        return Ok(ConvergenceReport {
            holds,
            worst_ratio: if holds { 0.0 } else { f64::INFINITY },
        });
    }
    let scale = c.sqrt() * x0;
    let mut worst = 0.0f64;
    let mut holds = true;
    let mut envelope = scale;
    for &n in &norms {
        if n > envelope * (1.0 + CONVERGENCE_RTOL) {
            holds = false;
        }
        let ratio = if envelope > 0.0 {
            n / envelope
        } else if n == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(ratio);
        envelope *= eta;
    }
    Ok(ConvergenceReport {
        holds,
        worst_ratio: worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachableReport {
    pub holds: bool,
    /// Largest `x' Q^-1 x / s^2` seen over all runs.
    pub worst_level: f64,
    pub runs: usize,
    pub diverged: usize,
}

impl ReachableReport {
    /// `1 - worst_level`; nonnegative when every state stayed inside.
    pub fn margin(&self) -> f64 {
        1.0 - self.worst_level
    }
}

fn check_energy(suite: &[SignalRecord], horizon: usize, s: f64) -> Result<(), SimError> {
    for (index, w) in suite.iter().enumerate() {
        let n = w.len().min(horizon);
        let energy = w.samples().columns(0, n).norm();
        if energy > s * (1.0 + 1e-12) {
            return Err(SimError::EnergyBound {
                index,
                energy,
                bound: s,
            });
        }
    }
    Ok(())
}

/// Simulate every disturbance from `x(0) = 0` and test that the states stay
/// in `e` up to `tol` on the normalized level.
pub fn verify_reachable(
    system: &LinearSaturatedSystem,
    k: &DMatrix<f64>,
    e: &Ellipsoid,
    suite: &[SignalRecord],
    horizon: usize,
    tol: f64,
) -> Result<ReachableReport, SimError> {
    check_energy(suite, horizon, e.level())?;
    let x0 = DVector::zeros(system.nx());
    let s2 = e.level() * e.level();
    let mut worst = 0.0f64;
    let mut diverged = 0;
    for w in suite {
        match simulate(system, k, &x0, Some(w), horizon) {
            Ok(tr) => {
                for x in tr.states.column_iter() {
                    worst = worst.max(e.quadratic_form(&x.into_owned()) / s2);
                }
            }
            Err(SimError::Diverged { .. }) => {
                diverged += 1;
                worst = f64::INFINITY;
            }
            Err(other) => return Err(other),
        }
    }
    Ok(ReachableReport {
        holds: diverged == 0 && worst <= 1.0 + tol,
        worst_level: worst,
        runs: suite.len(),
        diverged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainRun {
    pub w_norm: f64,
    pub z_norm: f64,
    /// `None` for a zero-energy disturbance.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainReport {
    pub holds: bool,
    pub max_ratio: f64,
    pub skipped: usize,
    pub runs: Vec<GainRun>,
}

/// Check `|z|_2 <= gamma |w|_2 + tol` from `x(0) = 0` for each disturbance.
pub fn verify_l2_gain(
    system: &LinearSaturatedSystem,
    k: &DMatrix<f64>,
    gamma: f64,
    s: f64,
    suite: &[SignalRecord],
    horizon: usize,
    tol: f64,
) -> Result<GainReport, SimError> {
    if system.channel().is_none() {
        return Err(SimError::MissingChannel);
    }
    check_energy(suite, horizon, s)?;
    let x0 = DVector::zeros(system.nx());
    let mut runs = Vec::with_capacity(suite.len());
    let mut holds = true;
    let mut max_ratio = 0.0f64;
    let mut skipped = 0;
    for w in suite {
        let tr = match simulate(system, k, &x0, Some(w), horizon) {
            Ok(tr) => tr,
            Err(SimError::Diverged { .. }) => {
                holds = false;
                max_ratio = f64::INFINITY;
                let n = w.len().min(horizon);
                runs.push(GainRun {
                    w_norm: w.samples().columns(0, n).norm(),
                    z_norm: f64::INFINITY,
                    ratio: Some(f64::INFINITY),
                });
                continue;
            }
            Err(other) => return Err(other),
        };
        let w_norm = tr.disturbance_energy();
        let z_norm = tr.output_energy().expect("channel present");
        if w_norm == 0.0 {
            skipped += 1;
            runs.push(GainRun {
                w_norm,
                z_norm,
                ratio: None,
            });
            continue;
        }
        let ratio = z_norm / w_norm;
        max_ratio = max_ratio.max(ratio);
        if z_norm > gamma * w_norm + tol {
            holds = false;
        }
        runs.push(GainRun {
            w_norm,
            z_norm,
            ratio: Some(ratio),
        });
    }
    Ok(GainReport {
        holds,
        max_ratio,
        skipped,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SaturationBounds;
    use crate::sim::{impulse_suite, sinusoid_disturbance, truncate_to_energy};
    use crate::synth::PerformanceChannel;

    fn stable_benchmark_gain() -> DMatrix<f64> {
        -DMatrix::<f64>::identity(3, 3) * 0.9
    }

    #[test]
    fn trivial_trajectory_holds() {
        let sys = LinearSaturatedSystem::benchmark();
        let tr = simulate(&sys, &stable_benchmark_gain(), &DVector::zeros(3), None, 10).unwrap();
        let r = verify_convergence_bound(&tr, &DMatrix::identity(3, 3), 0.5).unwrap();
        assert!(r.holds);
        assert_eq!(r.worst_ratio, 0.0);
    }

    #[test]
    fn unstable_loop_fails_bound() {
        let sys = LinearSaturatedSystem::benchmark();
        let k = DMatrix::zeros(3, 3);
        let tr = simulate(&sys, &k, &DVector::from_element(3, 1.0), None, 30).unwrap();
        let r = verify_convergence_bound(&tr, &DMatrix::identity(3, 3), 0.9).unwrap();
        assert!(!r.holds);
    }

    #[test]
    fn bound_monotone_in_eta() {
        let sys = LinearSaturatedSystem::benchmark();
        let tr = simulate(
            &sys,
            &stable_benchmark_gain(),
            &DVector::from_vec(vec![0.3, -0.2, 0.1]),
            None,
            30,
        )
        .unwrap();
        let q = DMatrix::identity(3, 3);
        assert!(verify_convergence_bound(&tr, &q, 0.2).unwrap().holds);
        assert!(verify_convergence_bound(&tr, &q, 0.5).unwrap().holds);
    }

    #[test]
    fn zero_disturbance_stays_at_origin() {
        let sys = LinearSaturatedSystem::benchmark();
        let e = Ellipsoid::new(&DMatrix::identity(3, 3), 1.0).unwrap();
        let suite = vec![SignalRecord::zeros(3, 50)];
        let r = verify_reachable(&sys, &stable_benchmark_gain(), &e, &suite, 50, 0.0).unwrap();
        assert!(r.holds);
        assert_eq!(r.worst_level, 0.0);
    }

    #[test]
    fn energy_precondition_enforced() {
        let sys = LinearSaturatedSystem::benchmark();
        let e = Ellipsoid::new(&DMatrix::identity(3, 3), 0.1).unwrap();
        let suite = impulse_suite(3, 10, 1.0);
        assert!(matches!(
            verify_reachable(&sys, &stable_benchmark_gain(), &e, &suite, 10, 0.0),
            Err(SimError::EnergyBound { .. })
        ));
    }

    #[test]
    fn feedthrough_channel_has_unit_ratio() {
        let ch = PerformanceChannel::new(
            DMatrix::zeros(3, 3),
            DMatrix::zeros(3, 3),
            DMatrix::identity(3, 3),
        )
        .unwrap();
        let sys = LinearSaturatedSystem::new(
            LinearSaturatedSystem::benchmark().a().clone(),
            DMatrix::identity(3, 3),
            SaturationBounds::uniform(3, 1.0).unwrap(),
        )
        .unwrap()
        .with_channel(ch)
        .unwrap();
        let mut suite = vec![SignalRecord::zeros(3, 100)];
        suite.push(truncate_to_energy(&sinusoid_disturbance(3, 100, 0.1), 1.0));
        let r =
            verify_l2_gain(&sys, &stable_benchmark_gain(), 1.0, 1.0, &suite, 100, 1e-12).unwrap();
        assert_eq!(r.skipped, 1);
        assert!((r.max_ratio - 1.0).abs() < 1e-12);
        assert!(r.holds);
    }
}
