//! Homogeneous self-dual primal-dual interior-point method for
//! semidefinite cone programs, with Nesterov-Todd scaling and Mehrotra
//! predictor-corrector steps.
//!
//! The embedding solves for `(x, y, z, s, tau, kappa)` with
//!
//! ```text
//! [ 0 ]   [  0   A'  G'  c ] [ x   ]   [ 0 ]
//! [ 0 ] = [ -A   0   0   b ] [ y   ] - [ 0 ]
//! [ 0 ]   [ -G   0   0   h ] [ z   ]   [ s ]
//! [ 0 ]   [ -c' -b' -h'  0 ] [ tau ]   [ kappa ]
//! ```
//!
//! so that `tau > 0, kappa = 0` recovers a primal-dual optimal pair and
//! `tau = 0, kappa > 0` an infeasibility certificate.

use nalgebra::{DMatrix, DVector};

use super::compile::ConeProgram;
use super::cone::{identity, jordan, min_eig, BlockScaling, Scaling};

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmSettings {
    pub max_iter: usize,
    pub abstol: f64,
    pub reltol: f64,
    pub feastol: f64,
    pub step_fraction: f64,
    pub refinement: usize,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self {
            max_iter: 100,
            abstol: 1e-8,
            reltol: 1e-8,
            feastol: 1e-8,
            step_fraction: 0.99,
            refinement: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    Stalled,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmPoint {
    pub x: DVector<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmMetrics {
    pub pres: f64,
    pub dres: f64,
    pub gap: f64,
    pub relgap: Option<f64>,
    pub pcost: f64,
    pub dcost: f64,
}

impl IpmMetrics {
    /// Largest ratio of a stopping measure to its tolerance.
    fn merit(&self, st: &IpmSettings) -> f64 {
        let gap = match self.relgap {
            Some(r) => (self.gap / st.abstol).min(r / st.reltol),
            None => self.gap / st.abstol,
        };
        let m = (self.pres / st.feastol)
            .max(self.dres / st.feastol)
            .max(gap);
        if m.is_nan() {
            f64::INFINITY
        } else {
            m
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct IpmOutcome {
    pub status: IpmStatus,
    pub point: IpmPoint,
    pub metrics: IpmMetrics,
    pub iterations: usize,
    /// Best iterate's stopping measures are within `1e3` of the tolerances.
    pub near_optimal: bool,
}

/// Null-space basis of `A` computed once per program: `A' = Q1 Ra`,
/// columns of `Q2` span `ker A`.
struct EqualityBasis {
    q1: DMatrix<f64>,
    q2: DMatrix<f64>,
    ra: DMatrix<f64>,
}

impl EqualityBasis {
    fn new(a: &DMatrix<f64>) -> Self {
        let (p, n) = a.shape();
        let mut wide = DMatrix::zeros(n, n + p);
        wide.view_mut((0, 0), (n, p)).copy_from(&a.transpose());
        wide.view_mut((0, p), (n, n))
            .copy_from(&DMatrix::identity(n, n));
        let qr = wide.qr();
        let q = qr.q();
        let r = qr.r();
        Self {
            q1: q.columns(0, p).into_owned(),
            q2: q.columns(p, n - p).into_owned(),
            ra: r.view((0, 0), (p, p)).into_owned(),
        }
    }
}

struct Kkt<'a> {
    prog: &'a ConeProgram,
    scaling: &'a Scaling,
    eq: &'a EqualityBasis,
    gt: DMatrix<f64>,
    /// Triangular factor of `G~ Q2`.
    rh: DMatrix<f64>,
}

impl<'a> Kkt<'a> {
    /// Factor the reduced system `[G~'G~ A'; A 0]` with `G~ = W^-T G`
    /// through a QR factorization of `G~ Q2`, which avoids squaring the
    /// condition number of `G~`.
    fn factor(prog: &'a ConeProgram, scaling: &'a Scaling, eq: &'a EqualityBasis) -> Option<Self> {
        let n = prog.n();
        let mut gt = DMatrix::zeros(prog.g.nrows(), n);
        for j in 0..n {
            let col = scaling.wit(&prog.g.column(j).into_owned());
            gt.set_column(j, &col);
        }
        if gt.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let h = &gt * &eq.q2;
        let rh = h.qr().r();
        let dmax = rh.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let dmin = rh
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |a, v| a.min(v.abs()));
        if rh.nrows() > 0 && !(dmin > dmax * 1e-15) {
            return None;
        }
        Some(Self {
            prog,
            scaling,
            eq,
            gt,
            rh,
        })
    }

    fn solve_once(
        &self,
        q1: &DVector<f64>,
        q2: &DVector<f64>,
        q3: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let eq = self.eq;
        let t3 = self.scaling.wit(q3);
        // A dx = -q2 fixes the range-space component.
        let x1 = eq.ra.tr_solve_upper_triangular(&(-q2))?;
        let xp = &eq.q1 * &x1;
        let resid = &t3 - &self.gt * &xp;
        let h = &self.gt * &eq.q2;
        let rhs = eq.q2.transpose() * q1 + h.transpose() * resid;
        let w = self.rh.tr_solve_upper_triangular(&rhs)?;
        let xi = self.rh.solve_upper_triangular(&w)?;
        let dx = xp + &eq.q2 * xi;
        let r_dx = &t3 - &self.gt * &dx;
        let dy = eq
            .ra
            .solve_upper_triangular(&(eq.q1.transpose() * (q1 + self.gt.transpose() * &r_dx)))?;
        let dz = self.scaling.winv(&(-r_dx));
        Some((dx, dy, dz))
    }

    /// Apply `[0 A' G'; -A 0 0; G 0 -W'W]`.
    fn apply(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        z: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let pr = self.prog;
        let k1 = pr.a.transpose() * y + pr.g.transpose() * z;
        let k2 = -(&pr.a * x);
        let k3 = &pr.g * x - self.scaling.wt(&self.scaling.w(z));
        (k1, k2, k3)
    }

    fn solve(
        &self,
        q1: &DVector<f64>,
        q2: &DVector<f64>,
        q3: &DVector<f64>,
        refinement: usize,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let (mut x, mut y, mut z) = self.solve_once(q1, q2, q3)?;
        for _ in 0..refinement {
            let (k1, k2, k3) = self.apply(&x, &y, &z);
            let (e1, e2, e3) = (q1 - k1, q2 - k2, q3 - k3);
            let (cx, cy, cz) = self.solve_once(&e1, &e2, &e3)?;
            x += cx;
            y += cy;
            z += cz;
        }
        Some((x, y, z))
    }
}

struct Direction {
    dx: DVector<f64>,
    dy: DVector<f64>,
    dtau: f64,
    dkappa: f64,
    dz: DVector<f64>,
    ds: DVector<f64>,
    /// Scaled directions `W dz` and `W^-T ds`.
    dz_s: DVector<f64>,
    ds_s: DVector<f64>,
}

fn norm2(v: &DVector<f64>) -> f64 {
    v.norm()
}

pub(crate) fn solve(prog: &ConeProgram, st: &IpmSettings) -> IpmOutcome {
    let n = prog.n();
    let p = prog.a.nrows();
    let m = prog.g.nrows();
    let blocks = prog.blocks.clone();
    let degree = prog.degree() as f64;
    let e = identity(&blocks);

    let resx0 = norm2(&prog.c).max(1.0);
    let resy0 = norm2(&prog.b).max(1.0);
    let resz0 = norm2(&prog.h).max(1.0);

    let ident = Scaling {
        blocks: blocks
            .iter()
            .map(|&k| BlockScaling {
                r: DMatrix::identity(k, k),
                rinv: DMatrix::identity(k, k),
                lambda: DVector::from_element(k, 1.0),
            })
            .collect(),
    };

    let fail = |status, iterations| IpmOutcome {
        status,
        point: IpmPoint {
            x: DVector::zeros(n),
        },
        metrics: IpmMetrics {
            pres: f64::INFINITY,
            dres: f64::INFINITY,
            gap: f64::INFINITY,
            relgap: None,
            pcost: f64::NAN,
            dcost: f64::NAN,
        },
        iterations,
        near_optimal: false,
    };

    // Least-squares starting point.
    let eq = EqualityBasis::new(&prog.a);
    let Some(kkt0) = Kkt::factor(prog, &ident, &eq) else {
        return fail(IpmStatus::Stalled, 0);
    };
    let zero_n = DVector::zeros(n);
    let zero_p = DVector::zeros(p);
    let zero_m = DVector::zeros(m);
    let Some((mut x, _, dz0)) = kkt0.solve(&zero_n, &(-&prog.b), &prog.h, st.refinement) else {
        return fail(IpmStatus::Stalled, 0);
    };
    let mut s = -dz0;
    let Some((_, mut y, mut z)) = kkt0.solve(&(-&prog.c), &zero_p, &zero_m, st.refinement) else {
        return fail(IpmStatus::Stalled, 0);
    };
    drop(kkt0);

    let shift = |v: &mut DVector<f64>| {
        let t = -min_eig(v, &blocks);
        if t >= -1e-8 * norm2(v).max(1.0) {
            *v += &e * (1.0 + t);
        }
    };
    shift(&mut s);
    shift(&mut z);
    let mut tau = 1.0f64;
    let mut kappa = 1.0f64;
    let mut scaling = Scaling::new(&s, &z, &blocks);

    let mut best: Option<(f64, IpmPoint, IpmMetrics)> = None;
    let mut small_steps = 0;
    let mut status = IpmStatus::MaxIterations;
    let mut iterations = 0;

    for iter in 0..=st.max_iter {
        iterations = iter;
        let hrx = prog.a.transpose() * &y + prog.g.transpose() * &z;
        let rx = &hrx + &prog.c * tau;
        let hry = -(&prog.a * &x);
        let ry = &hry + &prog.b * tau;
        let hrz = &s + &prog.g * &x;
        let rz = &hrz - &prog.h * tau;
        let cx = prog.c.dot(&x);
        let by = prog.b.dot(&y);
        let hz = prog.h.dot(&z);
        let rt = kappa + cx + by + hz;
        let sz = s.dot(&z);

        // Residuals are measured relative to the size of the terms that
        // make them up, so that iterates of large norm are judged fairly.
        let gx = &prog.g * &x;
        let ax = &prog.a * &x;
        let aty = prog.a.transpose() * &y;
        let gtz = prog.g.transpose() * &z;
        let pscale_z = (resz0 + (norm2(&gx) + norm2(&s)) / tau).max(1.0);
        let pscale_y = (resy0 + norm2(&ax) / tau).max(1.0);
        let dscale = (resx0 + (norm2(&aty) + norm2(&gtz)) / tau).max(1.0);
        let metrics = IpmMetrics {
            pres: (norm2(&ry) / pscale_y).max(norm2(&rz) / pscale_z) / tau,
            dres: norm2(&rx) / dscale / tau,
            gap: sz / (tau * tau),
            pcost: cx / tau,
            dcost: -(by + hz) / tau,
            relgap: None,
        };
        let relgap = if metrics.pcost < 0.0 {
            Some(metrics.gap / -metrics.pcost)
        } else if metrics.dcost > 0.0 {
            Some(metrics.gap / metrics.dcost)
        } else {
            None
        };
        let metrics = IpmMetrics { relgap, ..metrics };
        if !(metrics.pres.is_finite() && metrics.dres.is_finite() && sz.is_finite()) {
            status = IpmStatus::Stalled;
            break;
        }
        let point = IpmPoint { x: &x / tau };
        let merit = metrics.merit(st);
        if best.as_ref().is_none_or(|(bm, _, _)| merit < *bm) {
            best = Some((merit, point.clone(), metrics.clone()));
        }

        let pinf = if hz + by < 0.0 {
            Some(norm2(&hrx) / resx0 / -(hz + by))
        } else {
            None
        };
        let dinf = if cx < 0.0 {
            Some((norm2(&hry) / resy0).max(norm2(&hrz) / resz0) / -cx)
        } else {
            None
        };

        let converged = metrics.pres <= st.feastol
            && metrics.dres <= st.feastol
            && (metrics.gap <= st.abstol || relgap.is_some_and(|r| r <= st.reltol));
        if converged {
            return IpmOutcome {
                status: IpmStatus::Optimal,
                point,
                metrics,
                iterations: iter,
                near_optimal: true,
            };
        }
        if let Some(pi) = pinf {
            if pi <= st.feastol {
                return IpmOutcome {
                    status: IpmStatus::PrimalInfeasible,
                    point,
                    metrics,
                    iterations: iter,
                    near_optimal: false,
                };
            }
        }
        if let Some(di) = dinf {
            if di <= st.feastol {
                return IpmOutcome {
                    status: IpmStatus::DualInfeasible,
                    point: IpmPoint { x: &x / -cx },
                    metrics,
                    iterations: iter,
                    near_optimal: false,
                };
            }
        }
        if iter == st.max_iter {
            break;
        }

        let mu = (sz + tau * kappa) / (degree + 1.0);
        let Some(kkt) = Kkt::factor(prog, &scaling, &eq) else {
            status = IpmStatus::Stalled;
            break;
        };
        let Some((x2, y2, z2)) = kkt.solve(&(-&prog.c), &(-&prog.b), &prog.h, st.refinement) else {
            status = IpmStatus::Stalled;
            break;
        };
        let denom = prog.c.dot(&x2) + prog.b.dot(&y2) + prog.h.dot(&z2) - kappa / tau;
        let lambda = scaling.lambda();
        let lam_sq = jordan(&lambda, &lambda, &blocks);

        let direction = |d_s: &DVector<f64>, d_k: f64| -> Option<Direction> {
            let r = scaling.lambda_solve(d_s);
            let q3 = -&rz - scaling.wt(&r);
            let (x1, y1, z1) = kkt.solve(&(-&rx), &(-&ry), &q3, st.refinement)?;
            let dtau =
                (-rt - d_k / tau - (prog.c.dot(&x1) + prog.b.dot(&y1) + prog.h.dot(&z1))) / denom;
            let dx = x1 + &x2 * dtau;
            let dy = y1 + &y2 * dtau;
            let dz = z1 + &z2 * dtau;
            let dz_s = scaling.w(&dz);
            // ds from the linearized primal equation keeps G x + s - h tau
            // exactly affine along the step.
            let ds = -&rz - &prog.g * &dx + &prog.h * dtau;
            let ds_s = scaling.wit(&ds);
            let dkappa = (d_k - kappa * dtau) / tau;
            Some(Direction {
                dx,
                dy,
                dtau,
                dkappa,
                dz,
                ds,
                dz_s,
                ds_s,
            })
        };
        let max_step = |d: &Direction| -> f64 {
            let mut a = scaling.max_step(&d.ds_s).min(scaling.max_step(&d.dz_s));
            if d.dtau < 0.0 {
                a = a.min(-tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                a = a.min(-kappa / d.dkappa);
            }
            a
        };

        let Some(aff) = direction(&(-&lam_sq), -tau * kappa) else {
            status = IpmStatus::Stalled;
            break;
        };
        let alpha_aff = max_step(&aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);
        let d_s = -&lam_sq - jordan(&aff.ds_s, &aff.dz_s, &blocks) + &e * (sigma * mu);
        let d_k = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
        let Some(dir) = direction(&d_s, d_k) else {
            status = IpmStatus::Stalled;
            break;
        };
        let alpha = (st.step_fraction * max_step(&dir)).min(1.0);
        if !alpha.is_finite() || alpha < 1e-10 {
            small_steps += 1;
            if small_steps >= 3 || !alpha.is_finite() {
                status = IpmStatus::Stalled;
                break;
            }
            continue;
        }
        small_steps = 0;

        x += &dir.dx * alpha;
        y += &dir.dy * alpha;
        tau += dir.dtau * alpha;
        kappa += dir.dkappa * alpha;
        s += &dir.ds * alpha;
        z += &dir.dz * alpha;
        drop(kkt);
        scaling = Scaling::new(&s, &z, &blocks);
    }

    let (merit, point, metrics) = best.expect("at least one iterate evaluated");
    IpmOutcome {
        status,
        point,
        metrics,
        iterations,
        near_optimal: merit <= 1e3,
    }
}
