use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::commands::load_result;
use super::table::{mean_std, num, opt, Table};
use super::{run_parallel, simulation_path, CampaignReport, CliError, Experiment, SeedFailure};
use crate::sim::{
    simulate, standard_suite, verify_convergence_bound, verify_l2_gain, verify_reachable,
    Ellipsoid, SimError,
};
use crate::synth::{ObjectiveKind, SynthesisResult};

const INITIAL_STATE_STREAM: u64 = 3;

/// Running sums of `x` and `v` over runs, per time step.
#[derive(Debug, Clone)]
struct Bands {
    count: usize,
    sum: DMatrix<f64>,
    sumsq: DMatrix<f64>,
}

impl Bands {
    fn new(rows: usize, cols: usize) -> Self {
        Self {
            count: 0,
            sum: DMatrix::zeros(rows, cols),
            sumsq: DMatrix::zeros(rows, cols),
        }
    }

    fn add(&mut self, m: &DMatrix<f64>) {
        self.count += 1;
        self.sum += m;
        self.sumsq += m.component_mul(m);
    }

    fn merge(&mut self, o: &Bands) {
        self.count += o.count;
        self.sum += &o.sum;
        self.sumsq += &o.sumsq;
    }

    fn mean_std(&self, i: usize, k: usize) -> (f64, f64) {
        if self.count == 0 {
            return (f64::NAN, f64::NAN);
        }
        let n = self.count as f64;
        let mean = self.sum[(i, k)] / n;
        let var = if self.count > 1 {
            ((self.sumsq[(i, k)] - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, var.sqrt())
    }
}

struct SeedSim {
    runs: Table,
    summary: Vec<String>,
    bands: Option<Bands>,
    gain_pairs: Vec<(usize, f64, f64)>,
    problem: Option<String>,
}

const SUMMARY: [&str; 13] = [
    "seed",
    "program",
    "status",
    "runs",
    "converged",
    "mean_settle_step",
    "inside",
    "bound_violations",
    "worst_level",
    "max_ratio",
    "gamma",
    "holds",
    "error",
];

fn initial_states(nx: usize, count: usize, half: f64, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INITIAL_STATE_STREAM);
    (0..count)
        .map(|_| DVector::from_fn(nx, |_, _| rng.random_range(-half..=half)))
        .collect()
}

fn basin_scenario(exp: &Experiment, seed: u64, r: &SynthesisResult) -> Result<SeedSim, CliError> {
    let sim = &exp.config.simulation;
    let (nx, nu) = (exp.system.nx(), exp.system.nu());
    let eta = r.eta.unwrap_or(1.0);
    let e = Ellipsoid::new(&r.q, 1.0)?;
    let mut header: Vec<String> = vec!["run".into()];
    header.extend((0..nx).map(|i| format!("x0_{i}")));
    header.extend(
        [
            "inside",
            "settle_step",
            "converged",
            "bound_holds",
            "worst_ratio",
        ]
        .map(String::from),
    );
    let mut runs = Table::new(header);
    let mut bands = Bands::new(nx + nu, sim.horizon + 1);
    let (mut converged, mut inside, mut violations) = (0, 0, 0);
    let mut settle = Vec::new();
    for (run, x0) in initial_states(nx, sim.initial_states, sim.box_half_width, seed)
        .iter()
        .enumerate()
    {
        let is_inside = e.contains(x0);
        inside += is_inside as usize;
        let mut row = vec![run.to_string()];
        row.extend(x0.iter().map(|&x| num(x)));
        row.push(is_inside.to_string());
        match simulate(&exp.system, &r.k, x0, None, sim.horizon) {
            Ok(tr) => {
                let step = tr.settling_step(sim.settle_tol);
                let ok = step.is_some_and(|s| s <= sim.settle_within);
                converged += ok as usize;
                if let Some(s) = step {
                    settle.push(s as f64);
                }
                let bound = if is_inside {
                    let rep = verify_convergence_bound(&tr, &r.q, eta)?;
                    violations += (!rep.holds) as usize;
                    Some(rep)
                } else {
                    None
                };
                row.extend([
                    step.map(|s| s.to_string()).unwrap_or_default(),
                    ok.to_string(),
                    bound.map(|b| b.holds.to_string()).unwrap_or_default(),
                    opt(bound.map(|b| b.worst_ratio)),
                ]);
                let mut m = DMatrix::zeros(nx + nu, sim.horizon + 1);
                m.rows_mut(0, nx).copy_from(&tr.states);
                m.view_mut((nx, 0), (nu, sim.horizon))
                    .copy_from(&tr.saturated);
                bands.add(&m);
            }
            Err(SimError::Diverged { .. }) => {
                if is_inside {
                    violations += 1;
                }
                let bound_cell = if is_inside {
                    "false".to_string()
                } else {
                    String::new()
                };
                row.extend([String::new(), "false".into(), bound_cell, String::new()]);
            }
            Err(e) => return Err(e.into()),
        }
        runs.push(row);
    }
    let n = sim.initial_states;
    let (mean_settle, _) = mean_std(&settle);
    let summary = vec![
        seed.to_string(),
        "boa".into(),
        r.status.to_string(),
        n.to_string(),
        converged.to_string(),
        num(mean_settle),
        inside.to_string(),
        violations.to_string(),
        String::new(),
        String::new(),
        String::new(),
        (violations == 0).to_string(),
        String::new(),
    ];
    Ok(SeedSim {
        runs,
        summary,
        bands: Some(bands),
        gain_pairs: Vec::new(),
        problem: (violations > 0)
            .then(|| format!("{violations} runs violate the convergence bound")),
    })
}

fn reachable_scenario(
    exp: &Experiment,
    seed: u64,
    r: &SynthesisResult,
) -> Result<SeedSim, CliError> {
    let sim = &exp.config.simulation;
    let e = Ellipsoid::new(&r.q, r.s)?;
    let suite = standard_suite(exp.system.nx(), sim.horizon, r.s, sim.disturbances, seed);
    let mut runs = Table::new(["run", "w_norm", "worst_level", "holds"]);
    let mut worst = 0.0f64;
    let mut bad = 0;
    for (i, w) in suite.iter().enumerate() {
        let rep = verify_reachable(
            &exp.system,
            &r.k,
            &e,
            std::slice::from_ref(w),
            sim.horizon,
            sim.tolerance,
        )?;
        worst = worst.max(rep.worst_level);
        bad += (!rep.holds) as usize;
        runs.push(vec![
            i.to_string(),
            num(w.energy()),
            num(rep.worst_level),
            rep.holds.to_string(),
        ]);
    }
    let summary = vec![
        seed.to_string(),
        "reach".into(),
        r.status.to_string(),
        suite.len().to_string(),
        String::new(),
        String::new(),
        String::new(),
        bad.to_string(),
        num(worst),
        String::new(),
        String::new(),
        (bad == 0).to_string(),
        String::new(),
    ];
    Ok(SeedSim {
        runs,
        summary,
        bands: None,
        gain_pairs: Vec::new(),
        problem: (bad > 0).then(|| format!("{bad} runs leave E(Q, s)")),
    })
}

fn gain_scenario(exp: &Experiment, seed: u64, r: &SynthesisResult) -> Result<SeedSim, CliError> {
    let sim = &exp.config.simulation;
    let gamma = r.gamma().unwrap_or(f64::NAN);
    let suite = standard_suite(exp.system.nx(), sim.horizon, r.s, sim.disturbances, seed);
    let rep = verify_l2_gain(
        &exp.system,
        &r.k,
        gamma,
        r.s,
        &suite,
        sim.horizon,
        sim.tolerance,
    )?;
    let mut runs = Table::new(["run", "w_norm", "z_norm", "ratio"]);
    let mut pairs = Vec::new();
    for (i, g) in rep.runs.iter().enumerate() {
        runs.push(vec![
            i.to_string(),
            num(g.w_norm),
            num(g.z_norm),
            opt(g.ratio),
        ]);
        pairs.push((i, g.w_norm, g.z_norm));
    }
    let summary = vec![
        seed.to_string(),
        "l2".into(),
        r.status.to_string(),
        suite.len().to_string(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        num(rep.max_ratio),
        num(gamma),
        rep.holds.to_string(),
        String::new(),
    ];
    Ok(SeedSim {
        runs,
        summary,
        bands: None,
        gain_pairs: pairs,
        problem: (!rep.holds).then(|| format!("empirical gain {} exceeds {gamma}", rep.max_ratio)),
    })
}

fn simulate_seed(exp: &Experiment, seed: u64) -> Result<SeedSim, CliError> {
    let r = load_result(&exp.config.out, seed)?;
    if r.k.shape() != (exp.system.nu(), exp.system.nx()) {
        return Err(CliError::Sim(SimError::DimensionMismatch {
            what: "gain K",
            expected: exp.system.nu() * exp.system.nx(),
            got: r.k.len(),
        }));
    }
    let out = match r.objective {
        ObjectiveKind::Alpha => basin_scenario(exp, seed, &r)?,
        ObjectiveKind::TraceQ => reachable_scenario(exp, seed, &r)?,
        ObjectiveKind::Gamma2 => gain_scenario(exp, seed, &r)?,
    };
    out.runs.write(&simulation_path(&exp.config.out, seed))?;
    Ok(out)
}

/// Replay every stored result on its scenario: random initial states for a
/// basin, the standard disturbance suite for reachable-set and gain results.
pub fn cmd_simulate(exp: &Experiment) -> Result<CampaignReport, CliError> {
    let cfg = &exp.config;
    let (nx, nu) = (exp.system.nx(), exp.system.nu());
    let results = run_parallel(cfg.jobs, &cfg.seeds, |&seed| simulate_seed(exp, seed))?;
    let mut summary = Table::new(SUMMARY);
    let mut bands: Option<Bands> = None;
    let mut pairs = Table::new(["seed", "run", "w_norm", "z_norm"]);
    let mut failures = Vec::new();
    for (&seed, res) in cfg.seeds.iter().zip(results) {
        match res {
            Ok(s) => {
                if let Some(b) = &s.bands {
                    bands
                        .get_or_insert_with(|| Bands::new(b.sum.nrows(), b.sum.ncols()))
                        .merge(b);
                }
                for (run, w, z) in &s.gain_pairs {
                    pairs.push(vec![seed.to_string(), run.to_string(), num(*w), num(*z)]);
                }
                if let Some(p) = s.problem {
                    failures.push(SeedFailure { seed, message: p });
                }
                summary.push(s.summary);
            }
            Err(e) => {
                let msg = e.to_string();
                let mut row = vec![seed.to_string()];
                row.extend(std::iter::repeat_n(String::new(), SUMMARY.len() - 3));
                row.extend(["false".into(), msg.clone()]);
                summary.push(row);
                failures.push(SeedFailure { seed, message: msg });
            }
        }
    }
    let mut outputs = vec![cfg.out.join("sim")];
    let path = cfg.out.join("simulate_summary.csv");
    summary.write(&path)?;
    outputs.push(path);
    if let Some(b) = bands {
        let mut header = vec!["k".to_string()];
        for i in 0..nx {
            header.extend([format!("x{i}_mean"), format!("x{i}_std")]);
        }
        for j in 0..nu {
            header.extend([format!("v{j}_mean"), format!("v{j}_std")]);
        }
        let mut t = Table::new(header);
        let last = b.sum.ncols() - 1;
        for k in 0..=last {
            let mut row = vec![k.to_string()];
            for i in 0..nx + nu {
                if i >= nx && k == last {
                    row.extend([String::new(), String::new()]);
                } else {
                    let (m, s) = b.mean_std(i, k);
                    row.extend([num(m), num(s)]);
                }
            }
            t.push(row);
        }
        let path = cfg.out.join("bands.csv");
        t.write(&path)?;
        outputs.push(path);
    }
    if !pairs.rows.is_empty() {
        let path = cfg.out.join("gain_pairs.csv");
        pairs.write(&path)?;
        outputs.push(path);
    }
    Ok(CampaignReport {
        command: "simulate",
        seeds: cfg.seeds.len(),
        failures,
        outputs,
    })
}
