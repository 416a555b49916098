use std::path::Path;

use super::table::{num, opt, Table};
use super::{
    dataset_path, result_path, run_parallel, CampaignReport, CliError, Experiment, SeedFailure,
};
use crate::data::{
    generate_dataset, read_dataset, uniform_setpoint_reference, write_dataset, Dataset,
};
use crate::ident::{
    build_instrument, compute_products, estimate_open_loop, DataProducts, EstimatedModel,
};
use crate::sim::LinearSaturatedSystem;
use crate::synth::{
    check_certificate, performance_index, synth_oracle, synthesize, Certificate, DesignBasis,
    DesignMode, ObjectiveKind, SynthesisProgram, SynthesisResult,
};

/// The experiment of `seed` at the given noise level and length.
pub fn experiment_dataset(
    exp: &Experiment,
    seed: u64,
    noise_std: f64,
    horizon: usize,
) -> Result<Dataset, CliError> {
    let ex = &exp.config.excitation;
    let r = uniform_setpoint_reference(exp.system.nu(), horizon, ex.low, ex.high, seed);
    Ok(generate_dataset(
        &exp.system,
        exp.excitation_gain.as_ref(),
        &r,
        noise_std,
        seed,
        horizon,
    )?)
}

pub fn cmd_generate(exp: &Experiment) -> Result<CampaignReport, CliError> {
    let cfg = &exp.config;
    let out = &cfg.out;
    let rows = run_parallel(cfg.jobs, &cfg.seeds, |&seed| {
        let path = dataset_path(out, seed);
        let d = experiment_dataset(exp, seed, cfg.data.noise_std, cfg.data.horizon)?;
        std::fs::create_dir_all(path.parent().expect("data dir"))?;
        write_dataset(&d, &path)?;
        Ok::<_, CliError>(d.diagnostics(exp.system.bounds()))
    })?;
    let mut manifest = Table::new([
        "seed",
        "file",
        "horizon",
        "noise_std",
        "snr_db",
        "saturation_hit_ratio",
        "meets_length_bound",
        "error",
    ]);
    let mut failures = Vec::new();
    for (&seed, row) in cfg.seeds.iter().zip(rows) {
        let file = format!("data/seed_{seed:04}.csv");
        let head = vec![
            seed.to_string(),
            file,
            cfg.data.horizon.to_string(),
            num(cfg.data.noise_std),
        ];
        match row {
            Ok(diag) => manifest.push(
                head.into_iter()
                    .chain([
                        num(diag.snr_db),
                        num(diag.saturation_hit_ratio),
                        diag.meets_length_bound.to_string(),
                        String::new(),
                    ])
                    .collect(),
            ),
            Err(e) => {
                let msg = e.to_string();
                manifest.push(
                    head.into_iter()
                        .chain(["".into(), "".into(), "".into(), msg.clone()])
                        .collect(),
                );
                failures.push(SeedFailure { seed, message: msg });
            }
        }
    }
    let path = out.join("manifest.csv");
    manifest.write(&path)?;
    Ok(CampaignReport {
        command: "generate",
        seeds: cfg.seeds.len(),
        failures,
        outputs: vec![out.join("data"), path],
    })
}

pub(crate) fn load_dataset(exp: &Experiment, seed: u64) -> Result<Dataset, CliError> {
    let path = dataset_path(&exp.config.out, seed);
    if !path.exists() {
        return Err(CliError::MissingDataset { seed, path });
    }
    let file = read_dataset(&path)?;
    let d = file.dataset;
    if d.nx() != exp.system.nx() || d.nu() != exp.system.nu() {
        return Err(CliError::Config(format!(
            "dataset {} is {}x{} but the configured plant is {}x{}",
            path.display(),
            d.nx(),
            d.nu(),
            exp.system.nx(),
            exp.system.nu()
        )));
    }
    d.check_length_bound()?;
    Ok(d)
}

/// Owned data behind a [`DesignBasis`].
#[derive(Debug, Clone)]
pub enum BasisData {
    Direct(DataProducts),
    Indirect(EstimatedModel),
    Oracle,
}

impl BasisData {
    pub fn from_dataset(mode: DesignMode, d: &Dataset, normalize: bool) -> Result<Self, CliError> {
        Ok(match mode {
            DesignMode::Oracle => BasisData::Oracle,
            DesignMode::Direct | DesignMode::Indirect => {
                let products = compute_products(d, &build_instrument(d, normalize))?;
                if mode == DesignMode::Direct {
                    BasisData::Direct(products)
                } else {
                    BasisData::Indirect(estimate_open_loop(&products))
                }
            }
        })
    }

    /// Load the seed's dataset unless the mode does not need one.
    pub fn load(exp: &Experiment, mode: DesignMode, seed: u64) -> Result<Self, CliError> {
        if mode == DesignMode::Oracle {
            return Ok(BasisData::Oracle);
        }
        let d = load_dataset(exp, seed)?;
        Self::from_dataset(mode, &d, exp.config.data.normalize_instrument)
    }

    pub fn basis<'a>(&'a self, system: &'a LinearSaturatedSystem) -> DesignBasis<'a> {
        match self {
            BasisData::Direct(p) => DesignBasis::Direct(p),
            BasisData::Indirect(m) => DesignBasis::Indirect(m),
            BasisData::Oracle => DesignBasis::Oracle {
                a: system.a(),
                b: system.b(),
            },
        }
    }
}

fn synth_seed(exp: &Experiment, seed: u64) -> Result<SynthesisResult, CliError> {
    let data = BasisData::load(exp, exp.options.mode, seed)?;
    let program = exp.config.synthesis.program.synthesis(&exp.system)?;
    let r = synthesize(
        data.basis(&exp.system),
        program,
        exp.system.bounds(),
        &exp.options,
    )?;
    let path = result_path(&exp.config.out, seed);
    std::fs::create_dir_all(path.parent().expect("results dir"))?;
    std::fs::write(&path, serde_json::to_string_pretty(&r)?)?;
    Ok(r)
}

/// Basin reference on the true plant at the campaign's `eta`.
pub(crate) fn oracle_alpha(exp: &Experiment, eta: f64) -> Option<f64> {
    let opts = exp
        .options
        .clone()
        .with_mode(DesignMode::Oracle)
        .with_eta(eta);
    match synth_oracle(&exp.system, SynthesisProgram::BasinOfAttraction, &opts) {
        Ok(r) => r.alpha(),
        Err(e) => {
            log::warn!("oracle basin at eta = {eta} failed: {e}");
            None
        }
    }
}

pub fn cmd_synth(exp: &Experiment) -> Result<CampaignReport, CliError> {
    let cfg = &exp.config;
    let program = cfg.synthesis.program;
    let results = run_parallel(cfg.jobs, &cfg.seeds, |&seed| synth_seed(exp, seed))?;
    let alpha_star = match program {
        super::Program::Boa => oracle_alpha(exp, exp.options.eta),
        _ => None,
    };
    let (nu, nx) = (exp.system.nu(), exp.system.nx());
    let mut header: Vec<String> = [
        "seed",
        "mode",
        "program",
        "status",
        "objective",
        "value",
        "alpha",
        "gamma",
        "index",
        "iterations",
        "consistency_residual",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    header.extend((0..nu).flat_map(|i| (0..nx).map(move |j| format!("k{i}{j}"))));
    header.push("error".into());
    let mut table = Table::new(header);
    let mut failures = Vec::new();
    for (&seed, res) in cfg.seeds.iter().zip(results) {
        let mut row = vec![
            seed.to_string(),
            exp.options.mode.to_string(),
            program.to_string(),
        ];
        match res {
            Ok(r) => {
                let index = match (r.alpha(), alpha_star) {
                    (Some(a), Some(s)) => performance_index(a, s).ok(),
                    _ => None,
                };
                row.extend([
                    r.status.to_string(),
                    r.objective.as_str().to_string(),
                    num(r.objective_value),
                    opt(r.alpha()),
                    opt(r.gamma()),
                    opt(index),
                    r.iterations.to_string(),
                    opt(r.consistency_residual),
                ]);
                row.extend(r.k.transpose().iter().map(|&x| num(x)));
                row.push(String::new());
            }
            Err(e) => {
                let msg = e.to_string();
                row.push("failed".into());
                row.extend(std::iter::repeat_n(String::new(), 7 + nu * nx));
                row.push(msg.clone());
                failures.push(SeedFailure { seed, message: msg });
            }
        }
        table.push(row);
    }
    let path = cfg.out.join("synth_summary.csv");
    table.write(&path)?;
    Ok(CampaignReport {
        command: "synth",
        seeds: cfg.seeds.len(),
        failures,
        outputs: vec![cfg.out.join("results"), path],
    })
}

pub(crate) fn load_result(out: &Path, seed: u64) -> Result<SynthesisResult, CliError> {
    let path = result_path(out, seed);
    if !path.exists() {
        return Err(CliError::MissingResult { seed, path });
    }
    Ok(serde_json::from_str(&std::fs::read_to_string(&path)?)?)
}

struct Check {
    name: String,
    slack: Option<f64>,
    scale: f64,
    holds: bool,
}

fn verify_seed(exp: &Experiment, seed: u64) -> Result<Vec<Check>, CliError> {
    let r = load_result(&exp.config.out, seed)?;
    let data = BasisData::load(exp, r.mode, seed)?;
    let basis = data.basis(&exp.system);
    let tol = exp.options.solver.check_tolerance;
    let margin = exp.options.epsilon;
    let channel = exp.system.channel();
    let certs: Vec<Certificate<'_>> = match r.objective {
        ObjectiveKind::Alpha => vec![Certificate::Decay {
            eta: r
                .eta
                .ok_or_else(|| CliError::Verification("basin result without eta".into()))?,
        }],
        ObjectiveKind::TraceQ => vec![Certificate::Reachable],
        ObjectiveKind::Gamma2 => {
            let channel =
                channel.ok_or_else(|| CliError::Config("l2 result needs a channel".into()))?;
            vec![
                Certificate::L2Gain {
                    channel,
                    gamma2: r.objective_value,
                },
                Certificate::Reachable,
                Certificate::Decay { eta: 1.0 },
            ]
        }
    };
    let mut checks = Vec::new();
    for c in certs {
        let res = check_certificate(&basis, &r, c, margin)?;
        checks.push(Check {
            name: res.name.clone(),
            slack: res.slack,
            scale: res.scale,
            holds: res.satisfied(tol),
        });
    }
    let gid = r.gain_identity_residual(&basis);
    let scale = r.q.norm().max(1.0);
    checks.push(Check {
        name: "gain_identity".into(),
        slack: Some(-gid),
        scale,
        holds: gid <= 1e-6 * scale,
    });
    if let Some(c) = r.consistency_residual {
        checks.push(Check {
            name: "consistency".into(),
            slack: Some(-c),
            scale,
            holds: c <= 1e-6 * scale,
        });
    }
    Ok(checks)
}

/// Re-evaluate the certificates of every stored result on freshly rebuilt
/// constraints; a seed fails when any check does.
pub fn cmd_verify(exp: &Experiment) -> Result<CampaignReport, CliError> {
    let cfg = &exp.config;
    let results = run_parallel(cfg.jobs, &cfg.seeds, |&seed| verify_seed(exp, seed))?;
    let mut table = Table::new(["seed", "check", "slack", "scale", "holds", "error"]);
    let mut failures = Vec::new();
    for (&seed, res) in cfg.seeds.iter().zip(results) {
        match res {
            Ok(checks) => {
                let broken: Vec<&str> = checks
                    .iter()
                    .filter(|c| !c.holds)
                    .map(|c| c.name.as_str())
                    .collect();
                if !broken.is_empty() {
                    failures.push(SeedFailure {
                        seed,
                        message: format!("violated: {}", broken.join(", ")),
                    });
                }
                for c in checks {
                    table.push(vec![
                        seed.to_string(),
                        c.name,
                        opt(c.slack),
                        num(c.scale),
                        c.holds.to_string(),
                        String::new(),
                    ]);
                }
            }
            Err(e) => {
                let msg = e.to_string();
                table.push(vec![
                    seed.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "false".into(),
                    msg.clone(),
                ]);
                failures.push(SeedFailure { seed, message: msg });
            }
        }
    }
    let path = cfg.out.join("verify.csv");
    table.write(&path)?;
    Ok(CampaignReport {
        command: "verify",
        seeds: cfg.seeds.len(),
        failures,
        outputs: vec![path],
    })
}
