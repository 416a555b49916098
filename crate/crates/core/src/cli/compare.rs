use super::commands::{experiment_dataset, oracle_alpha, BasisData};
use super::table::{mean_std, num, opt, Table};
use super::{run_parallel, CampaignReport, CliError, Experiment, SeedFailure};
use crate::sdp::SolveStatus;
use crate::synth::{performance_index, synthesize, DesignMode, SynthesisProgram};

#[derive(Debug, Clone, Copy)]
struct Point {
    noise_std: f64,
    horizon: usize,
    seed: u64,
}

#[derive(Debug, Clone)]
struct ModeOutcome {
    status: Option<SolveStatus>,
    alpha: Option<f64>,
    index: Option<f64>,
    error: Option<String>,
}

fn basin(exp: &Experiment, data: &BasisData, alpha_star: Option<f64>) -> ModeOutcome {
    let mode = match data {
        BasisData::Direct(_) => DesignMode::Direct,
        BasisData::Indirect(_) => DesignMode::Indirect,
        BasisData::Oracle => DesignMode::Oracle,
    };
    let opts = exp.options.clone().with_mode(mode);
    match synthesize(
        data.basis(&exp.system),
        SynthesisProgram::BasinOfAttraction,
        exp.system.bounds(),
        &opts,
    ) {
        Ok(r) => {
            let alpha = r.alpha();
            ModeOutcome {
                status: Some(r.status),
                alpha,
                index: alpha
                    .zip(alpha_star)
                    .and_then(|(a, s)| performance_index(a, s).ok()),
                error: None,
            }
        }
        Err(e) => ModeOutcome {
            status: None,
            alpha: None,
            index: None,
            error: Some(e.to_string()),
        },
    }
}

fn run_point(
    exp: &Experiment,
    p: &Point,
    alpha_star: Option<f64>,
) -> Result<[ModeOutcome; 2], CliError> {
    let d = experiment_dataset(exp, p.seed, p.noise_std, p.horizon)?;
    let normalize = exp.config.data.normalize_instrument;
    let direct = BasisData::from_dataset(DesignMode::Direct, &d, normalize)?;
    let indirect = match &direct {
        BasisData::Direct(products) => {
            BasisData::Indirect(crate::ident::estimate_open_loop(products))
        }
        _ => unreachable!("direct basis requested"),
    };
    Ok([
        basin(exp, &direct, alpha_star),
        basin(exp, &indirect, alpha_star),
    ])
}

fn status_cell(o: &ModeOutcome) -> String {
    o.status
        .map(|s| s.to_string())
        .unwrap_or_else(|| "failed".into())
}

/// Direct against indirect basin design over the `noise_grid x horizon_grid`
/// sweep, each measured by its performance index against the oracle.
pub fn cmd_compare(exp: &Experiment) -> Result<CampaignReport, CliError> {
    let cfg = &exp.config;
    let eta = exp.options.eta;
    let alpha_star = oracle_alpha(exp, eta);
    let mut points = Vec::new();
    for &noise_std in &cfg.compare.noise_grid {
        for &horizon in &cfg.compare.horizon_grid {
            for &seed in &cfg.seeds {
                points.push(Point {
                    noise_std,
                    horizon,
                    seed,
                });
            }
        }
    }
    let outcomes = run_parallel(cfg.jobs, &points, |p| run_point(exp, p, alpha_star))?;

    let mut table = Table::new([
        "noise_std",
        "horizon",
        "seed",
        "eta",
        "alpha_star",
        "direct_status",
        "direct_alpha",
        "direct_index",
        "indirect_status",
        "indirect_alpha",
        "indirect_index",
        "error",
    ]);
    let mut failures = Vec::new();
    let mut failed_seeds = std::collections::BTreeSet::new();
    for (p, o) in points.iter().zip(&outcomes) {
        let mut row = vec![
            num(p.noise_std),
            p.horizon.to_string(),
            p.seed.to_string(),
            num(eta),
            opt(alpha_star),
        ];
        let error = match o {
            Ok([d, i]) => {
                for m in [d, i] {
                    row.extend([status_cell(m), opt(m.alpha), opt(m.index)]);
                }
                let errs: Vec<_> = [("direct", d), ("indirect", i)]
                    .iter()
                    .filter_map(|(n, m)| m.error.as_ref().map(|e| format!("{n}: {e}")))
                    .collect();
                (!errs.is_empty()).then(|| errs.join("; "))
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 6));
                Some(e.to_string())
            }
        };
        if let Some(e) = &error {
            if failed_seeds.insert(p.seed) {
                failures.push(SeedFailure {
                    seed: p.seed,
                    message: format!("noise_std={} T={}: {e}", p.noise_std, p.horizon),
                });
            }
        }
        row.push(error.unwrap_or_default());
        table.push(row);
    }
    let path = cfg.out.join("compare.csv");
    table.write(&path)?;

    let mut summary = Table::new([
        "noise_std",
        "horizon",
        "eta",
        "alpha_star",
        "seeds",
        "direct_mean_index",
        "direct_std_index",
        "direct_non_optimal",
        "direct_failed",
        "indirect_mean_index",
        "indirect_std_index",
        "indirect_non_optimal",
        "indirect_failed",
    ]);
    let per_point = cfg.seeds.len();
    for (chunk, o) in points.chunks(per_point).zip(outcomes.chunks(per_point)) {
        let p = chunk[0];
        let mut row = vec![
            num(p.noise_std),
            p.horizon.to_string(),
            num(eta),
            opt(alpha_star),
            per_point.to_string(),
        ];
        for mode in 0..2 {
            let ms: Vec<Option<&ModeOutcome>> = o
                .iter()
                .map(|r| r.as_ref().ok().map(|m| &m[mode]))
                .collect();
            let idx: Vec<f64> = ms.iter().filter_map(|m| m.and_then(|m| m.index)).collect();
            let (mean, std) = mean_std(&idx);
            let non_optimal = ms
                .iter()
                .filter(|m| m.is_some_and(|m| m.status.is_some_and(|s| !s.is_optimal())))
                .count();
            let failed = ms
                .iter()
                .filter(|m| m.is_none_or(|m| m.status.is_none()))
                .count();
            row.extend([
                num(mean),
                num(std),
                non_optimal.to_string(),
                failed.to_string(),
            ]);
        }
        summary.push(row);
    }
    let spath = cfg.out.join("compare_summary.csv");
    summary.write(&spath)?;
    Ok(CampaignReport {
        command: "compare",
        seeds: cfg.seeds.len(),
        failures,
        outputs: vec![path, spath],
    })
}
