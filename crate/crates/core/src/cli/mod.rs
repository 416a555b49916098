//! Experiment driver behind the `ddsat` binary.
//!
//! Every command takes a resolved [`Experiment`], runs its per-seed
//! pipelines in parallel, writes CSV (and JSON result) files under
//! `config.out`, and returns a [`CampaignReport`]. A failing seed is
//! recorded as a row and never stops the campaign.
//!
//! Output layout:
//!
//! ```text
//! <out>/data/seed_0001.csv        generate
//! <out>/manifest.csv              generate
//! <out>/results/seed_0001.json    synth
//! <out>/synth_summary.csv         synth
//! <out>/sim/seed_0001.csv         simulate (one row per run)
//! <out>/simulate_summary.csv      simulate
//! <out>/bands.csv                 simulate, boa: mean/std of x and v over runs
//! <out>/gain_pairs.csv            simulate, l2: (|w|, |z|) per run
//! <out>/verify.csv                verify
//! <out>/compare.csv               compare
//! <out>/compare_summary.csv       compare
//! ```

mod commands;
mod compare;
mod config;
mod simulate;
mod table;

pub use commands::{cmd_generate, cmd_synth, cmd_verify, experiment_dataset, BasisData};
pub use compare::cmd_compare;
pub use config::{
    parse_seeds, CompareSpec, DataSpec, ExcitationKind, ExcitationSpec, Experiment,
    ExperimentConfig, Overrides, Program, SimulationSpec, SynthesisSpec, SystemSpec,
};
pub use simulate::cmd_simulate;
pub use table::Table;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::data::DataError;
use crate::ident::IdentError;
use crate::sim::SimError;
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("no dataset for seed {seed} at {path} (run `generate` first)")]
    MissingDataset { seed: u64, path: PathBuf },
    #[error("no synthesis result for seed {seed} at {path} (run `synth` first)")]
    MissingResult { seed: u64, path: PathBuf },
    #[error("{0}")]
    Verification(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Ident(#[from] IdentError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedFailure {
    pub seed: u64,
    pub message: String,
}

/// What a command did: how many seeds it ran, which failed, what it wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    pub command: &'static str,
    pub seeds: usize,
    pub failures: Vec<SeedFailure>,
    pub outputs: Vec<PathBuf>,
}

impl CampaignReport {
    pub fn success(&self) -> bool {
        self.failures.is_empty()
    }
}

impl std::fmt::Display for CampaignReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{}: {} of {} seeds completed",
            self.command,
            self.seeds - self.failures.len(),
            self.seeds
        )?;
        for fail in &self.failures {
            writeln!(f, "  seed {}: {}", fail.seed, fail.message)?;
        }
        for p in &self.outputs {
            writeln!(f, "  wrote {}", p.display())?;
        }
        Ok(())
    }
}

/// Map `f` over `items` on `jobs` threads (all cores when `None`), keeping input order.
pub(crate) fn run_parallel<I, T, F>(
    jobs: Option<usize>,
    items: &[I],
    f: F,
) -> Result<Vec<T>, CliError>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

pub fn dataset_path(out: &Path, seed: u64) -> PathBuf {
    out.join("data").join(format!("seed_{seed:04}.csv"))
}

pub fn result_path(out: &Path, seed: u64) -> PathBuf {
    out.join("results").join(format!("seed_{seed:04}.json"))
}

pub fn simulation_path(out: &Path, seed: u64) -> PathBuf {
    out.join("sim").join(format!("seed_{seed:04}.csv"))
}
