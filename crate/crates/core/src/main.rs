use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ddsat::cli::{
    cmd_compare, cmd_generate, cmd_simulate, cmd_synth, cmd_verify, parse_seeds, CliError,
    ExperimentConfig, Overrides, Program,
};
use ddsat::synth::DesignMode;

#[derive(Parser)]
#[command(
    version,
    about = "Data-driven LMI synthesis for input-saturated systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one excitation experiment per seed and write the datasets
    Generate(Common),
    /// Solve the configured synthesis program on every dataset
    Synth(Common),
    /// Replay stored results in closed loop and check their certificates empirically
    Simulate(Common),
    /// Sweep noise level and data length, direct against indirect design
    Compare(Common),
    /// Re-evaluate the certificate LMIs of stored results
    Verify(Common),
}

#[derive(Clone)]
struct Seeds(Vec<u64>);

#[derive(Args)]
struct Common {
    /// Experiment file (TOML); the benchmark campaign when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seeds, e.g. `1-20` or `1,4,7`
    #[arg(long, value_parser = |s: &str| parse_seeds(s).map(Seeds))]
    seeds: Option<Seeds>,
    /// Synthesis program: boa, reach or l2
    #[arg(long, value_parser = |s: &str| s.parse::<Program>())]
    mode: Option<Program>,
    /// Where the closed loop comes from: direct, indirect or oracle
    #[arg(long, value_parser = |s: &str| s.parse::<DesignMode>())]
    basis: Option<DesignMode>,
    #[arg(long)]
    eta: Option<f64>,
    /// Disturbance energy bound
    #[arg(long)]
    s: Option<f64>,
    /// Strictness margin of the LMIs
    #[arg(long)]
    epsilon: Option<f64>,
    /// Worker threads (all cores by default)
    #[arg(long)]
    jobs: Option<usize>,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (args, cmd): (&Common, fn(&_) -> _) = match &cli.command {
        Command::Generate(a) => (a, cmd_generate),
        Command::Synth(a) => (a, cmd_synth),
        Command::Simulate(a) => (a, cmd_simulate),
        Command::Compare(a) => (a, cmd_compare),
        Command::Verify(a) => (a, cmd_verify),
    };
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        out: args.out.clone(),
        seeds: args.seeds.clone().map(|s| s.0),
        program: args.mode,
        mode: args.basis,
        eta: args.eta,
        s: args.s,
        epsilon: args.epsilon,
        jobs: args.jobs,
    });
    let report = cmd(&cfg.resolve()?)?;
    print!("{report}");
    Ok(report.success())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
