//! A small reproducible campaign through the experiment driver: generate,
//! synthesize, simulate and verify on five seeds, in parallel.
//!
//! `cargo run --release --example monte_carlo -- [out_dir]`

use ddsat::cli::{
    cmd_generate, cmd_simulate, cmd_synth, cmd_verify, ExperimentConfig, Program, Table,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| tmp.path().to_path_buf());
    for program in [Program::Boa, Program::L2] {
        let mut cfg = ExperimentConfig::from_toml(
            r#"
            seeds = [1, 2, 3, 4, 5]
            [data]
            noise_std = 0.1
            horizon = 6000
            [simulation]
            initial_states = 50
            "#,
        )?;
        cfg.out = out.join(program.as_str());
        cfg.synthesis.program = program;
        let exp = cfg.resolve()?;
        for cmd in [cmd_generate, cmd_synth, cmd_simulate, cmd_verify] {
            print!("{}", cmd(&exp)?);
        }
        let summary = Table::read(&exp.config.out.join("synth_summary.csv"))?;
        let col = summary.column("value").unwrap();
        let values: Vec<&str> = summary.rows.iter().map(|r| r[col].as_str()).collect();
        println!("{program} objective per seed: {values:?}\n");
    }
    Ok(())
}
