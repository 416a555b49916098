use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::data::{Dataset, SaturationBounds};
use crate::linalg::matrix_from_rows;
use crate::sdp::SolveOptions;
use crate::sim::LinearSaturatedSystem;
use crate::synth::{DesignMode, PerformanceChannel, SynthesisOptions, SynthesisProgram};

/// Which synthesis program a campaign runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Program {
    #[default]
    Boa,
    Reach,
    L2,
}

impl Program {
    pub fn as_str(self) -> &'static str {
        match self {
            Program::Boa => "boa",
            Program::Reach => "reach",
            Program::L2 => "l2",
        }
    }

    pub fn synthesis<'a>(
        self,
        system: &'a LinearSaturatedSystem,
    ) -> Result<SynthesisProgram<'a>, CliError> {
        Ok(match self {
            Program::Boa => SynthesisProgram::BasinOfAttraction,
            Program::Reach => SynthesisProgram::ReachableSet,
            Program::L2 => SynthesisProgram::L2Gain(system.channel().ok_or_else(|| {
                CliError::Config("mode l2 needs a performance channel ([system.channel])".into())
            })?),
        })
    }
}

impl std::fmt::Display for Program {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Program {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "boa" => Ok(Program::Boa),
            "reach" => Ok(Program::Reach),
            "l2" => Ok(Program::L2),
            other => Err(CliError::Config(format!(
                "unknown mode '{other}' (expected boa, reach or l2)"
            ))),
        }
    }
}

type Rows = Vec<Vec<f64>>;

/// Plant matrices, inline or in a separate TOML file with the same keys.
/// Everything left out falls back to the three-state benchmark.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSpec {
    pub file: Option<PathBuf>,
    pub a: Option<Rows>,
    pub b: Option<Rows>,
    pub ubar: Option<Vec<f64>>,
    pub channel: Option<PerformanceChannel>,
}

impl SystemSpec {
    pub fn resolve(&self, base: &Path) -> Result<LinearSaturatedSystem, CliError> {
        if let Some(file) = &self.file {
            if self.a.is_some() || self.b.is_some() || self.ubar.is_some() || self.channel.is_some()
            {
                return Err(CliError::Config(
                    "[system] takes either `file` or inline matrices, not both".into(),
                ));
            }
            let path = base.join(file);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let inner: SystemSpec = toml::from_str(&text)?;
            if inner.file.is_some() {
                return Err(CliError::Config(
                    "nested system files are not supported".into(),
                ));
            }
            return inner.resolve(base);
        }
        let bench = LinearSaturatedSystem::benchmark();
        if self.a.is_none() && self.b.is_none() {
            let bounds = match &self.ubar {
                Some(u) => SaturationBounds::new(u.clone())?,
                None => bench.bounds().clone(),
            };
            let sys = LinearSaturatedSystem::new(bench.a().clone(), bench.b().clone(), bounds)?;
            let channel = self
                .channel
                .clone()
                .unwrap_or_else(PerformanceChannel::benchmark);
            return Ok(sys.with_channel(channel)?);
        }
        let (Some(a), Some(b)) = (&self.a, &self.b) else {
            return Err(CliError::Config("[system] needs both `a` and `b`".into()));
        };
        let a = rows(a, "system.a")?;
        let b = rows(b, "system.b")?;
        let ubar = self
            .ubar
            .clone()
            .ok_or_else(|| CliError::Config("[system] with inline matrices needs `ubar`".into()))?;
        let sys = LinearSaturatedSystem::new(a, b, SaturationBounds::new(ubar)?)?;
        Ok(match &self.channel {
            Some(ch) => sys.with_channel(ch.clone())?,
            None => sys,
        })
    }
}

fn rows(r: &Rows, name: &str) -> Result<DMatrix<f64>, CliError> {
    matrix_from_rows(r).ok_or_else(|| CliError::Config(format!("{name}: ragged or empty rows")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcitationKind {
    /// `u = K (r - x)` with a uniformly redrawn set-point `r`.
    #[default]
    Setpoint,
    /// `u = r`.
    OpenLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExcitationSpec {
    pub kind: ExcitationKind,
    /// Tracking gain; identity when omitted (square plants only).
    pub gain: Option<Rows>,
    pub low: f64,
    pub high: f64,
}

impl Default for ExcitationSpec {
    fn default() -> Self {
        Self {
            kind: ExcitationKind::Setpoint,
            gain: None,
            low: -1.0,
            high: 1.0,
        }
    }
}

impl ExcitationSpec {
    pub fn gain(&self, system: &LinearSaturatedSystem) -> Result<Option<DMatrix<f64>>, CliError> {
        if self.kind == ExcitationKind::OpenLoop {
            return Ok(None);
        }
        let (nx, nu) = (system.nx(), system.nu());
        let k = match &self.gain {
            Some(g) => rows(g, "excitation.gain")?,
            None if nx == nu => DMatrix::identity(nu, nx),
            None => {
                return Err(CliError::Config(
                    "set-point excitation on a non-square plant needs `excitation.gain`".into(),
                ))
            }
        };
        if k.shape() != (nu, nx) {
            return Err(CliError::Config(format!(
                "excitation.gain must be {nu}x{nx}, got {}x{}",
                k.nrows(),
                k.ncols()
            )));
        }
        Ok(Some(k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    /// Standard deviation of the output noise on both records.
    pub noise_std: f64,
    pub horizon: usize,
    pub normalize_instrument: bool,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            noise_std: 0.1,
            horizon: 6000,
            normalize_instrument: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisSpec {
    pub program: Program,
    pub mode: DesignMode,
    pub eta: f64,
    pub s: f64,
    pub kappa2: Option<f64>,
    pub epsilon: f64,
    pub solver: SolveOptions,
}

impl Default for SynthesisSpec {
    fn default() -> Self {
        let o = SynthesisOptions::default();
        Self {
            program: Program::Boa,
            mode: o.mode,
            eta: 0.995,
            s: o.s,
            kappa2: o.kappa2,
            epsilon: o.epsilon,
            solver: o.solver,
        }
    }
}

impl SynthesisSpec {
    pub fn options(&self) -> SynthesisOptions {
        SynthesisOptions {
            eta: self.eta,
            s: self.s,
            kappa2: self.kappa2,
            epsilon: self.epsilon,
            mode: self.mode,
            solver: self.solver.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    /// Random initial states per seed for the basin scenario.
    pub initial_states: usize,
    /// Initial states are drawn uniformly from `[-box, box]^nx`.
    #[serde(rename = "box")]
    pub box_half_width: f64,
    pub horizon: usize,
    pub settle_tol: f64,
    pub settle_within: usize,
    /// Disturbance signals per seed for the reachable and gain scenarios.
    pub disturbances: usize,
    pub tolerance: f64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            initial_states: 100,
            box_half_width: 2.0,
            horizon: 200,
            settle_tol: 1e-2,
            settle_within: 60,
            disturbances: 50,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSpec {
    pub noise_grid: Vec<f64>,
    pub horizon_grid: Vec<usize>,
}

impl Default for CompareSpec {
    fn default() -> Self {
        Self {
            noise_grid: vec![0.1],
            horizon_grid: vec![6000],
        }
    }
}

/// One experiment campaign, as written in a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out: PathBuf,
    pub seeds: Vec<u64>,
    pub jobs: Option<usize>,
    pub system: SystemSpec,
    pub excitation: ExcitationSpec,
    pub data: DataSpec,
    pub synthesis: SynthesisSpec,
    pub simulation: SimulationSpec,
    pub compare: CompareSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("runs"),
            seeds: (1..=20).collect(),
            jobs: None,
            system: SystemSpec::default(),
            excitation: ExcitationSpec::default(),
            data: DataSpec::default(),
            synthesis: SynthesisSpec::default(),
            simulation: SimulationSpec::default(),
            compare: CompareSpec::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    pub program: Option<Program>,
    pub mode: Option<DesignMode>,
    pub eta: Option<f64>,
    pub s: Option<f64>,
    pub epsilon: Option<f64>,
    pub jobs: Option<usize>,
}

/// A config with its plant built and every value checked.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub system: LinearSaturatedSystem,
    pub excitation_gain: Option<DMatrix<f64>>,
    pub options: SynthesisOptions,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(file) = &cfg.system.file {
            if file.is_relative() {
                let dir = path.parent().unwrap_or(Path::new("."));
                cfg.system.file = Some(dir.join(file));
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(seeds) = &o.seeds {
            self.seeds = seeds.clone();
        }
        if let Some(p) = o.program {
            self.synthesis.program = p;
        }
        if let Some(m) = o.mode {
            self.synthesis.mode = m;
        }
        if let Some(eta) = o.eta {
            self.synthesis.eta = eta;
        }
        if let Some(s) = o.s {
            self.synthesis.s = s;
        }
        if let Some(e) = o.epsilon {
            self.synthesis.epsilon = e;
        }
        if o.jobs.is_some() {
            self.jobs = o.jobs;
        }
    }

    pub fn resolve(self) -> Result<Experiment, CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("no seeds requested".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(CliError::Config("seed list has duplicates".into()));
        }
        let system = self.system.resolve(Path::new("."))?;
        let excitation_gain = self.excitation.gain(&system)?;
        if !(self.excitation.low < self.excitation.high) {
            return Err(CliError::Config(
                "excitation.low must be below excitation.high".into(),
            ));
        }
        if !(self.data.noise_std >= 0.0 && self.data.noise_std.is_finite()) {
            return Err(CliError::Config(
                "data.noise_std must be finite and nonnegative".into(),
            ));
        }
        for &t in std::iter::once(&self.data.horizon).chain(&self.compare.horizon_grid) {
            check_length(&system, t)?;
        }
        if self
            .compare
            .noise_grid
            .iter()
            .any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            return Err(CliError::Config(
                "compare.noise_grid entries must be nonnegative".into(),
            ));
        }
        let sim = &self.simulation;
        if sim.horizon == 0 {
            return Err(CliError::Config(
                "simulation.horizon must be positive".into(),
            ));
        }
        if !(sim.box_half_width > 0.0 && sim.settle_tol > 0.0 && sim.tolerance >= 0.0) {
            return Err(CliError::Config(
                "simulation.box and settle_tol must be positive, tolerance nonnegative".into(),
            ));
        }
        if self.jobs == Some(0) {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        let options = self.synthesis.options();
        options.validate()?;
        if self.synthesis.program == Program::L2 && system.channel().is_none() {
            return Err(CliError::Config("mode l2 needs [system.channel]".into()));
        }
        Ok(Experiment {
            config: self,
            system,
            excitation_gain,
            options,
        })
    }
}

fn check_length(system: &LinearSaturatedSystem, horizon: usize) -> Result<(), CliError> {
    let required = Dataset::min_horizon(system.nx(), system.nu());
    if horizon < required {
        return Err(crate::data::DataError::LengthBound { horizon, required }.into());
    }
    Ok(())
}

/// Parse `"1-20"`, `"3"`, `"1,4,9-12"` into a seed list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = |part: &str| CliError::Config(format!("bad seed range '{part}'"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let lo: u64 = lo.trim().parse().map_err(|_| bad(part))?;
                let hi: u64 = hi.trim().parse().map_err(|_| bad(part))?;
                if lo > hi {
                    return Err(bad(part));
                }
                seeds.extend(lo..=hi);
            }
            None => seeds.push(part.parse().map_err(|_| bad(part))?),
        }
    }
    if seeds.is_empty() {
        return Err(CliError::Config("empty seed list".into()));
    }
    Ok(seeds)
}
