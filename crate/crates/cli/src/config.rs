//! Experiment configuration: TOML sections, presets and environment overrides.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use bec_oct::oct::spatial::Packet;
use bec_oct::oct::DEFAULT_GAMMA;
use bec_oct::{
    Grid, InitialGuess, OptimizerSettings, PotentialFamily, Scheme, SpaceGrid, StoragePolicy, TabulatedPotential,
    ThreeWireTrap,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::presets;

/// Prefix of environment overrides, e.g. `BEC_OCT__SOLVER__KAPPA=20`.
pub const ENV_PREFIX: &str = "BEC_OCT__";

/// One characteristic time unit for 87Rb in milliseconds.
pub const RB87_TIME_UNIT_MS: f64 = 1.37;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Groundstate,
    Propagate,
    Optimize,
    OptimizeSpatial,
    Sweep,
    Wigner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentSection,
    pub grid: GridSection,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub oct: OctSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial: Option<SpatialSection>,
    #[serde(default)]
    pub wigner: WignerSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    #[default]
    Dimensionless,
    /// Milliseconds for 87Rb; divided by 1.37 internally.
    Ms,
}

impl TimeUnit {
    pub fn to_internal(self, t: f64) -> f64 {
        match self {
            TimeUnit::Dimensionless => t,
            TimeUnit::Ms => t / RB87_TIME_UNIT_MS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    #[serde(default = "default_n")]
    pub n_x: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_y: Option<usize>,
    pub t_final: f64,
    #[serde(default = "default_n")]
    pub n_t: usize,
    #[serde(default)]
    pub time_unit: TimeUnit,
}

fn default_n() -> usize {
    500
}

impl GridSection {
    /// Grid with `t_final` given in the configured time unit.
    pub fn build_with_t(&self, t_final: f64) -> Result<Grid> {
        let t = self.time_unit.to_internal(t_final);
        let grid = match (self.y_min, self.y_max, self.n_y) {
            (None, None, None) => Grid::new_1d(self.x_min, self.x_max, self.n_x, t, self.n_t)?,
            (Some(y0), Some(y1), Some(ny)) => {
                Grid::new_2d((self.x_min, self.x_max, self.n_x), (y0, y1, ny), t, self.n_t)?
            }
            _ => {
                return Err(CliError::Config(
                    "grid: y_min, y_max and n_y must be given together".into(),
                ))
            }
        };
        Ok(grid)
    }

    pub fn build(&self) -> Result<Grid> {
        self.build_with_t(self.t_final)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    ShiftedHarmonic {
        x0: f64,
    },
    ShiftedHarmonicQuartic {
        x0: f64,
        eta: f64,
    },
    DoubleWell {
        d: f64,
    },
    ThreeWire {
        #[serde(default)]
        trap: ThreeWireTrap,
        /// Number of lambda slices to tabulate; 0 evaluates the field model directly.
        #[serde(default)]
        tabulate: usize,
    },
    /// Slices read from a GPF1 file: a lambda record then a slice record.
    Tabulated {
        file: PathBuf,
    },
    Separable {
        along_x: Box<PotentialConfig>,
        omega_y: f64,
    },
    TransverseChannel {
        y0: f64,
        omega: f64,
    },
    LambdaOffset {
        base: Box<PotentialConfig>,
        coeffs: [f64; 3],
    },
}

impl PotentialConfig {
    pub fn build(&self, space: &SpaceGrid) -> Result<PotentialFamily> {
        Ok(match self {
            Self::ShiftedHarmonic { x0 } => PotentialFamily::ShiftedHarmonic { x0: *x0 },
            Self::ShiftedHarmonicQuartic { x0, eta } => PotentialFamily::ShiftedHarmonicQuartic { x0: *x0, eta: *eta },
            Self::DoubleWell { d } => PotentialFamily::DoubleWell { d: *d },
            Self::ThreeWire { trap, tabulate } => {
                let family = PotentialFamily::ThreeWire(trap.clone());
                if *tabulate > 0 {
                    family.tabulate(space, *tabulate)?
                } else {
                    family
                }
            }
            Self::Tabulated { file } => {
                let mut f = std::fs::File::open(file)
                    .map_err(|e| CliError::Config(format!("tabulated potential {}: {e}", file.display())))?;
                PotentialFamily::Tabulated(Arc::new(TabulatedPotential::read(&mut f, *space)?))
            }
            Self::Separable { along_x, omega_y } => {
                let x_space = SpaceGrid::new_1d(space.x.min, space.x.max, space.x.n)?;
                PotentialFamily::Separable {
                    along_x: Box::new(along_x.build(&x_space)?),
                    omega_y: *omega_y,
                }
            }
            Self::TransverseChannel { y0, omega } => PotentialFamily::TransverseChannel { y0: *y0, omega: *omega },
            Self::LambdaOffset { base, coeffs } => PotentialFamily::LambdaOffset {
                base: Box::new(base.build(space)?),
                coeffs: *coeffs,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub scheme: Scheme,
    /// Nonlinearity `g`.
    pub kappa: f64,
    pub subtract_offset: bool,
    /// Keep every n-th snapshot; 1 keeps all.
    pub storage_stride: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            scheme: Scheme::SplitOperator,
            kappa: 0.0,
            subtract_offset: false,
            storage_stride: 1,
        }
    }
}

impl SolverSection {
    pub fn storage(&self) -> StoragePolicy {
        match self.storage_stride {
            1 => StoragePolicy::Full,
            n => StoragePolicy::Strided(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessKind {
    #[default]
    Linear,
    SquareRoot,
    /// Two-column CSV `(t, lambda)` or `(x, lambda)`, resampled to the grid.
    File,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    pub guess: GuessKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl ControlSection {
    pub fn initial_guess(&self) -> Option<InitialGuess> {
        match self.guess {
            GuessKind::Linear => Some(InitialGuess::Linear),
            GuessKind::SquareRoot => Some(InitialGuess::SquareRoot),
            GuessKind::File => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OctSection {
    /// Run the optimizer in sweeps.
    pub enabled: bool,
    pub gamma: f64,
    pub optimizer: OptimizerSettings,
}

impl Default for OctSection {
    fn default() -> Self {
        Self {
            enabled: false,
            gamma: DEFAULT_GAMMA,
            optimizer: OptimizerSettings::default(),
        }
    }
}

/// Inclusive range `start, start + step, ... <= stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.step.is_nan() || self.step <= 0.0 || self.stop < self.start {
            return Err(CliError::Config(format!("invalid range {self:?}")));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    List(Vec<f64>),
    Range(Range),
}

impl Values {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            Values::List(v) if v.is_empty() => Err(CliError::Config("empty sweep axis".into())),
            Values::List(v) => Ok(v.clone()),
            Values::Range(r) => r.values(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Transfer times in the grid's time unit; defaults to `grid.t_final`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Values>,
    /// Nonlinearities; defaults to `solver.kappa`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Values>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialSection {
    pub x_start: f64,
    pub length: f64,
    pub packet_x0: f64,
    pub packet_k0: f64,
    pub packet_sigma: f64,
    /// Transverse trap frequency and final displacement of the target state.
    pub channel_omega: f64,
    pub channel_y0: f64,
}

impl SpatialSection {
    pub fn packet(&self) -> Packet {
        Packet {
            x0: self.packet_x0,
            k0: self.packet_k0,
            sigma: self.packet_sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WignerState {
    Initial,
    #[default]
    Final,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerSection {
    pub state: WignerState,
    pub time_integrated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Dump every stored snapshot of the forward trajectory.
    pub trajectory: bool,
    /// Dump initial and final states.
    pub states: bool,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build()?;
        if self.solver.storage_stride == 0 {
            return Err(CliError::Config("solver.storage_stride must be positive".into()));
        }
        self.oct.optimizer.validate()?;
        if self.oct.gamma.is_nan() || self.oct.gamma <= 0.0 {
            return Err(CliError::Config("oct.gamma must be positive".into()));
        }
        if self.control.guess == GuessKind::File && self.control.file.is_none() {
            return Err(CliError::Config("control.guess = \"file\" needs control.file".into()));
        }
        match self.experiment.kind {
            ExperimentKind::Sweep if self.sweep.is_none() => {
                return Err(CliError::Config("sweep experiments need a [sweep] section".into()))
            }
            ExperimentKind::OptimizeSpatial if self.spatial.is_none() => {
                return Err(CliError::Config(
                    "optimize_spatial experiments need a [spatial] section".into(),
                ))
            }
            ExperimentKind::OptimizeSpatial if grid.space.dim() != 2 => {
                return Err(CliError::Config("optimize_spatial needs a 2D grid".into()))
            }
            ExperimentKind::Wigner if grid.space.dim() != 1 => {
                return Err(CliError::Config("wigner needs a 1D grid".into()))
            }
            _ => {}
        }
        if let Some(s) = &self.sweep {
            for v in [&s.t, &s.kappa].into_iter().flatten() {
                v.values()?;
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
    }
}

/// Recursively overlays `top` onto `base`.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_table(text: &str, origin: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>()
        .map_err(|e| CliError::Config(format!("{origin}: {e}")))
}

/// Parses an override value as a TOML literal, falling back to a string.
fn env_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_env(table: &mut toml::Table, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
    for (key, raw) in vars {
        let Some(path) = key.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let parts: Vec<String> = path.split("__").map(|s| s.to_ascii_lowercase()).collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(CliError::Config(format!("malformed override {key}")));
        }
        let (last, sections) = parts.split_last().expect("non-empty split");
        let mut t = &mut *table;
        for s in sections {
            let entry = t
                .entry(s.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            t = entry
                .as_table_mut()
                .ok_or_else(|| CliError::Config(format!("override {key}: `{s}` is not a section")))?;
        }
        t.insert(last.clone(), env_value(&raw));
    }
    Ok(())
}

/// Where the configuration comes from, lowest precedence first.
#[derive(Debug, Clone, Default)]
pub struct Sources {
    pub preset: Option<String>,
    pub file: Option<PathBuf>,
    pub env: Vec<(String, String)>,
    pub kind: Option<ExperimentKind>,
}

impl Sources {
    pub fn with_process_env(mut self) -> Self {
        self.env = std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        self.env.sort();
        self
    }
}

pub fn load(sources: &Sources) -> Result<Config> {
    let mut table = toml::Table::new();
    if let Some(name) = &sources.preset {
        let text = presets::get(name).ok_or_else(|| {
            CliError::Config(format!(
                "unknown preset `{name}`; available: {}",
                presets::NAMES.join(", ")
            ))
        })?;
        merge(&mut table, parse_table(text, &format!("preset {name}"))?);
    }
    if let Some(path) = &sources.file {
        let text = read_text(path)?;
        let origin = path.display().to_string();
        let user = parse_table(&text, &origin)?;
        // unknown keys are reported against the user's own text, with line numbers
        if let Err(e) = toml::from_str::<Config>(&text) {
            if !e.message().starts_with("missing field") {
                return Err(CliError::Config(format!("{origin}: {e}")));
            }
        }
        merge(&mut table, user);
    }
    apply_env(&mut table, sources.env.iter().cloned())?;
    if let Some(kind) = sources.kind {
        let exp = table
            .entry("experiment")
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        if let Some(t) = exp.as_table_mut() {
            t.insert("kind".into(), toml::Value::try_from(kind).expect("kind serializes"));
        }
    }
    if table.is_empty() {
        return Err(CliError::Config(
            "no configuration given; use --config or --preset".into(),
        ));
    }
    let config: Config = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("configuration: {}", e.message())))?;
    config.validate()?;
    Ok(config)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
