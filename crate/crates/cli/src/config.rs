//! Run configuration: one TOML file, every field optional.

use std::path::{Path, PathBuf};

use quantid::analysis::{geometric_grid, SyntheticSetup};
use quantid::dataset::SyntheticConfig;
use quantid::{GridConfig, QuantizerSpec, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Lp,
    L1,
    Both,
}

impl ModeSelection {
    pub fn run_lp(self) -> bool {
        self != ModeSelection::L1
    }

    pub fn run_l1(self) -> bool {
        self != ModeSelection::Lp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizerConfig {
    pub bits: u32,
    pub saturation: f64,
    /// Explicit step; overrides the one implied by `saturation`.
    pub step: Option<f64>,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        QuantizerConfig {
            bits: 3,
            saturation: 3.0,
            step: None,
        }
    }
}

impl QuantizerConfig {
    pub fn build(&self) -> quantid::Result<QuantizerSpec> {
        match self.step {
            Some(step) => QuantizerSpec::uniform_with_step(self.bits, step),
            None => QuantizerSpec::make_uniform(self.bits, self.saturation),
        }
    }
}

/// Measured record in a two-column `u y` text file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileSource {
    pub path: PathBuf,
    pub chunk_len: usize,
    /// Use at most this many leading chunks.
    pub max_chunks: Option<usize>,
    /// Bound of the noise the solver allows for.
    pub noise_bound: f64,
    /// Uniform noise added before quantization.
    pub added_noise: f64,
    pub missing_fraction: f64,
}

impl Default for FileSource {
    fn default() -> Self {
        FileSource {
            path: PathBuf::new(),
            chunk_len: 50,
            max_chunks: None,
            noise_bound: 0.1,
            added_noise: 0.0,
            missing_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub synthetic: SyntheticConfig,
    /// When present, replaces the synthetic source.
    pub file: Option<FileSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub orders: Vec<usize>,
    pub systems_per_order: usize,
    /// Noise bounds of the sweep; a geometric grid when empty.
    pub eps: Vec<f64>,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_count: usize,
    /// Chunk of the record the sweep runs on.
    pub chunk_index: usize,
    /// Synthetic stand-in record when no data file is given.
    pub series_len: usize,
    pub series_order: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            orders: vec![10],
            systems_per_order: 50,
            eps: Vec::new(),
            eps_min: 0.01,
            eps_max: 1.0,
            eps_count: 10,
            chunk_index: 0,
            series_len: 1024,
            series_order: 6,
        }
    }
}

impl ExperimentConfig {
    pub fn eps_values(&self) -> quantid::Result<Vec<f64>> {
        if self.eps.is_empty() {
            geometric_grid(self.eps_min, self.eps_max, self.eps_count)
        } else {
            Ok(self.eps.clone())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds data generation and solver initialization; replaces
    /// `solver.seed`.
    pub seed: u64,
    pub mode: ModeSelection,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub grid: GridConfig,
    pub quantizer: QuantizerConfig,
    pub data: DataConfig,
    pub solver: SolverConfig,
    pub experiment: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            mode: ModeSelection::Both,
            out: PathBuf::from("out"),
            workers: None,
            grid: GridConfig::default(),
            quantizer: QuantizerConfig::default(),
            data: DataConfig::default(),
            solver: SolverConfig::default(),
            experiment: ExperimentConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config(e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner().message().trim()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Semantic checks, reported with the offending field path.
    pub fn validate(&self) -> Result<(), CliError> {
        let at = |field: &str, e: quantid::Error| CliError::Config(format!("{field}: {e}"));
        self.quantizer.build().map_err(|e| at("quantizer", e))?;
        self.solver.validate().map_err(|e| at("solver", e))?;
        quantid::PoleGrid::build(&self.grid, 1).map_err(|e| at("grid", e))?;
        self.data.synthetic.validate().map_err(|e| at("data.synthetic", e))?;
        if let Some(f) = &self.data.file {
            if f.chunk_len == 0 {
                return Err(CliError::Config("data.file.chunk_len: must be positive".into()));
            }
            if !(f.noise_bound >= 0.0) || !(f.added_noise >= 0.0) {
                return Err(CliError::Config("data.file: noise bounds must be nonnegative".into()));
            }
            if !(0.0..1.0).contains(&f.missing_fraction) {
                return Err(CliError::Config("data.file.missing_fraction: outside [0, 1)".into()));
            }
        }
        self.experiment.eps_values().map_err(|e| at("experiment.eps", e))?;
        if self.workers == Some(0) {
            return Err(CliError::Config("workers: must be at least 1".into()));
        }
        Ok(())
    }

    pub fn setup(&self) -> Result<SyntheticSetup, CliError> {
        Ok(SyntheticSetup {
            data: self.data.synthetic.clone(),
            quantizer: self.quantizer.build().map_err(|e| CliError::Config(format!("quantizer: {e}")))?,
            grid: self.grid.clone(),
            solver: self.solver.clone(),
        })
    }
}
