//! JSON experiment configs. Every threshold has a default here so a config file only needs
//! the fields it changes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::LabError;
use crate::encoding::{self, EncodingSpec};
use crate::group::{make_cyclic, make_dihedral, parse_group, FiniteGroup};
use crate::networks::train::TrainConfig;
use crate::networks::Activation;
use crate::reps::IrrepTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Validate,
    Predict,
    Construct,
    Train,
    Staircase,
    PhaseDiagram,
    BiasSweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Validate => "validate",
            Experiment::Predict => "predict",
            Experiment::Construct => "construct",
            Experiment::Train => "train",
            Experiment::Staircase => "staircase",
            Experiment::PhaseDiagram => "phase-diagram",
            Experiment::BiasSweep => "bias-sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EncodingConfig {
    /// Mean-centered one-hot `e_1 - 1/|G|`.
    OneHot,
    /// `x_hat[rho] = alpha_rho I`, keyed by irrep or class name.
    Fourier { alphas: BTreeMap<String, f64> },
    /// The encoding vector itself, indexed by group element.
    Explicit { x: Vec<f64> },
}

impl EncodingConfig {
    pub fn build(&self, table: &IrrepTable) -> Result<EncodingSpec, LabError> {
        Ok(match self {
            EncodingConfig::OneHot => encoding::centered_one_hot(table),
            EncodingConfig::Fourier { alphas } => encoding::from_fourier_spec(table, alphas)?,
            EncodingConfig::Explicit { x } => encoding::explicit(table, x.clone())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Mlp,
    Rnn,
    Deep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub arch: Arch,
    pub hidden: usize,
    /// Lower coefficients `c_0..c_{k-1}` of `z^k + sum_i c_i z^i`; omitted means `z^k`.
    pub activation: Option<Vec<f64>>,
    pub init_scale: f64,
    /// Divide the init scale by `sqrt(fan_in)`.
    pub fan_in_scaling: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { arch: Arch::Mlp, hidden: 30, activation: None, init_scale: 1e-2, fan_in_scaling: true }
    }
}

impl ModelConfig {
    pub fn activation(&self, k: usize) -> Result<Activation, LabError> {
        match &self.activation {
            None => Ok(Activation::monomial(k)),
            Some(lower) if lower.len() == k => Ok(Activation::monic(lower)),
            Some(lower) => Err(LabError::Config(format!(
                "activation needs {k} lower coefficients for degree {k}, got {}",
                lower.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstructConfig {
    pub arch: Arch,
    /// Random sequences checked by the recurrent verifier.
    pub sequences: usize,
    /// Sampled rows for the deep verifier; omitted means exhaustive when small enough.
    pub samples: Option<usize>,
}

impl Default for ConstructConfig {
    fn default() -> Self {
        ConstructConfig { arch: Arch::Mlp, sequences: 200, samples: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Cyclic,
    Dihedral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseConfig {
    pub family: Family,
    /// Group orders `|G|`; dihedral orders must be even.
    pub orders: Vec<usize>,
    pub hidden: Vec<usize>,
    pub max_axis: usize,
    pub max_cell_steps: usize,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig {
            family: Family::Cyclic,
            orders: vec![5, 10, 15, 20],
            hidden: vec![8, 16, 32, 64, 128, 256],
            max_axis: 6,
            max_cell_steps: 100_000,
        }
    }
}

impl PhaseConfig {
    pub fn group(&self, order: usize) -> Result<FiniteGroup, LabError> {
        Ok(match self.family {
            Family::Cyclic => make_cyclic(order)?,
            Family::Dihedral if order % 2 == 0 => make_dihedral(order / 2)?,
            Family::Dihedral => return Err(LabError::Config(format!("dihedral order {order} is odd"))),
        })
    }
}

/// One sequence length of a bias sweep with its own optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasLeg {
    pub k: usize,
    pub learning_rate: f64,
    pub init_scale: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasConfig {
    pub legs: Vec<BiasLeg>,
}

impl Default for BiasConfig {
    fn default() -> Self {
        BiasConfig {
            legs: vec![
                BiasLeg { k: 2, learning_rate: 5e-5, init_scale: 2e-7, max_steps: 100_000 },
                BiasLeg { k: 3, learning_rate: 1e-4, init_scale: 5e-5, max_steps: 200_000 },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    /// Relative tolerance on each detected plateau level.
    pub plateau_tol: f64,
    /// Losses below this fraction of `L_0` count as the final zero level.
    pub terminal_fraction: f64,
    /// Tolerance for the algebraic identities checked by `validate`.
    pub identity_tol: f64,
    pub harmonic_trials: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { plateau_tol: 0.05, terminal_fraction: 0.05, identity_tol: 1e-10, harmonic_trials: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Defaults to the command being run.
    pub experiment: Option<Experiment>,
    pub group: String,
    pub k: usize,
    pub encoding: EncodingConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub construct: ConstructConfig,
    pub phase: PhaseConfig,
    pub bias: BiasConfig,
    pub seeds: Vec<u64>,
    pub checks: CheckConfig,
    pub output_dir: PathBuf,
    /// Worker threads for sweeps; omitted means one per core.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            group: "D3".to_string(),
            k: 2,
            encoding: EncodingConfig::OneHot,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            construct: ConstructConfig::default(),
            phase: PhaseConfig::default(),
            bias: BiasConfig::default(),
            seeds: vec![0, 1, 2],
            checks: CheckConfig::default(),
            output_dir: PathBuf::from("runs"),
            workers: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Fills in the experiment from the command and applies CLI overrides.
    pub fn resolve(mut self, command: Experiment, out: Option<PathBuf>, seed: Option<u64>) -> Result<Self, LabError> {
        let allowed = match command {
            Experiment::Train => &[Experiment::Train, Experiment::Staircase][..],
            other => &[other][..],
        };
        match self.experiment {
            None => self.experiment = Some(command),
            Some(e) if allowed.contains(&e) => {}
            Some(e) => {
                return Err(LabError::Config(format!(
                    "config is for experiment {:?}, not {:?}",
                    e.name(),
                    command.name()
                )))
            }
        }
        if let Some(dir) = out {
            self.output_dir = dir;
        }
        if let Some(s) = seed {
            self.train.seed = s;
            self.seeds = vec![s];
        }
        if self.k < 2 {
            return Err(LabError::Config(format!("k must be at least 2, got {}", self.k)));
        }
        self.train.validate()?;
        Ok(self)
    }

    pub fn experiment(&self) -> Experiment {
        self.experiment.unwrap_or(Experiment::Train)
    }

    pub fn table(&self) -> Result<IrrepTable, LabError> {
        Ok(IrrepTable::for_group(&parse_group(&self.group)?))
    }
}
