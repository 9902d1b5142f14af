//! Run configuration, read from JSON or TOML.

use std::path::Path;

use q4rpd_core::orchestrator::{Q4rpdConfig, TpChoice};
use q4rpd_core::solvers::{AnnealConfig, Backend, SolverConfig};
use q4rpd_core::srp::{ConstraintMode, DistanceScaling, ObjectiveWeights};
use serde::{Deserialize, Serialize};

use crate::io::{parse_json_lenient, read_text, IoError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BackendChoice {
    Exact,
    Anneal,
    #[default]
    Auto,
}

impl From<BackendChoice> for Backend {
    fn from(b: BackendChoice) -> Self {
        match b {
            BackendChoice::Exact => Backend::Exact,
            BackendChoice::Anneal => Backend::Anneal,
            BackendChoice::Auto => Backend::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingChoice {
    Raw,
    #[default]
    RouteBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintChoice {
    #[default]
    Aggregate,
    PerTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TpChoiceName {
    #[default]
    EarliestDeadline,
    Nearest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub backend: BackendChoice,
    pub exact_threshold: usize,
    pub restarts: u32,
    pub steps: u32,
    pub initial_temperature: Option<f64>,
    pub final_temperature: Option<f64>,
    pub penalty_weight: Option<f64>,
    pub distance_weight: f64,
    pub destination_weight: f64,
    pub scaling: ScalingChoice,
    pub constraints: ConstraintChoice,
    pub tp_choice: TpChoiceName,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        let weights = ObjectiveWeights::default();
        Self {
            seed: solver.seed,
            backend: BackendChoice::Auto,
            exact_threshold: solver.exact_threshold,
            restarts: solver.anneal.restarts,
            steps: solver.anneal.steps,
            initial_temperature: None,
            final_temperature: None,
            penalty_weight: None,
            distance_weight: weights.distance,
            destination_weight: weights.destination,
            scaling: ScalingChoice::default(),
            constraints: ConstraintChoice::default(),
            tp_choice: TpChoiceName::default(),
        }
    }
}

impl RunConfig {
    /// Reads a config file. `.toml` files are parsed as TOML, anything else as
    /// JSON. Unknown keys are returned rather than rejected.
    pub fn load(path: &Path) -> Result<(Self, Vec<String>), IoError> {
        let text = read_text(path)?;
        let name = path.display().to_string();
        if path.extension().is_some_and(|e| e == "toml") {
            let mut ignored = Vec::new();
            let de = toml::Deserializer::new(&text);
            let cfg = serde_ignored::deserialize(de, |p| ignored.push(p.to_string())).map_err(|e| IoError::Parse {
                path: name,
                message: e.to_string(),
            })?;
            Ok((cfg, ignored))
        } else {
            parse_json_lenient(&text, &name)
        }
    }

    pub fn to_core(&self) -> Q4rpdConfig {
        Q4rpdConfig {
            solver: SolverConfig {
                backend: self.backend.into(),
                seed: self.seed,
                anneal: AnnealConfig {
                    restarts: self.restarts,
                    steps: self.steps,
                    initial_temperature: self.initial_temperature,
                    final_temperature: self.final_temperature,
                    penalty_weight: self.penalty_weight,
                },
                exact_threshold: self.exact_threshold,
            },
            weights: ObjectiveWeights {
                distance: self.distance_weight,
                destination: self.destination_weight,
            },
            scaling: match self.scaling {
                ScalingChoice::Raw => DistanceScaling::Raw,
                ScalingChoice::RouteBudget => DistanceScaling::RouteBudget,
            },
            constraint_mode: match self.constraints {
                ConstraintChoice::Aggregate => ConstraintMode::Aggregate,
                ConstraintChoice::PerTerm => ConstraintMode::PerTerm,
            },
            tp_choice: match self.tp_choice {
                TpChoiceName::EarliestDeadline => TpChoice::EarliestDeadline,
                TpChoiceName::Nearest => TpChoice::Nearest,
            },
        }
    }
}
