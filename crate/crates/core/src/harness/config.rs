//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augmentation::AugmentationSpec;
use crate::graph::NetworkSpec;
use crate::harness::target::TargetSpec;
use crate::harness::HarnessError;
use crate::optimizer::{Measure, PhiMode, ScheduleParams};

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "AUGSGD_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkSource,
    pub target: TargetSpec,
    pub measure: MeasureSpec,
    #[serde(default)]
    pub error: ErrorKind,
    pub augmentation: AugmentationSpec,
    pub schedule: ScheduleParams,
    #[serde(default)]
    pub phi_mode: PhiMode,
    #[serde(default)]
    pub init: InitSpec,
    pub steps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cadence")]
    pub cadence: u64,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub engine: Engine,
    /// Accepts power exponents `t ≤ H(G) + 1`; the bounds are then no longer
    /// certified.
    #[serde(default)]
    pub unchecked: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_cadence() -> u64 {
    100
}

fn default_mc_samples() -> usize {
    256
}

/// A network given inline or as a path to a network file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkSource {
    File { file: PathBuf },
    Inline(NetworkSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    #[default]
    SquaredError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    #[default]
    Dag,
    Layered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    UniformBall {
        rho: f64,
    },
    /// Weights default to uniform.
    FiniteSupport {
        rho: f64,
        points: Vec<Vec<f64>>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
}

impl MeasureSpec {
    pub fn rho(&self) -> f64 {
        match self {
            MeasureSpec::UniformBall { rho } | MeasureSpec::FiniteSupport { rho, .. } => *rho,
        }
    }

    pub fn build(&self, dim: usize) -> Result<Measure, HarnessError> {
        let measure = match self {
            MeasureSpec::UniformBall { rho } => Measure::uniform_ball(dim, *rho)?,
            MeasureSpec::FiniteSupport { rho, points, weights } => {
                let weights = weights.clone().unwrap_or_else(|| vec![1.0 / points.len() as f64; points.len()]);
                Measure::finite_support(*rho, points.clone(), weights)?
            }
        };
        if measure.dim() != dim {
            return Err(HarnessError::Config(format!("measure points have dimension {}, network has {dim} inputs", measure.dim())));
        }
        Ok(measure)
    }
}

/// Initial weights `λ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitSpec {
    /// Independent uniform draws in `[−w, w]`.
    Uniform {
        #[serde(default = "default_half_width")]
        half_width: f64,
    },
    Constant {
        value: f64,
    },
    Explicit {
        weights: Vec<f64>,
    },
}

fn default_half_width() -> f64 {
    0.5
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Uniform { half_width: default_half_width() }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads a config file, resolving a relative network path against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = ExperimentConfig::from_json(&text)?;
        if let NetworkSource::File { file } = &mut cfg.network {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    /// Applies `AUGSGD_SEED` when set.
    pub fn with_env_seed(mut self) -> Result<Self, HarnessError> {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            self.seed = raw.trim().parse().map_err(|_| HarnessError::Config(format!("{SEED_ENV}={raw} is not a u64")))?;
        }
        Ok(self)
    }

    pub fn network_spec(&self) -> Result<NetworkSpec, HarnessError> {
        match &self.network {
            NetworkSource::Inline(spec) => Ok(spec.clone()),
            NetworkSource::File { file } => {
                let text = std::fs::read_to_string(file)?;
                serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", file.display())))
            }
        }
    }
}
