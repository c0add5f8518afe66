//! Experiment runner: augmented back-propagation, the classical baseline,
//! gradient checks and reports.

pub mod config;
pub mod gradcheck;
pub mod objective;
pub mod random;
pub mod report;
pub mod target;
pub mod train;

pub use config::{Engine, ExperimentConfig, InitSpec, MeasureSpec, NetworkSource};
pub use objective::{MeanError, MeanErrorEstimate, NetObjective};
pub use target::{Target, TargetSpec};
pub use train::{certify, prepare, train_augmented, train_classical, CertifyReport, RunMeta, TrainingMode, TrainingOutcome};

use crate::augmentation::AugmentationError;
use crate::graph::GraphError;
use crate::optimizer::{CsvError, OptimizerError, ScheduleError};
use crate::propagation::PropagationError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Augmentation(#[from] AugmentationError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
