//! Normalised stochastic gradient descent and augmented back-propagation on
//! acyclic neural networks.

pub mod activation;
pub mod augmentation;
pub mod graph;
pub mod harness;
pub mod optimizer;
pub mod propagation;
pub mod sampling;

pub use activation::Activation;
pub use augmentation::{AugmentationError, AugmentationSpec, BoundCertificate};
pub use graph::{AcyclicNet, GraphError, GraphMetrics, NetDescription, NetworkSpec};
pub use optimizer::{Measure, Objective, OptimizerError, PhiMode, RunSettings, Schedule, TrainerBounds};
pub use propagation::WeightVector;
