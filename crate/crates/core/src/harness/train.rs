//! Augmented and classical training pipelines, certification and run artifacts.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::augmentation::{certify_bound, solve_r0, AugmentationSpec, BoundCertificate};
use crate::graph::{AcyclicNet, GraphMetrics};
use crate::harness::config::{Engine, ExperimentConfig, InitSpec};
use crate::harness::objective::NetObjective;
use crate::harness::HarnessError;
use crate::optimizer::{self, step_rng, Diagnostics, Measure, RunSettings, RunSummary, Schedule, TrainerBounds};
use crate::propagation::layered::LayeredShape;
use crate::propagation::WeightVector;

const INIT_SEED_MIX: u64 = 0x5851_F42D_4C95_7F2D;
const PHI_SEED_MIX: u64 = 0x1405_7B7E_F767_814F;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainingMode {
    Augmented,
    Classical,
}

/// Everything assembled from a config before the first step.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub objective: NetObjective,
    pub measure: Measure,
    pub schedule: Schedule,
    pub metrics: GraphMetrics,
    pub omega: f64,
    pub lambda0: WeightVector,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub mode: TrainingMode,
    pub diagnostics: Diagnostics,
    pub weights: WeightVector,
    pub bounds: TrainerBounds,
    pub certificate: Option<BoundCertificate>,
    pub graph_height: usize,
    pub omega: f64,
    pub net: AcyclicNet,
    pub seed: u64,
}

/// Certified constants as printed by `augsgd certify`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyReport {
    pub graph_height: usize,
    pub m_bound: f64,
    pub omega: f64,
    pub theta_rho: f64,
    pub r0: f64,
    pub r1: f64,
    pub phi_estimate: f64,
    pub phi: f64,
}

/// Builds net, target, measure, schedule and `λ₀`. The augmentation is
/// replaced by `none` when `augmented` is false.
pub fn prepare(config: &ExperimentConfig, augmented: bool) -> Result<Prepared, HarnessError> {
    let spec = config.network_spec()?;
    let net = spec.build()?;
    let metrics = net.metrics();
    let layered = match config.engine {
        Engine::Dag => None,
        Engine::Layered => {
            let (sizes, act) = match &spec {
                crate::graph::NetworkSpec::Layered { layers, activation } => (layers.clone(), *activation),
                _ => return Err(HarnessError::Config("the layered engine needs a layered network".into())),
            };
            Some(LayeredShape::new(sizes, vec![act])?)
        }
    };
    let measure = config.measure.build(net.input_count())?;
    let target = config.target.build(net.input_count(), net.output_count())?;
    let omega = target.omega(config.measure.rho());
    let schedule = Schedule::from_params(config.schedule)?;
    let lambda0 = initial_weights(&config.init, net.edge_count(), config.seed)?;
    let augmentation = if augmented { config.augmentation } else { AugmentationSpec::None };
    let objective = NetObjective {
        net,
        layered,
        target,
        augmentation,
        certificate: None,
        graph_height: metrics.graph_height,
    };
    Ok(Prepared { objective, measure, schedule, metrics, omega, lambda0 })
}

pub fn initial_weights(init: &InitSpec, n: usize, seed: u64) -> Result<WeightVector, HarnessError> {
    Ok(match init {
        InitSpec::Uniform { half_width } => {
            let mut rng = step_rng(seed ^ INIT_SEED_MIX, 0);
            let w = *half_width;
            WeightVector::new((0..n).map(|_| if w > 0.0 { rng.random_range(-w..=w) } else { 0.0 }).collect())
        }
        InitSpec::Constant { value } => WeightVector::new(vec![*value; n]),
        InitSpec::Explicit { weights } => {
            if weights.len() != n {
                return Err(HarnessError::Config(format!("explicit init needs {n} weights, got {}", weights.len())));
            }
            WeightVector::new(weights.clone())
        }
    })
}

/// Certificate, `R₀`, `R₁` and `φ` for the augmented objective. Fills in the
/// objective's certificate.
pub fn certify_prepared(config: &ExperimentConfig, prep: &mut Prepared) -> Result<TrainerBounds, HarnessError> {
    let aug = prep.objective.augmentation;
    if !aug.is_adequate() {
        return Err(HarnessError::Config("augmented training needs an augmentation other than `none`".into()));
    }
    let h = prep.metrics.graph_height;
    aug.validate(h, !config.unchecked)?;
    let m = prep
        .objective
        .net
        .activation_bound()
        .ok_or_else(|| HarnessError::Config("augmented training needs bounded activations".into()))?;
    let cert = certify_bound(&prep.objective.net, &prep.metrics, config.measure.rho(), prep.omega, m)?;
    let r0 = solve_r0(&cert, &aug, h)?;
    prep.objective.certificate = Some(cert);
    let mut rng = step_rng(config.seed ^ PHI_SEED_MIX, 0);
    Ok(TrainerBounds::certify(
        &prep.objective,
        &prep.measure,
        &prep.schedule,
        r0,
        prep.lambda0.as_slice(),
        config.phi_mode,
        &mut rng,
    )?)
}

pub fn certify(config: &ExperimentConfig) -> Result<CertifyReport, HarnessError> {
    let mut prep = prepare(config, true)?;
    let bounds = certify_prepared(config, &mut prep)?;
    let cert = prep.objective.certificate.as_ref().expect("certified");
    Ok(CertifyReport {
        graph_height: prep.metrics.graph_height,
        m_bound: cert.m_bound,
        omega: prep.omega,
        theta_rho: cert.theta_rho,
        r0: bounds.r0,
        r1: bounds.r1,
        phi_estimate: bounds.phi_estimate,
        phi: bounds.phi,
    })
}

fn settings(config: &ExperimentConfig) -> RunSettings {
    RunSettings { steps: config.steps, cadence: config.cadence, mc_samples: config.mc_samples, seed: config.seed }
}

/// `λ_{k+1} = λ_k − (η_k/φ) ∇(E + α)(λ_k)` with certified `φ`, checking
/// `‖λ_k‖ < R₁` at every step.
pub fn train_augmented(config: &ExperimentConfig) -> Result<TrainingOutcome, HarnessError> {
    let mut prep = prepare(config, true)?;
    let bounds = certify_prepared(config, &mut prep)?;
    let out = optimizer::run(&prep.objective, &prep.measure, &prep.schedule, &bounds, prep.lambda0.as_slice(), &settings(config))?;
    Ok(TrainingOutcome {
        mode: TrainingMode::Augmented,
        diagnostics: out.diagnostics,
        weights: WeightVector::new(out.x_final),
        bounds,
        certificate: prep.objective.certificate.clone(),
        graph_height: prep.metrics.graph_height,
        omega: prep.omega,
        net: prep.objective.net,
        seed: config.seed,
    })
}

/// Plain back-propagation `λ_{k+1} = λ_k − η_k ∇E(λ_k)`. Divergence is
/// recorded in the summary, not raised.
pub fn train_classical(config: &ExperimentConfig) -> Result<TrainingOutcome, HarnessError> {
    let prep = prepare(config, false)?;
    let bounds = TrainerBounds::classical(&prep.schedule);
    let out = optimizer::run(&prep.objective, &prep.measure, &prep.schedule, &bounds, prep.lambda0.as_slice(), &settings(config))?;
    Ok(TrainingOutcome {
        mode: TrainingMode::Classical,
        diagnostics: out.diagnostics,
        weights: WeightVector::new(out.x_final),
        bounds,
        certificate: None,
        graph_height: prep.metrics.graph_height,
        omega: prep.omega,
        net: prep.objective.net,
        seed: config.seed,
    })
}

/// Sidecar written next to a diagnostics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub mode: TrainingMode,
    pub seed: u64,
    pub graph_height: usize,
    pub omega: f64,
    pub theta_rho: Option<f64>,
    pub r0: Option<f64>,
    pub r1: Option<f64>,
    pub phi_estimate: Option<f64>,
    pub phi: f64,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeight {
    pub source: String,
    pub target: String,
    pub weight: f64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl TrainingOutcome {
    pub fn meta(&self) -> RunMeta {
        RunMeta {
            mode: self.mode,
            seed: self.seed,
            graph_height: self.graph_height,
            omega: self.omega,
            theta_rho: self.certificate.as_ref().map(|c| c.theta_rho),
            r0: finite(self.bounds.r0),
            r1: finite(self.bounds.r1),
            phi_estimate: finite(self.bounds.phi_estimate),
            phi: self.bounds.phi,
            summary: self.diagnostics.summary.clone(),
        }
    }

    /// Writes `diagnostics.csv`, `diagnostics.meta.json` and `weights.json`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir)?;
        self.diagnostics.save_csv(&dir.join("diagnostics.csv"))?;
        std::fs::write(dir.join("diagnostics.meta.json"), serde_json::to_string_pretty(&self.meta())?)?;
        let weights: Vec<EdgeWeight> = self
            .weights
            .labelled(&self.net)
            .map(|(s, t, w)| EdgeWeight { source: s.to_string(), target: t.to_string(), weight: w })
            .collect();
        std::fs::write(dir.join("weights.json"), serde_json::to_string_pretty(&weights)?)?;
        Ok(())
    }
}
