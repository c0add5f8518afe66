//! Stochastic gradient descent normalised by a certified gradient bound.
//!
//! Iterates follow `x_{k+1} = x_k − (a_k/φ) ∇_x f(x_k, y_k)` with `φ ≥ Φ`, the
//! supremum of `‖∇_x f‖` over `B_{R₁} × B_ρ`. Under adequacy outside `B_{R₀}`
//! every iterate satisfies `‖x_k‖² + Σ_{j≥k} a_j² ≤ R₁²`, and [`run`] checks
//! that at every step.

pub mod diagnostics;
pub mod schedule;

pub use diagnostics::{CsvError, DiagnosticRow, Diagnostics, RunSummary};
pub use schedule::{hurwitz_zeta, Schedule, ScheduleError, ScheduleParams};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::propagation::{dot, norm};
use crate::sampling;

/// Relative slack on the induction margin, as a fraction of `R₁²`.
pub const MARGIN_TOLERANCE: f64 = 1e-9;
/// Finite supports up to this size are summed exactly.
pub const EXACT_SUPPORT_LIMIT: usize = 4096;
const PHI_FLOOR: f64 = 1e-12;
const MC_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizerError {
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("step normaliser must be positive, got {0}")]
    InvalidPhi(f64),
    #[error(
        "boundedness violated at step {k}: |x| = {x_norm}, R1 = {r1}, margin = {margin} \
         (implementation bug or a violated hypothesis)"
    )]
    BoundednessViolation { k: u64, x_norm: f64, r1: f64, margin: f64 },
    #[error("objective provides no analytic gradient bound")]
    NoAnalyticBound,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid measure: {0}")]
    InvalidMeasure(&'static str),
    #[error("objective evaluation failed: {0}")]
    Objective(String),
}

/// A per-sample objective `f(x, y)` with its gradient in `x`.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value_and_grad(&self, x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>), OptimizerError>;

    /// A certified bound on `‖∇_x f(x, y)‖` over `‖x‖ ≤ radius`, `y ∈ B_ρ`.
    fn gradient_bound(&self, _radius: f64) -> Option<f64> {
        None
    }
}

/// The sampling distribution `μ` of the `y_k`, supported in `B_ρ`.
#[derive(Debug, Clone)]
pub enum Measure {
    UniformBall { dim: usize, rho: f64 },
    FiniteSupport(FiniteSupport),
}

#[derive(Debug, Clone)]
pub struct FiniteSupport {
    rho: f64,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl FiniteSupport {
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Measure {
    pub fn uniform_ball(dim: usize, rho: f64) -> Result<Self, OptimizerError> {
        check_rho(rho)?;
        Ok(Measure::UniformBall { dim, rho })
    }

    /// Points must lie in `B_ρ` and the weights must sum to one within `1e-12`.
    pub fn finite_support(rho: f64, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self, OptimizerError> {
        check_rho(rho)?;
        if points.is_empty() {
            return Err(OptimizerError::InvalidMeasure("finite support needs at least one point"));
        }
        if points.len() != weights.len() {
            return Err(OptimizerError::DimensionMismatch { expected: points.len(), got: weights.len() });
        }
        let dim = points[0].len();
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(OptimizerError::DimensionMismatch { expected: dim, got: p.len() });
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(OptimizerError::InvalidMeasure("weights must be finite and non-negative"));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(OptimizerError::InvalidMeasure("weights must sum to 1"));
        }
        if points.iter().any(|p| norm(p) > rho) {
            return Err(OptimizerError::InvalidMeasure("support point outside the input ball"));
        }
        let index = WeightedIndex::new(&weights).map_err(|_| OptimizerError::InvalidMeasure("all weights are zero"))?;
        Ok(Measure::FiniteSupport(FiniteSupport { rho, points, weights, index }))
    }

    pub fn rho(&self) -> f64 {
        match self {
            Measure::UniformBall { rho, .. } => *rho,
            Measure::FiniteSupport(s) => s.rho,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Measure::UniformBall { dim, .. } => *dim,
            Measure::FiniteSupport(s) => s.points[0].len(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Measure::UniformBall { dim, rho } => sampling::uniform_in_ball(rng, *dim, *rho),
            Measure::FiniteSupport(s) => s.points[s.index.sample(rng)].clone(),
        }
    }

    /// Uniform draw from the whole input ball, whatever `μ` is.
    pub fn draw_domain<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        sampling::uniform_in_ball(rng, self.dim(), self.rho())
    }

    pub fn support(&self) -> Option<&FiniteSupport> {
        match self {
            Measure::FiniteSupport(s) => Some(s),
            Measure::UniformBall { .. } => None,
        }
    }
}

fn check_rho(rho: f64) -> Result<(), OptimizerError> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(OptimizerError::InvalidMeasure("input radius must be finite and positive"))
    }
}

/// `F(x) = ∫ f(x, y) dμ(y)` and `∇F(x)`, exact or Monte-Carlo.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanEstimate {
    pub value: f64,
    /// Standard error of `value`; zero when exact.
    pub value_se: f64,
    pub grad: Vec<f64>,
    pub exact: bool,
}

pub fn estimate_mean<O, R>(
    objective: &O,
    measure: &Measure,
    x: &[f64],
    mc_samples: usize,
    rng: &mut R,
) -> Result<MeanEstimate, OptimizerError>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let mut grad = vec![0.0; objective.dim()];
    if let Some(s) = measure.support().filter(|s| s.points.len() <= EXACT_SUPPORT_LIMIT) {
        let mut value = 0.0;
        for (p, &w) in s.points.iter().zip(&s.weights) {
            let (f, g) = objective.value_and_grad(x, p)?;
            value += w * f;
            for (acc, gi) in grad.iter_mut().zip(&g) {
                *acc += w * gi;
            }
        }
        return Ok(MeanEstimate { value, value_se: 0.0, grad, exact: true });
    }
    let n = mc_samples.max(2);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let y = measure.draw(rng);
        let (f, g) = objective.value_and_grad(x, &y)?;
        sum += f;
        sum_sq += f * f;
        for (acc, gi) in grad.iter_mut().zip(&g) {
            *acc += gi;
        }
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    grad.iter_mut().for_each(|g| *g /= nf);
    Ok(MeanEstimate { value: mean, value_se: (var / nf).sqrt(), grad, exact: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum PhiMode {
    #[default]
    Analytic,
    Sampled {
        samples: usize,
        #[serde(default = "default_safety")]
        safety: f64,
    },
}

fn default_safety() -> f64 {
    2.0
}

/// The certified constants of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainerBounds {
    pub r0: f64,
    pub a_sup: f64,
    pub sum_sq: f64,
    /// `∞` for unnormalised runs.
    pub r1: f64,
    pub phi_mode: Option<PhiMode>,
    pub phi_estimate: f64,
    pub phi: f64,
    /// Whether the induction margin is enforced at every step.
    pub enforce: bool,
}

/// `R₁ = max{√(‖x₀‖² + Σa_k²), √(R₀² + 2AR₀ + Σa_k²)}`.
pub fn compute_r1(x0_norm: f64, r0: f64, schedule: &Schedule) -> f64 {
    let s = schedule.sum_sq();
    let a = schedule.sup();
    (x0_norm * x0_norm + s).sqrt().max((r0 * r0 + 2.0 * a * r0 + s).sqrt())
}

/// Returns `(Φ_estimate, φ)` with `φ = max(Φ_estimate, 1e-12)`.
pub fn estimate_phi<O, R>(
    objective: &O,
    measure: &Measure,
    r1: f64,
    mode: PhiMode,
    rng: &mut R,
) -> Result<(f64, f64), OptimizerError>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let estimate = match mode {
        PhiMode::Analytic => objective.gradient_bound(r1).ok_or(OptimizerError::NoAnalyticBound)?,
        PhiMode::Sampled { samples, safety } => safety * sampled_gradient_max(objective, measure, r1, samples, rng)?,
    };
    Ok((estimate, estimate.max(PHI_FLOOR)))
}

/// Raw `max ‖∇_x f(x, y)‖` over uniform draws in `B_radius × B_ρ`.
pub fn sampled_gradient_max<O, R>(
    objective: &O,
    measure: &Measure,
    radius: f64,
    samples: usize,
    rng: &mut R,
) -> Result<f64, OptimizerError>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let mut max = 0.0f64;
    for _ in 0..samples {
        let x = sampling::uniform_in_ball(rng, objective.dim(), radius);
        let y = measure.draw_domain(rng);
        let (_, g) = objective.value_and_grad(&x, &y)?;
        max = max.max(norm(&g));
    }
    Ok(max)
}

impl TrainerBounds {
    /// Bounds for the normalised iteration given an adequacy radius `R₀`.
    pub fn certify<O, R>(
        objective: &O,
        measure: &Measure,
        schedule: &Schedule,
        r0: f64,
        x0: &[f64],
        mode: PhiMode,
        rng: &mut R,
    ) -> Result<Self, OptimizerError>
    where
        O: Objective + ?Sized,
        R: Rng + ?Sized,
    {
        let r1 = compute_r1(norm(x0), r0, schedule);
        let (phi_estimate, phi) = estimate_phi(objective, measure, r1, mode, rng)?;
        Ok(TrainerBounds {
            r0,
            a_sup: schedule.sup(),
            sum_sq: schedule.sum_sq(),
            r1,
            phi_mode: Some(mode),
            phi_estimate,
            phi,
            enforce: true,
        })
    }

    /// Raw steps `a_k`, no bound and no enforcement.
    pub fn classical(schedule: &Schedule) -> Self {
        TrainerBounds {
            r0: f64::NAN,
            a_sup: schedule.sup(),
            sum_sq: schedule.sum_sq(),
            r1: f64::INFINITY,
            phi_mode: None,
            phi_estimate: f64::NAN,
            phi: 1.0,
            enforce: false,
        }
    }

    /// `R₁² − (‖x‖² + Σ_{j≥k} a_j²)`, `NaN` without a bound.
    pub fn margin(&self, schedule: &Schedule, k: u64, x_norm: f64) -> f64 {
        if self.r1.is_finite() {
            self.r1 * self.r1 - (x_norm * x_norm + schedule.tail_sq(k))
        } else {
            f64::NAN
        }
    }
}

/// `x_k − (a_k/φ) g`.
pub fn sgd_step(x: &[f64], grad: &[f64], a_k: f64, phi: f64) -> Result<Vec<f64>, OptimizerError> {
    if !(phi > 0.0) {
        return Err(OptimizerError::InvalidPhi(phi));
    }
    if x.len() != grad.len() {
        return Err(OptimizerError::DimensionMismatch { expected: x.len(), got: grad.len() });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(OptimizerError::NonFiniteGradient);
    }
    let scale = a_k / phi;
    Ok(x.iter().zip(grad).map(|(xi, gi)| xi - scale * gi).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub steps: u64,
    /// Rows (and `F`, `∇F` estimates) every `cadence` steps, plus the last.
    pub cadence: u64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { steps: 0, cadence: 100, mc_samples: 256, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub diagnostics: Diagnostics,
    pub x_final: Vec<f64>,
}

/// Generator for draw `k`: stream `k` of the seeded ChaCha key.
pub fn step_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Executes `settings.steps` updates from `x0`.
///
/// `S_k` and `z_k` accumulate over the recorded steps only, so they are the
/// exact partial sums when `cadence = 1`.
pub fn run<O>(
    objective: &O,
    measure: &Measure,
    schedule: &Schedule,
    bounds: &TrainerBounds,
    x0: &[f64],
    settings: &RunSettings,
) -> Result<RunOutcome, OptimizerError>
where
    O: Objective + ?Sized,
{
    if x0.len() != objective.dim() {
        return Err(OptimizerError::DimensionMismatch { expected: objective.dim(), got: x0.len() });
    }
    if !(bounds.phi > 0.0) {
        return Err(OptimizerError::InvalidPhi(bounds.phi));
    }
    let steps = settings.steps;
    let cadence = settings.cadence.max(1);
    let tolerance = MARGIN_TOLERANCE * bounds.r1 * bounds.r1;
    let mut x = x0.to_vec();
    let mut rows = Vec::new();
    let mut summary = RunSummary {
        steps: 0,
        max_x_norm: norm(x0),
        min_margin: None,
        max_step_ratio: 0.0,
        diverged_at: None,
        final_x_norm: norm(x0),
    };
    if steps == 0 {
        summary.min_margin = Some(bounds.margin(schedule, 0, norm(x0))).filter(|m| !m.is_nan());
        return Ok(RunOutcome { diagnostics: Diagnostics { rows, summary }, x_final: x });
    }
    let (mut s_k, mut z_k) = (0.0, 0.0);
    for k in 0..=steps {
        let x_norm = norm(&x);
        let a_k = schedule.a(k);
        let margin = bounds.margin(schedule, k, x_norm);
        summary.max_x_norm = summary.max_x_norm.max(x_norm);
        if !margin.is_nan() {
            summary.min_margin = Some(summary.min_margin.map_or(margin, |m| m.min(margin)));
        }
        if bounds.enforce && (margin < -tolerance || x_norm >= bounds.r1 || !x_norm.is_finite()) {
            return Err(OptimizerError::BoundednessViolation { k, x_norm, r1: bounds.r1, margin });
        }
        let y = measure.draw(&mut step_rng(settings.seed, k));
        let (f_inst, grad) = objective.value_and_grad(&x, &y)?;
        let finite = f_inst.is_finite() && grad.iter().all(|g| g.is_finite());
        if !finite && bounds.enforce {
            return Err(OptimizerError::NonFiniteGradient);
        }
        let record = k % cadence == 0 || k == steps || !finite;
        if record {
            let mean = if finite {
                estimate_mean(objective, measure, &x, settings.mc_samples, &mut step_rng(settings.seed ^ MC_SEED_MIX, k))?
            } else {
                MeanEstimate { value: f64::NAN, value_se: f64::NAN, grad: vec![f64::NAN; x.len()], exact: false }
            };
            let grad_f_norm = norm(&mean.grad);
            let noise: Vec<f64> = grad.iter().zip(&mean.grad).map(|(g, gf)| g - gf).collect();
            s_k += a_k * grad_f_norm * grad_f_norm;
            z_k += a_k * dot(&mean.grad, &noise);
            rows.push(DiagnosticRow {
                k,
                a_k,
                x_norm,
                margin,
                f_inst,
                grad_inst_norm: norm(&grad),
                f_est: mean.value,
                f_se: mean.value_se,
                grad_f_norm_est: grad_f_norm,
                s_k,
                z_k,
            });
        }
        if !finite {
            summary.diverged_at = Some(k);
            break;
        }
        if k == steps {
            break;
        }
        let next = sgd_step(&x, &grad, a_k, bounds.phi)?;
        if !next.iter().all(|v| v.is_finite()) {
            if bounds.enforce {
                return Err(OptimizerError::NonFiniteGradient);
            }
            summary.diverged_at = Some(k + 1);
            summary.steps = k;
            break;
        }
        if x_norm < bounds.r1 {
            let moved = norm(&next.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
            summary.max_step_ratio = summary.max_step_ratio.max(moved / a_k);
        }
        x = next;
        summary.steps = k + 1;
    }
    summary.final_x_norm = norm(&x);
    Ok(RunOutcome { diagnostics: Diagnostics { rows, summary }, x_final: x })
}

/// Sampled `max ‖∇f(x,y) − ∇f(x',y)‖ / ‖x − x'‖` over random pairs in
/// `B_radius`, reported for transparency only.
pub fn estimate_lipschitz<O, R>(objective: &O, measure: &Measure, radius: f64, pairs: usize, rng: &mut R) -> Result<f64, OptimizerError>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let mut best = 0.0f64;
    for _ in 0..pairs {
        let a = sampling::uniform_in_ball(rng, objective.dim(), radius);
        let b = sampling::uniform_in_ball(rng, objective.dim(), radius);
        let y = measure.draw(rng);
        let (_, ga) = objective.value_and_grad(&a, &y)?;
        let (_, gb) = objective.value_and_grad(&b, &y)?;
        let dx = norm(&a.iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>());
        if dx > 0.0 {
            best = best.max(norm(&ga.iter().zip(&gb).map(|(p, q)| p - q).collect::<Vec<_>>()) / dx);
        }
    }
    Ok(best)
}

/// Sampled `sup |F|` over `B_radius`.
pub fn estimate_mean_sup<O, R>(
    objective: &O,
    measure: &Measure,
    radius: f64,
    samples: usize,
    mc_samples: usize,
    rng: &mut R,
) -> Result<f64, OptimizerError>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let mut best = 0.0f64;
    for _ in 0..samples {
        let x = sampling::uniform_in_ball(rng, objective.dim(), radius);
        best = best.max(estimate_mean(objective, measure, &x, mc_samples, rng)?.value.abs());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `f(x, y) = ‖x − y‖²`.
    struct Quadratic {
        rho: f64,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            1
        }

        fn value_and_grad(&self, x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>), OptimizerError> {
            let d = x[0] - y[0];
            Ok((d * d, vec![2.0 * d]))
        }

        fn gradient_bound(&self, radius: f64) -> Option<f64> {
            Some(2.0 * (radius + self.rho))
        }
    }

    struct Flat;

    impl Objective for Flat {
        fn dim(&self) -> usize {
            3
        }

        fn value_and_grad(&self, _x: &[f64], _y: &[f64]) -> Result<(f64, Vec<f64>), OptimizerError> {
            Ok((1.0, vec![0.0; 3]))
        }
    }

    fn two_points() -> Measure {
        Measure::finite_support(0.5, vec![vec![-0.5], vec![0.5]], vec![0.5, 0.5]).unwrap()
    }

    fn toy_bounds(schedule: &Schedule, x0: &[f64]) -> TrainerBounds {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        TrainerBounds::certify(&Quadratic { rho: 0.5 }, &two_points(), schedule, 0.5, x0, PhiMode::Analytic, &mut rng).unwrap()
    }

    #[test]
    fn worked_r1() {
        let s = Schedule::power_law(1.0, 1.0).unwrap();
        // √(1 + 2 + π²/6), mpmath
        assert!((compute_r1(0.0, 1.0, &s) - 2.155_210_910_061_525).abs() < 1e-14);
        assert_eq!(compute_r1(0.0, 0.0, &s), s.sum_sq().sqrt());
        assert_eq!(compute_r1(1e6, 1.0, &s), (1e12 + s.sum_sq()).sqrt());
    }

    #[test]
    fn sgd_step_substitution() {
        assert_eq!(sgd_step(&[1.0, 1.0], &[0.2, -0.4], 0.5, 2.0).unwrap(), vec![0.95, 1.1]);
        assert_eq!(sgd_step(&[3.0, -1.0], &[0.0, 0.0], 0.5, 2.0).unwrap(), vec![3.0, -1.0]);
        assert_eq!(sgd_step(&[1.0], &[f64::NAN], 0.5, 2.0), Err(OptimizerError::NonFiniteGradient));
        assert_eq!(sgd_step(&[1.0], &[1.0], 0.5, 0.0), Err(OptimizerError::InvalidPhi(0.0)));
    }

    #[test]
    fn zero_gradient_objective_hits_phi_floor() {
        let m = Measure::uniform_ball(3, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (est, phi) = estimate_phi(&Flat, &m, 2.0, PhiMode::Sampled { samples: 50, safety: 2.0 }, &mut rng).unwrap();
        assert_eq!(est, 0.0);
        assert_eq!(phi, 1e-12);
        assert_eq!(estimate_phi(&Flat, &m, 2.0, PhiMode::Analytic, &mut rng), Err(OptimizerError::NoAnalyticBound));
    }

    #[test]
    fn measure_validation() {
        assert!(Measure::finite_support(0.5, vec![vec![0.6]], vec![1.0]).is_err());
        assert!(Measure::finite_support(1.0, vec![vec![0.1], vec![0.2]], vec![0.5, 0.5 + 1e-10]).is_err());
        assert!(Measure::finite_support(1.0, vec![vec![0.1], vec![0.2]], vec![0.5, 0.5 + 1e-13]).is_ok());
        assert!(Measure::uniform_ball(2, f64::INFINITY).is_err());
    }

    #[test]
    fn exact_mean_for_finite_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let est = estimate_mean(&Quadratic { rho: 0.5 }, &two_points(), &[0.3], 256, &mut rng).unwrap();
        assert!(est.exact);
        assert!((est.value - (0.09 + 0.25)).abs() < 1e-15);
        assert!((est.grad[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn toy_quadratic_converges() {
        let s = Schedule::power_law(1.0, 1.0).unwrap();
        let x0 = [0.4];
        let bounds = toy_bounds(&s, &x0);
        let settings = RunSettings { steps: 100_000, cadence: 1000, mc_samples: 256, seed: 7 };
        let out = run(&Quadratic { rho: 0.5 }, &two_points(), &s, &bounds, &x0, &settings).unwrap();
        assert!(out.x_final[0].abs() <= 0.05, "{}", out.x_final[0]);
        assert!(out.diagnostics.summary.max_x_norm < bounds.r1);
        assert!(out.diagnostics.summary.min_margin.unwrap() >= -MARGIN_TOLERANCE * bounds.r1 * bounds.r1);
        assert!(out.diagnostics.summary.max_step_ratio <= 1.0 + 1e-12);
        assert_eq!(out.diagnostics.rows.last().unwrap().k, 100_000);
        assert_eq!(out.diagnostics.rows.len(), 101);
    }

    #[test]
    fn empty_budget_returns_start() {
        let s = Schedule::power_law(1.0, 1.0).unwrap();
        let bounds = toy_bounds(&s, &[0.2]);
        let out = run(&Quadratic { rho: 0.5 }, &two_points(), &s, &bounds, &[0.2], &RunSettings::default()).unwrap();
        assert_eq!(out.x_final, vec![0.2]);
        assert!(out.diagnostics.rows.is_empty());
    }

    #[test]
    fn runs_are_replayable() {
        let s = Schedule::power_law(1.0, 0.7).unwrap();
        let m = Measure::uniform_ball(1, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bounds = TrainerBounds::certify(&Quadratic { rho: 0.5 }, &m, &s, 0.5, &[0.1], PhiMode::Analytic, &mut rng).unwrap();
        let settings = RunSettings { steps: 3000, cadence: 7, mc_samples: 64, seed: 11 };
        let a = run(&Quadratic { rho: 0.5 }, &m, &s, &bounds, &[0.1], &settings).unwrap();
        let b = run(&Quadratic { rho: 0.5 }, &m, &s, &bounds, &[0.1], &settings).unwrap();
        assert_eq!(a, b);
        let c = run(&Quadratic { rho: 0.5 }, &m, &s, &bounds, &[0.1], &RunSettings { seed: 12, ..settings }).unwrap();
        assert_ne!(a.x_final, c.x_final);
    }

    #[test]
    fn violated_hypothesis_is_reported() {
        // R₀ too small for this objective: φ is too small and iterates escape
        let s = Schedule::power_law(1.0, 1.0).unwrap();
        let mut bounds = toy_bounds(&s, &[0.0]);
        bounds.phi = 1e-3;
        let err = run(&Quadratic { rho: 0.5 }, &two_points(), &s, &bounds, &[0.0], &RunSettings { steps: 100, ..Default::default() });
        assert!(matches!(err, Err(OptimizerError::BoundednessViolation { .. })), "{err:?}");
    }

    #[test]
    fn classical_run_records_divergence() {
        struct Blowup;
        impl Objective for Blowup {
            fn dim(&self) -> usize {
                1
            }
            fn value_and_grad(&self, x: &[f64], _y: &[f64]) -> Result<(f64, Vec<f64>), OptimizerError> {
                Ok((x[0].powi(4), vec![-4.0 * x[0].powi(3)]))
            }
        }
        let s = Schedule::power_law(1.0, 1.0).unwrap();
        let bounds = TrainerBounds::classical(&s);
        let out = run(&Blowup, &two_points(), &s, &bounds, &[2.0], &RunSettings { steps: 50, ..Default::default() }).unwrap();
        assert!(out.diagnostics.summary.diverged_at.is_some());
        assert!(out.x_final[0].is_finite());
    }
}
