//! Radial weight augmentations and the gradient-bound certificate.
//!
//! An augmentation `α(λ)` depends on `‖λ‖` only. Adding it to the squared
//! error makes `λᵀ∇(E + α) ≥ 0` outside a ball of radius `R₀`, which is what
//! keeps the stochastic iterates bounded. The certificate `Θ_ρ` bounds
//! `‖∇_λ E‖ ≤ Θ_ρ(‖λ‖^{H(G)} + 1)` for inputs with `‖x‖ ≤ ρ`, and `R₀` is
//! found by solving the radial inequality
//! `λᵀ∇α(λ) ≥ ‖λ‖ Θ_ρ (‖λ‖^{H(G)} + 1)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{AcyclicNet, GraphMetrics, Role};
use crate::propagation::{dot, error_and_grad, norm, PropagationError, WeightVector};
use crate::sampling;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AugmentationError {
    #[error("exponent t = {t} must exceed H(G) + 1 = {min}")]
    InvalidExponent { t: f64, min: f64 },
    #[error("invalid augmentation parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("input radius must be finite")]
    InfiniteRho,
    #[error("invalid certificate input: {0}")]
    InvalidCertificateInput(&'static str),
    #[error("no adequate radius found (dominance never achieved)")]
    NoAdequateRadius,
    #[error("augmentation kind `none` has no adequacy radius")]
    NotAdequate,
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

/// One of the three radial augmentation families, or none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AugmentationSpec {
    /// `δ‖λ‖^t`.
    Power { delta: f64, t: f64 },
    /// `δ(‖λ‖ − r)^t` outside radius `r`, zero inside.
    ShiftedPower { delta: f64, r: f64, t: f64 },
    /// `e^{s} − Σ_{p=0}^{q} s^p/p!` with `s = ‖λ‖ − r`, zero inside radius `r`.
    ExpTail { r: f64, q: u32 },
    None,
}

impl AugmentationSpec {
    /// Checks the parameter domain. In provable mode the power families need
    /// `t > H(G) + 1`.
    pub fn validate(&self, graph_height: usize, provable: bool) -> Result<(), AugmentationError> {
        let min_t = graph_height as f64 + 1.0;
        match *self {
            AugmentationSpec::Power { delta, t } | AugmentationSpec::ShiftedPower { delta, t, .. } => {
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(AugmentationError::InvalidParameter("delta must be positive"));
                }
                if !t.is_finite() || t < 2.0 {
                    return Err(AugmentationError::InvalidParameter("t must be at least 2 for a locally Lipschitz gradient"));
                }
                if provable && t <= min_t {
                    return Err(AugmentationError::InvalidExponent { t, min: min_t });
                }
            }
            AugmentationSpec::ExpTail { q, .. } if q < 1 => {
                return Err(AugmentationError::InvalidParameter("q must be at least 1"));
            }
            _ => {}
        }
        if let AugmentationSpec::ShiftedPower { r, .. } | AugmentationSpec::ExpTail { r, .. } = *self {
            if !(r > 0.0 && r.is_finite()) {
                return Err(AugmentationError::InvalidParameter("r must be positive"));
            }
        }
        Ok(())
    }

    pub fn is_adequate(&self) -> bool {
        !matches!(self, AugmentationSpec::None)
    }

    /// `α` as a function of `R = ‖λ‖`.
    pub fn radial_value(&self, radius: f64) -> f64 {
        match *self {
            AugmentationSpec::Power { delta, t } => delta * radius.powf(t),
            AugmentationSpec::ShiftedPower { delta, r, t } => {
                if radius < r {
                    0.0
                } else {
                    delta * (radius - r).powf(t)
                }
            }
            AugmentationSpec::ExpTail { r, q } => {
                if radius < r {
                    0.0
                } else {
                    ln_exp_tail(radius - r, q + 1).exp()
                }
            }
            AugmentationSpec::None => 0.0,
        }
    }

    /// `dα/dR`.
    pub fn radial_derivative(&self, radius: f64) -> f64 {
        self.ln_radial_derivative(radius).exp()
    }

    /// `ln(dα/dR)`, `-∞` where the derivative vanishes. Finite where the
    /// linear-space value would overflow.
    pub fn ln_radial_derivative(&self, radius: f64) -> f64 {
        match *self {
            AugmentationSpec::Power { delta, t } => (delta * t).ln() + (t - 1.0) * radius.ln(),
            AugmentationSpec::ShiftedPower { delta, r, t } => {
                if radius <= r {
                    f64::NEG_INFINITY
                } else {
                    (delta * t).ln() + (t - 1.0) * (radius - r).ln()
                }
            }
            AugmentationSpec::ExpTail { r, q } => {
                if radius <= r {
                    f64::NEG_INFINITY
                } else {
                    ln_exp_tail(radius - r, q)
                }
            }
            AugmentationSpec::None => f64::NEG_INFINITY,
        }
    }

    pub fn value(&self, lambda: &[f64]) -> f64 {
        self.radial_value(norm(lambda))
    }

    /// `∇α(λ) = α'(‖λ‖) λ / ‖λ‖`, zero at the origin and inside the flat region.
    pub fn grad(&self, lambda: &[f64]) -> Vec<f64> {
        let radius = norm(lambda);
        let scale = match *self {
            // δ t ‖λ‖^{t-2}, finite at the origin for t ≥ 2
            AugmentationSpec::Power { delta, t } => {
                if radius == 0.0 {
                    if t == 2.0 { 2.0 * delta } else { 0.0 }
                } else {
                    delta * t * radius.powf(t - 2.0)
                }
            }
            _ if radius == 0.0 => 0.0,
            _ => self.radial_derivative(radius) / radius,
        };
        lambda.iter().map(|l| scale * l).collect()
    }

    /// Radius beyond which the dominance gap is monotone, so a single sign
    /// change is guaranteed past it.
    fn monotone_from(&self, graph_height: usize) -> f64 {
        match *self {
            AugmentationSpec::Power { .. } | AugmentationSpec::None => 0.0,
            AugmentationSpec::ShiftedPower { r, .. } => r,
            AugmentationSpec::ExpTail { r, .. } => r.max(graph_height as f64),
        }
    }
}

/// `ln Σ_{p≥q} s^p / p!` for `s ≥ 0`, summed directly so small `s` keeps full
/// precision.
pub fn ln_exp_tail(s: f64, q: u32) -> f64 {
    if s <= 0.0 {
        return if q == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let q = q as f64;
    if s > 700.0 && q < 0.5 * s {
        // e^{-s} Σ_{p<q} s^p/p! is far below machine epsilon here
        return s;
    }
    let ln_s = s.ln();
    let ln_fact_q: f64 = (1..=q as u64).map(|k| (k as f64).ln()).sum();
    let ln_first = q * ln_s - ln_fact_q;
    // terms grow until p ≈ s, so locate the peak first
    let peak = s.floor().max(q);
    let mut ln_peak = ln_first;
    let mut p = q;
    while p < peak {
        p += 1.0;
        ln_peak += ln_s - p.ln();
    }
    let mut sum = 0.0;
    let mut ln_term = ln_first;
    let mut p = q;
    loop {
        let rel = (ln_term - ln_peak).exp();
        sum += rel;
        if p > peak && rel < 1e-18 * sum {
            break;
        }
        p += 1.0;
        ln_term += ln_s - p.ln();
    }
    ln_peak + sum.ln()
}

/// Recursive bound `θ(v)` and the constant `Θ_ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub rho: f64,
    pub omega: f64,
    /// Normalised activation bound, at least `max(1, ρ)`.
    pub m_bound: f64,
    pub theta: Vec<f64>,
    pub theta_rho: f64,
}

/// Builds `θ` by induction on height:
/// `θ(u) = max{2M√#In(u), 2Ω_ρ}` at outputs, `θ(v) = 2M Σ_{e∈Out(v)} θ(t(e))`
/// elsewhere, then `Θ_ρ = 2M² Σ_e θ(t(e))`.
pub fn certify_bound(
    net: &AcyclicNet,
    metrics: &GraphMetrics,
    rho: f64,
    omega: f64,
    activation_bound: f64,
) -> Result<BoundCertificate, AugmentationError> {
    if !rho.is_finite() {
        return Err(AugmentationError::InfiniteRho);
    }
    if rho <= 0.0 {
        return Err(AugmentationError::InvalidCertificateInput("rho must be positive"));
    }
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(AugmentationError::InvalidCertificateInput("omega must be finite and non-negative"));
    }
    if !(activation_bound >= 0.0 && activation_bound.is_finite()) {
        return Err(AugmentationError::InvalidCertificateInput("activation bound must be finite"));
    }
    let m = activation_bound.max(1.0).max(rho);
    let n = net.vertex_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (metrics.height[v], v));
    let mut theta = vec![0.0; n];
    for v in order {
        theta[v] = if net.role(v) == Role::Output {
            let fan_in = net.in_edges(v).len() as f64;
            (2.0 * m * fan_in.sqrt()).max(2.0 * omega)
        } else {
            2.0 * m * net.out_edges(v).iter().map(|&e| theta[net.edge(e).target]).sum::<f64>()
        };
    }
    let theta_rho = 2.0 * m * m * net.edges().iter().map(|e| theta[e.target]).sum::<f64>();
    Ok(BoundCertificate { rho, omega, m_bound: m, theta, theta_rho })
}

/// Certificate using the net's own activation bounds.
pub fn certify_net(net: &AcyclicNet, metrics: &GraphMetrics, rho: f64, omega: f64) -> Result<BoundCertificate, AugmentationError> {
    let m = net
        .activation_bound()
        .ok_or(AugmentationError::InvalidCertificateInput("network has an activation without a uniform C² bound"))?;
    certify_bound(net, metrics, rho, omega, m)
}

impl BoundCertificate {
    /// `Θ_ρ(R^H + 1)`.
    pub fn error_gradient_bound(&self, radius: f64, graph_height: usize) -> f64 {
        self.theta_rho * (radius.powi(graph_height as i32) + 1.0)
    }
}

/// `λᵀ∇α − ‖λ‖Θ_ρ(‖λ‖^H + 1)` at `‖λ‖ = R`, in linear space.
pub fn dominance_gap(theta_rho: f64, spec: &AugmentationSpec, graph_height: usize, radius: f64) -> f64 {
    let h = graph_height as i32;
    radius * spec.radial_derivative(radius) - theta_rho * (radius.powi(h + 1) + radius)
}

/// Sign test for the dominance gap, evaluated in log space.
fn dominance_holds(theta_rho: f64, spec: &AugmentationSpec, graph_height: usize, radius: f64) -> bool {
    if theta_rho <= 0.0 {
        return true;
    }
    let h = graph_height as f64;
    let ln_poly = if radius > 1.0 {
        h * radius.ln() + (-h * radius.ln()).exp().ln_1p()
    } else {
        radius.powf(h).ln_1p()
    };
    spec.ln_radial_derivative(radius) >= theta_rho.ln() + ln_poly
}

/// Smallest bisection radius `R₀ ≥ 1` past which `λᵀ∇α(λ) ≥ ‖λ‖Θ_ρ(‖λ‖^H+1)`.
pub fn solve_r0(cert: &BoundCertificate, spec: &AugmentationSpec, graph_height: usize) -> Result<f64, AugmentationError> {
    solve_r0_for(cert.theta_rho, spec, graph_height)
}

pub fn solve_r0_for(theta_rho: f64, spec: &AugmentationSpec, graph_height: usize) -> Result<f64, AugmentationError> {
    if !spec.is_adequate() {
        return Err(AugmentationError::NotAdequate);
    }
    let holds = |r: f64| dominance_holds(theta_rho, spec, graph_height, r);
    let mono = spec.monotone_from(graph_height);
    let mut hi = 1.0f64;
    while !(holds(hi) && hi >= mono) {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(AugmentationError::NoAdequateRadius);
        }
    }
    // Below the monotone region the gap may change sign more than once; take
    // the last failing grid point as the lower bracket.
    const GRID: usize = 4096;
    let at = |i: usize| 1.0 + (hi - 1.0) * i as f64 / GRID as f64;
    let Some(last_fail) = (0..GRID).rev().find(|&i| !holds(at(i))) else {
        return Ok(1.0);
    };
    let (mut lo, mut hi) = (at(last_fail), at(last_fail + 1));
    let tol = 1e-9f64.max(8.0 * f64::EPSILON * hi);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `Φ ≤ Θ_ρ(R^H + 1) + sup_{‖λ‖≤R} ‖∇α‖`; the radial derivative is
/// non-decreasing for every family so the sup sits at `R`.
pub fn analytic_gradient_bound(cert: &BoundCertificate, spec: &AugmentationSpec, graph_height: usize, radius: f64) -> f64 {
    let alpha = if spec.is_adequate() { spec.radial_derivative(radius) } else { 0.0 };
    cert.error_gradient_bound(radius, graph_height) + alpha
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdequacyReport {
    pub samples: usize,
    pub radii: Vec<f64>,
    pub min_inner_product: f64,
    pub negative_count: usize,
}

/// Samples `x` uniformly in `B_ρ` and `λ` uniformly on each shell `‖λ‖ = R`
/// and reports the minimum of `λᵀ∇_λ(E(F(x,λ), g(x)) + α(λ))`.
pub fn adequacy_check<R, G>(
    net: &AcyclicNet,
    spec: &AugmentationSpec,
    target: G,
    rho: f64,
    radii: &[f64],
    samples_per_radius: usize,
    rng: &mut R,
) -> Result<AdequacyReport, AugmentationError>
where
    R: Rng + ?Sized,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut min_inner = f64::INFINITY;
    let mut negative = 0;
    for &radius in radii {
        for _ in 0..samples_per_radius {
            let x = sampling::uniform_in_ball(rng, net.input_count(), rho);
            let lambda = WeightVector::new(sampling::uniform_on_sphere(rng, net.edge_count(), radius));
            let y = target(&x);
            let (_, g) = error_and_grad(net, &lambda, &x, &y)?;
            let ga = spec.grad(lambda.as_slice());
            let inner = dot(lambda.as_slice(), &g.dlambda) + dot(lambda.as_slice(), &ga);
            if inner < 0.0 {
                negative += 1;
            }
            min_inner = min_inner.min(inner);
        }
    }
    Ok(AdequacyReport { samples: radii.len() * samples_per_radius, radii: radii.to_vec(), min_inner_product: min_inner, negative_count: negative })
}
