//! Uniform sampling on spheres and in balls of arbitrary dimension.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Uniform point on the sphere of the given radius: a normalised Gaussian
/// vector, redrawn in the (measure-zero) event it is too short to normalise.
pub fn uniform_on_sphere<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    if dim == 0 {
        return Vec::new();
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-300 {
            return v.into_iter().map(|x| x * radius / n).collect();
        }
    }
}

/// Uniform point in the closed ball: direction from [`uniform_on_sphere`],
/// radius `ρ U^{1/n}`.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    if dim == 0 {
        return Vec::new();
    }
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / dim as f64);
    uniform_on_sphere(rng, dim, r)
}
