//! Independent checks of the sphere estimators: crude Monte Carlo on ξ itself and
//! central differences of the probability estimate over common directions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{Estimator, EstimatorOptions};
use crate::error::{Error, Result};
use crate::gaussian_model::GaussianModel;
use crate::problem::InequalitySystem;
use crate::sphere::SphereSample;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub value: f64,
    /// Binomial standard error `sqrt(p(1 - p) / N)`.
    pub stderr: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
}

/// Frequency of `g(x, ξ) <= 0` over `count` draws `ξ = μ + D⁻¹ L η`, `η ~ N(0, I)`.
pub fn oracle_probability_mc(
    system: &InequalitySystem,
    model: &GaussianModel,
    x: &[f64],
    count: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    if count == 0 {
        return Err(Error::InvalidArgument("oracle needs at least one draw".into()));
    }
    if system.m() != model.dim() || x.len() != system.n() {
        return Err(Error::DimensionMismatch("oracle inputs do not match the system".into()));
    }
    let m = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eta = vec![0.0; m];
    let mut hits = 0usize;
    for _ in 0..count {
        for e in eta.iter_mut() {
            *e = rng.sample(StandardNormal);
        }
        let xi = model.destandardize_point(&model.apply_cholesky(&eta));
        if system.eval(x, &xi)? <= 0.0 {
            hits += 1;
        }
    }
    let p = hits as f64 / count as f64;
    Ok(OracleEstimate { value: p, stderr: (p * (1.0 - p) / count as f64).sqrt(), n: count, seed })
}

/// Default central-difference step `1e-4 (1 + |x_j|)`.
pub fn default_fd_step(xj: f64) -> f64 {
    1e-4 * (1.0 + xj.abs())
}

/// Central differences of the sphere estimate, reusing `sample` at every point.
/// `step` overrides the default per-coordinate step.
pub fn oracle_gradient_fd(
    system: &InequalitySystem,
    model: &GaussianModel,
    x: &[f64],
    sample: &SphereSample,
    step: Option<f64>,
) -> Result<Vec<f64>> {
    let est = Estimator::new(system, model, EstimatorOptions::default())?;
    fd_gradient(&est, x, sample, step)
}

pub fn fd_gradient(est: &Estimator, x: &[f64], sample: &SphereSample, step: Option<f64>) -> Result<Vec<f64>> {
    if let Some(h) = step {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("finite-difference step {h} must be positive")));
        }
    }
    (0..x.len())
        .map(|j| {
            let h = step.unwrap_or_else(|| default_fd_step(x[j]));
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[j] += h;
            minus[j] -= h;
            let fp = est.probability(&plus, sample)?.value;
            let fm = est.probability(&minus, sample)?.value;
            Ok((fp - fm) / (plus[j] - minus[j]))
        })
        .collect()
}
