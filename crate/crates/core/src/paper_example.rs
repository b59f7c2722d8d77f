//! A smooth, z-convex constraint whose probability function is continuous but not
//! locally Lipschitz at the origin:
//!
//! `g(x, z1, z2) = α(x) e^{h(z1)} + z2 - 1` with `α(x) = max(x, 0)²`,
//! `h(t) = -1 - 4 log(1 - Φ(t))` and `ξ ~ N(0, I₂)`.
//!
//! For `t <= 0` the probability is `Φ(1)`; for `t > 0` it reduces to a one-dimensional
//! integral over `z1`, and `φ(0) - φ(t) >= ε√t` with `ε = Φ(1) - Φ(1 - e⁻¹)`.

use serde::Serialize;

use crate::distributions::{normal_cdf, normal_pdf, normal_sf};
use crate::error::{Error, Result};
use crate::gaussian_model::GaussianModel;
use crate::problem::{Component, InequalitySystem};
use crate::quadrature::integrate;

/// Beyond this point `h` continues along its tangent line, keeping it C¹, convex
/// and finite in double precision.
pub const H_CLAMP: f64 = 8.0;
/// Integration range for the one-dimensional formula; the Gaussian mass outside is < 1e-15.
pub const QUAD_RANGE: f64 = 8.0;
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn alpha(x: f64) -> f64 {
    if x >= 0.0 {
        x * x
    } else {
        0.0
    }
}

pub fn alpha_prime(x: f64) -> f64 {
    if x >= 0.0 {
        2.0 * x
    } else {
        0.0
    }
}

fn h_raw(t: f64) -> f64 {
    -1.0 - 4.0 * normal_sf(t).ln()
}

fn h_prime_raw(t: f64) -> f64 {
    4.0 * normal_pdf(t) / normal_sf(t)
}

pub fn h(t: f64) -> f64 {
    if t <= H_CLAMP {
        h_raw(t)
    } else {
        h_raw(H_CLAMP) + h_prime_raw(H_CLAMP) * (t - H_CLAMP)
    }
}

pub fn h_prime(t: f64) -> f64 {
    h_prime_raw(t.min(H_CLAMP))
}

pub fn example_system() -> InequalitySystem {
    InequalitySystem::new(1, 2, vec![Component::paper_example()]).expect("example dimensions are valid")
}

pub fn example_model() -> GaussianModel {
    GaussianModel::standard(2).expect("identity covariance")
}

/// `ε = Φ(1) - Φ(1 - e⁻¹)`.
pub fn epsilon() -> f64 {
    normal_cdf(1.0) - normal_cdf(1.0 - (-1.0f64).exp())
}

/// `φ(t)` from the one-dimensional formula.
pub fn example_phi_closed_form(t: f64, quad_tol: f64) -> Result<f64> {
    if !(quad_tol > 0.0) {
        return Err(Error::InvalidArgument("quadrature tolerance must be positive".into()));
    }
    if t <= 0.0 {
        return Ok(normal_cdf(1.0));
    }
    example_phi_integral(t, quad_tol)
}

/// `(1/√2π) ∫ e^{-s²/2} Φ(1 - α(t) e^{h(s)}) ds` by quadrature for any `t`, including
/// `t <= 0` where it reduces to `Φ(1)`.
pub fn example_phi_integral(t: f64, quad_tol: f64) -> Result<f64> {
    if !(quad_tol > 0.0) {
        return Err(Error::InvalidArgument("quadrature tolerance must be positive".into()));
    }
    let a = alpha(t);
    let r = integrate(
        |s| INV_SQRT_2PI * (-0.5 * s * s).exp() * normal_cdf(1.0 - a * h(s).exp()),
        -QUAD_RANGE,
        QUAD_RANGE,
        quad_tol,
    )?;
    Ok(r.value)
}

/// `φ(0) - φ(t)` integrated directly, avoiding the cancellation of two close values.
pub fn phi_gap(t: f64, quad_tol: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    let t2 = t * t;
    let phi1 = normal_cdf(1.0);
    let r = integrate(
        |s| INV_SQRT_2PI * (-0.5 * s * s).exp() * (phi1 - normal_cdf(1.0 - t2 * h(s).exp())),
        -QUAD_RANGE,
        QUAD_RANGE,
        quad_tol,
    )?;
    Ok(r.value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessRow {
    pub t: f64,
    pub phi_gap: f64,
    pub eps_sqrt_t: f64,
    /// `(φ(0) - φ(t)) / t`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessTable {
    pub rows: Vec<WitnessRow>,
    /// `φ(0) - φ(t) >= ε√t` on every row.
    pub bound_holds: bool,
    /// The difference quotient increases strictly as `t` decreases.
    pub ratio_increasing: bool,
}

impl WitnessTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,phi_gap,eps_sqrt_t,ratio\n");
        for r in &self.rows {
            out.push_str(&format!("{:e},{:e},{:e},{:e}\n", r.t, r.phi_gap, r.eps_sqrt_t, r.ratio));
        }
        out
    }
}

/// Evidence that `φ` is not Lipschitz at 0. Rows keep the order of `t_grid`.
pub fn nonsmoothness_witness(t_grid: &[f64], quad_tol: f64) -> Result<WitnessTable> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty t grid".into()));
    }
    if let Some(bad) = t_grid.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::OutOfRange { value: *bad, domain: "(0, 1)" });
    }
    let eps = epsilon();
    let rows = t_grid
        .iter()
        .map(|&t| {
            let gap = phi_gap(t, quad_tol)?;
            Ok(WitnessRow { t, phi_gap: gap, eps_sqrt_t: eps * t.sqrt(), ratio: gap / t })
        })
        .collect::<Result<Vec<_>>>()?;
    let bound_holds = rows.iter().all(|r| r.phi_gap >= r.eps_sqrt_t);

    let mut by_t: Vec<&WitnessRow> = rows.iter().collect();
    by_t.sort_by(|a, b| b.t.total_cmp(&a.t));
    let ratio_increasing = by_t.windows(2).all(|w| w[1].t < w[0].t && w[1].ratio > w[0].ratio);
    Ok(WitnessTable { rows, bound_holds, ratio_increasing })
}
