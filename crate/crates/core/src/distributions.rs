//! One-dimensional kernels: the Chi law of the radius of a standard Gaussian vector
//! and the standard normal distribution.
//!
//! The Chi CDF is the regularized lower incomplete gamma function with shape `m/2`
//! evaluated at `t^2/2`. Both tails are exposed so callers working near `F = 1`
//! (the effectively-infinite cutoff) keep full relative precision.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, SQRT_2};

use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::roots::{newton_bisect, RootOptions};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Above this radius the Chi CDF is reported as exactly 1.
pub const CHI_SATURATION: f64 = 40.0;

/// Standard normal density.
#[inline]
pub fn normal_pdf(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

/// Standard normal distribution function Φ.
#[inline]
pub fn normal_cdf(t: f64) -> f64 {
    0.5 * erfc(-t * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(t)`, accurate for large positive `t`.
#[inline]
pub fn normal_sf(t: f64) -> f64 {
    0.5 * erfc(t * FRAC_1_SQRT_2)
}

/// Inverse of Φ on the open unit interval.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange { value: p, domain: "(0, 1)" });
    }
    let mut t = -SQRT_2 * erfc_inv(2.0 * p);
    // Newton polish against whichever tail keeps relative precision.
    for _ in 0..2 {
        let density = normal_pdf(t);
        if density == 0.0 {
            break;
        }
        let residual = if p < 0.5 { normal_cdf(t) - p } else { (1.0 - p) - normal_sf(t) };
        t -= residual / density;
    }
    Ok(t)
}

/// Chi distribution with `m` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiDistribution {
    degrees: usize,
    ln_normalizer: f64,
}

impl ChiDistribution {
    pub fn new(degrees: usize) -> Result<Self> {
        if degrees == 0 {
            return Err(Error::InvalidArgument("Chi distribution needs at least one degree of freedom".into()));
        }
        let half = degrees as f64 / 2.0;
        // K = 1 / (2^{m/2 - 1} Γ(m/2))
        let ln_normalizer = -(half - 1.0) * LN_2 - ln_gamma(half);
        Ok(Self { degrees, ln_normalizer })
    }

    pub fn degrees(&self) -> usize {
        self.degrees
    }

    /// The normalizing constant `K` of the density.
    pub fn normalizer(&self) -> f64 {
        self.ln_normalizer.exp()
    }

    fn shape(&self) -> f64 {
        self.degrees as f64 / 2.0
    }

    /// Density `K t^{m-1} e^{-t^2/2}`.
    pub fn pdf(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeArgument(t));
        }
        Ok(self.pdf_unchecked(t))
    }

    pub(crate) fn pdf_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return if self.degrees == 1 { self.normalizer() } else { 0.0 };
        }
        if t.is_infinite() {
            return 0.0;
        }
        (self.ln_normalizer + (self.degrees as f64 - 1.0) * t.ln() - 0.5 * t * t).exp()
    }

    /// Distribution function `F(t)`; `F(+inf) = 1`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeArgument(t));
        }
        Ok(self.cdf_unchecked(t))
    }

    pub(crate) fn cdf_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        if t > CHI_SATURATION {
            return 1.0;
        }
        let s = 0.5 * t * t;
        let a = self.shape();
        if s <= a {
            gamma_lr(a, s)
        } else {
            1.0 - gamma_ur(a, s)
        }
    }

    /// Survival function `1 - F(t)`, computed without cancellation in the upper tail.
    pub fn sf(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeArgument(t));
        }
        Ok(self.sf_unchecked(t))
    }

    pub(crate) fn sf_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 1.0;
        }
        if t > CHI_SATURATION {
            return 0.0;
        }
        let s = 0.5 * t * t;
        let a = self.shape();
        if s <= a {
            1.0 - gamma_lr(a, s)
        } else {
            gamma_ur(a, s)
        }
    }

    /// Smallest `t` with `F(t) = p`, for `p` in `[0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::OutOfRange { value: p, domain: "[0, 1)" });
        }
        if p == 0.0 {
            return Ok(0.0);
        }
        if p > 0.5 {
            return self.upper_quantile(1.0 - p);
        }
        self.solve(|t| (self.cdf_unchecked(t) - p, self.pdf_unchecked(t)), 1e-16 * p.max(1e-300))
    }

    /// The `t` with `1 - F(t) = q`, for `q` in `(0, 1]`.
    pub fn upper_quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::OutOfRange { value: q, domain: "(0, 1]" });
        }
        if q == 1.0 {
            return Ok(0.0);
        }
        self.solve(|t| (q - self.sf_unchecked(t), self.pdf_unchecked(t)), 1e-16 * q)
    }

    fn solve<F>(&self, f: F, f_tol: f64) -> Result<f64>
    where
        F: Fn(f64) -> (f64, f64),
    {
        let mut hi = 1.0;
        let mut f_hi = f(hi).0;
        while f_hi < 0.0 {
            hi *= 2.0;
            if hi > CHI_SATURATION {
                return Err(Error::OutOfRange { value: hi, domain: "Chi quantile bracket" });
            }
            f_hi = f(hi).0;
        }
        let f_lo = f(0.0).0;
        if f_lo >= 0.0 {
            return Ok(0.0);
        }
        let opts = RootOptions { f_tol, ..RootOptions::default() };
        newton_bisect(|t| Ok(f(t)), 0.0, hi, f_lo, f_hi, opts).map(|r| r.x)
    }
}
