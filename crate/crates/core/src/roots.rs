//! Safeguarded Newton-bisection for increasing scalar functions on a bracket.
//!
//! The solver assumes `f(lo) < 0 <= f(hi)`. Newton steps start from the right end
//! of the bracket; any step that leaves the current bracket, or any evaluation with
//! a non-positive or non-finite slope, falls back to bisection. For convex increasing
//! functions the Newton iterates approach the root from above.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Stop once `|f(x)| <= f_tol`.
    pub f_tol: f64,
    /// Stop once the bracket is narrower than `x_tol * max(1, |hi|)`.
    pub x_tol: f64,
    pub max_iter: usize,
    /// Disable Newton steps entirely (pure bisection).
    pub bisection_only: bool,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-15,
            x_tol: 4.0 * f64::EPSILON,
            max_iter: 400,
            bisection_only: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Finds a root of an increasing function `f` inside `[lo, hi]`.
///
/// The returned point always satisfies `f(x) >= 0`.
///
/// `f` returns the pair `(value, derivative)`. `f_lo` and `f_hi` are the values already
/// known at the bracket ends.
pub fn newton_bisect<F>(mut f: F, lo: f64, hi: f64, f_lo: f64, f_hi: f64, opts: RootOptions) -> Result<Root>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    if !(lo < hi) || !(f_lo < 0.0) || !(f_hi >= 0.0) {
        return Err(Error::RootNotConverged(format!(
            "invalid bracket [{lo}, {hi}] with values ({f_lo}, {f_hi})"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut f_hi = f_hi;
    if f_hi <= opts.f_tol {
        return Ok(Root { x: hi, value: f_hi, iterations: 0 });
    }

    let mut x = hi;
    let (mut fx, mut dfx) = f(x)?;
    for iter in 1..=opts.max_iter {
        let newton = if opts.bisection_only || !(dfx > 0.0) || !dfx.is_finite() {
            None
        } else {
            let candidate = x - fx / dfx;
            (candidate > lo && candidate < hi).then_some(candidate)
        };
        let next = newton.unwrap_or(0.5 * (lo + hi));

        let (fn_, dfn) = f(next)?;
        if !fn_.is_finite() {
            return Err(Error::RootNotConverged(format!("non-finite value at r = {next}")));
        }
        if fn_ >= 0.0 {
            hi = next;
            f_hi = fn_;
        } else {
            lo = next;
        }
        x = next;
        fx = fn_;
        dfx = dfn;

        if fx >= 0.0 && fx <= opts.f_tol {
            return Ok(Root { x, value: fx, iterations: iter });
        }
        if hi - lo <= opts.x_tol * hi.abs().max(1.0) {
            return Ok(Root { x: hi, value: f_hi, iterations: iter });
        }
        // Newton stalled on the left of the root: re-seed from the right end.
        if fx < 0.0 && newton.is_some() {
            x = hi;
            fx = f_hi;
            let (_, d) = f(hi)?;
            dfx = d;
        }
    }
    Err(Error::RootNotConverged(format!(
        "no convergence after {} iterations, bracket [{lo}, {hi}]",
        opts.max_iter
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let r = newton_bisect(|x| Ok((x * x * x - 2.0, 3.0 * x * x)), 0.0, 2.0, -2.0, 6.0, RootOptions::default())
            .unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn bisection_only_converges() {
        let opts = RootOptions { bisection_only: true, ..Default::default() };
        let r = newton_bisect(|x| Ok((x.exp() - 3.0, f64::NAN)), 0.0, 2.0, -2.0, 2.0f64.exp() - 3.0, opts).unwrap();
        assert!((r.x - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_bracket() {
        assert!(newton_bisect(|x| Ok((x, 1.0)), 1.0, 2.0, 1.0, 2.0, RootOptions::default()).is_err());
    }

    #[test]
    fn convex_root_lands_on_nonnegative_side() {
        let f = |x: f64| Ok((x * x + x - 1.0, 2.0 * x + 1.0));
        let r = newton_bisect(f, 0.0, 1.0, -1.0, 1.0, RootOptions::default()).unwrap();
        assert!(r.value >= 0.0);
        assert!((r.x - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }
}
