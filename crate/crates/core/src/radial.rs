//! Per-direction kernel of the spheric-radial decomposition.
//!
//! For a fixed decision `x` with `g(x, 0) < 0` and a unit direction `v`, the map
//! `r ↦ g(x, r L v)` is convex and negative at 0, so it has at most one positive
//! root `ρ(x, v)`. The radial probability is `e(x, v) = F_η(ρ(x, v))` (and 1 when no
//! root exists), and for C¹ components the x-gradient of `e` at a finite direction is
//! `-χ(ρ) ∇_x g_i(x, ρLv) / ⟨∇_z g_i(x, ρLv), Lv⟩` for an active index `i`.
//!
//! Directions whose ray stays feasible up to the Chi quantile of level `1 - 1e-12` are
//! classified as effectively infinite; the mass beyond that cutoff is tracked.

use serde::Serialize;

use crate::distributions::ChiDistribution;
use crate::error::{Error, Result};
use crate::gaussian_model::GaussianModel;
use crate::problem::{ActiveSet, InequalitySystem, DEFAULT_TIE_TOLERANCE};
use crate::roots::{newton_bisect, RootOptions};

pub const DEFAULT_ROOT_TOLERANCE: f64 = 1e-10;
/// Tail probability beyond the effectively-infinite cutoff.
pub const DEFAULT_CUTOFF_TAIL: f64 = 1e-12;
/// Smallest admissible `⟨∇_z g_i, Lv⟩` in the gradient formula.
pub const DENOMINATOR_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialConfig {
    pub tie_tolerance: f64,
    pub root_tolerance: f64,
    pub cutoff_tail: f64,
}

impl Default for RadialConfig {
    fn default() -> Self {
        Self {
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
            root_tolerance: DEFAULT_ROOT_TOLERANCE,
            cutoff_tail: DEFAULT_CUTOFF_TAIL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RadiusOutcome {
    Finite {
        rho: f64,
        active: ActiveSet,
        /// `ρ_i(x, v)` per component, `None` when the component's ray never exits.
        component_roots: Vec<Option<f64>>,
    },
    EffectivelyInfinite {
        cutoff: f64,
        residual_prob: f64,
    },
}

impl RadiusOutcome {
    pub fn rho(&self) -> Option<f64> {
        match self {
            RadiusOutcome::Finite { rho, .. } => Some(*rho),
            RadiusOutcome::EffectivelyInfinite { .. } => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, RadiusOutcome::Finite { .. })
    }

    pub fn is_tie(&self) -> bool {
        matches!(self, RadiusOutcome::Finite { active, .. } if active.is_tie())
    }
}

/// One active component's contribution to the x-gradient of `e(x, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentTerm {
    pub component: usize,
    /// `⟨∇_z g_i(x, ρLv), Lv⟩`
    pub denominator: f64,
    /// `-χ(ρ) ∇_x g_i(x, ρLv) / denominator`
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectionGradient {
    Zero,
    Terms(Vec<ComponentTerm>),
}

/// Component values at the origin for a fixed decision `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaterPoint {
    pub x: Vec<f64>,
    pub g0: Vec<f64>,
}

impl SlaterPoint {
    /// `g(x, 0) = max_i g_i(x, 0)`.
    pub fn value(&self) -> f64 {
        self.g0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn holds(&self) -> bool {
        self.value() < 0.0
    }
}

/// Radial machinery for a standardized system `g̃` and the Cholesky factor of `R`.
#[derive(Debug, Clone)]
pub struct RadialEngine {
    system: InequalitySystem,
    model: GaussianModel,
    chi: ChiDistribution,
    cutoff: f64,
    cutoff_residual: f64,
    config: RadialConfig,
}

impl RadialEngine {
    /// `system` must already be standardized (see [`GaussianModel::standardize_system`]).
    pub fn new(system: InequalitySystem, model: GaussianModel, config: RadialConfig) -> Result<Self> {
        if system.m() != model.dim() {
            return Err(Error::DimensionMismatch(format!(
                "system random dimension {} differs from model dimension {}",
                system.m(),
                model.dim()
            )));
        }
        if !(config.cutoff_tail > 0.0 && config.cutoff_tail < 1.0) {
            return Err(Error::InvalidArgument("cutoff tail must lie in (0, 1)".into()));
        }
        let chi = ChiDistribution::new(model.dim())?;
        let mut cutoff = chi.upper_quantile(config.cutoff_tail)?;
        let mut residual = chi.sf(cutoff)?;
        // nudge outward until the tail mass is at most the configured level
        while residual > config.cutoff_tail {
            cutoff *= 1.0 + 1e-12;
            residual = chi.sf(cutoff)?;
        }
        Ok(Self { system, model, chi, cutoff, cutoff_residual: residual, config })
    }

    /// Convenience: standardizes `system` with `model` and builds the engine.
    pub fn from_problem(system: &InequalitySystem, model: &GaussianModel, config: RadialConfig) -> Result<Self> {
        Self::new(model.standardize_system(system)?, model.clone(), config)
    }

    pub fn system(&self) -> &InequalitySystem {
        &self.system
    }

    pub fn model(&self) -> &GaussianModel {
        &self.model
    }

    pub fn chi(&self) -> &ChiDistribution {
        &self.chi
    }

    pub fn config(&self) -> &RadialConfig {
        &self.config
    }

    /// The radius `r_max` beyond which a direction counts as infinite.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn cutoff_residual(&self) -> f64 {
        self.cutoff_residual
    }

    pub fn slater_point(&self, x: &[f64]) -> Result<SlaterPoint> {
        let zero = vec![0.0; self.system.m()];
        let g0 = self.system.eval_all(x, &zero)?;
        Ok(SlaterPoint { x: x.to_vec(), g0 })
    }

    /// Like [`Self::slater_point`] but fails with `SlaterViolation` when `g(x, 0) >= 0`.
    pub fn require_slater(&self, x: &[f64]) -> Result<SlaterPoint> {
        let point = self.slater_point(x)?;
        if !point.holds() {
            return Err(Error::SlaterViolation { value: point.value() });
        }
        Ok(point)
    }

    fn check_direction(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.model.dim() {
            return Err(Error::DimensionMismatch(format!("direction has length {}", v.len())));
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("direction norm {norm} is not 1")));
        }
        Ok(self.model.apply_cholesky(v))
    }

    fn component_root(&self, i: usize, point: &SlaterPoint, w: &[f64]) -> Result<Option<f64>> {
        let x = &point.x;
        let g0 = point.g0[i];
        let at = |r: f64| -> Vec<f64> { w.iter().map(|wk| r * wk).collect() };
        let value = |r: f64| self.system.eval_component(i, x, &at(r));

        let (mut lo, mut f_lo) = (0.0, g0);
        let mut slope = f64::NEG_INFINITY;
        let mut r = 1.0f64;
        let (hi, f_hi) = loop {
            let r_eval = r.min(self.cutoff);
            let f = value(r_eval)?;
            // secant slopes of a convex function never decrease
            let next_slope = (f - f_lo) / (r_eval - lo);
            if next_slope < slope - 1e-9 * (1.0 + slope.abs()) {
                return Err(Error::NonConvexityDetected(format!(
                    "component {i}: secant slope drops from {slope} to {next_slope} near r = {r_eval}"
                )));
            }
            if f >= 0.0 {
                break (r_eval, f);
            }
            if r_eval >= self.cutoff {
                return Ok(None);
            }
            slope = next_slope;
            lo = r_eval;
            f_lo = f;
            r *= 2.0;
        };

        let scale = 1.0 + g0.abs();
        let opts = RootOptions {
            f_tol: 1e-15 * scale,
            bisection_only: !self.system.components()[i].smooth_in_z,
            ..RootOptions::default()
        };
        let root = newton_bisect(
            |r| self.system.value_and_slope(i, x, &at(r), w),
            lo,
            hi,
            f_lo,
            f_hi,
            opts,
        )?;
        if root.value.abs() > self.config.root_tolerance * scale {
            return Err(Error::RootNotConverged(format!(
                "component {i}: residual {:e} at r = {}",
                root.value, root.x
            )));
        }
        let rho = root.x;
        if value(0.5 * rho)? >= 0.0 || value(2.0 * rho)? <= 0.0 {
            return Err(Error::NonConvexityDetected(format!(
                "component {i} is not negative below / positive above its root r = {rho}"
            )));
        }
        Ok(Some(rho))
    }

    /// Classifies `v` and returns the root `ρ(x, v)` with its active set.
    pub fn solve_radius(&self, point: &SlaterPoint, v: &[f64]) -> Result<RadiusOutcome> {
        if !point.holds() {
            return Err(Error::SlaterViolation { value: point.value() });
        }
        let w = self.check_direction(v)?;
        self.solve_radius_scaled(point, &w)
    }

    /// Same as [`Self::solve_radius`] with `w = Lv` precomputed.
    pub(crate) fn solve_radius_scaled(&self, point: &SlaterPoint, w: &[f64]) -> Result<RadiusOutcome> {
        let roots = (0..self.system.len())
            .map(|i| self.component_root(i, point, w))
            .collect::<Result<Vec<_>>>()?;
        let rho = roots.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        if !rho.is_finite() {
            return Ok(RadiusOutcome::EffectivelyInfinite {
                cutoff: self.cutoff,
                residual_prob: self.cutoff_residual,
            });
        }
        let tol = self.config.tie_tolerance;
        let indices = roots
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.filter(|r| (r - rho).abs() <= tol * (1.0 + rho)).map(|_| i))
            .collect();
        Ok(RadiusOutcome::Finite {
            rho,
            active: ActiveSet { indices, tolerance: tol },
            component_roots: roots,
        })
    }

    /// `e(x, v) = F_η(ρ(x, v))`, with `F_η(∞) = 1`.
    pub fn radial_probability(&self, outcome: &RadiusOutcome) -> f64 {
        radial_probability(outcome, &self.chi)
    }

    /// Per-component gradient terms at a finite direction; `Zero` for infinite ones.
    pub fn radial_gradient(&self, point: &SlaterPoint, v: &[f64], outcome: &RadiusOutcome) -> Result<DirectionGradient> {
        let w = self.check_direction(v)?;
        self.radial_gradient_scaled(point, &w, outcome)
    }

    pub(crate) fn radial_gradient_scaled(
        &self,
        point: &SlaterPoint,
        w: &[f64],
        outcome: &RadiusOutcome,
    ) -> Result<DirectionGradient> {
        let (rho, active) = match outcome {
            RadiusOutcome::EffectivelyInfinite { .. } => return Ok(DirectionGradient::Zero),
            RadiusOutcome::Finite { rho, active, .. } => (*rho, active),
        };
        let z: Vec<f64> = w.iter().map(|wk| rho * wk).collect();
        let density = self.chi.pdf_unchecked(rho);
        let mut terms = Vec::with_capacity(active.indices.len());
        for &i in &active.indices {
            if !self.system.components()[i].smooth_in_x {
                return Err(Error::NonSmoothComponent(i));
            }
            let (_, denominator) = self.system.value_and_slope(i, &point.x, &z, w)?;
            if !(denominator > DENOMINATOR_FLOOR) {
                return Err(Error::DegenerateDenominator { component: i, value: denominator });
            }
            let grad_x = self.system.grad_x_component(i, &point.x, &z)?;
            let factor = -density / denominator;
            terms.push(ComponentTerm {
                component: i,
                denominator,
                value: grad_x.into_iter().map(|gx| factor * gx).collect(),
            });
        }
        Ok(DirectionGradient::Terms(terms))
    }

    /// Chi measure of `{r >= 0 : g(x, rLv) <= 0}` without the Slater assumption.
    ///
    /// For convex `r ↦ g(x, rLv)` the set is an interval `[a, b]`; its endpoints are
    /// located around the minimizer found by golden-section search on `[0, r_max]`.
    /// With `g(x, 0) < 0` this agrees with [`Self::radial_probability`].
    pub fn radial_set_measure(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let w = self.check_direction(v)?;
        self.radial_set_measure_scaled(x, &w)
    }

    pub(crate) fn radial_set_measure_scaled(&self, x: &[f64], w: &[f64]) -> Result<f64> {
        let phi = |r: f64| -> Result<f64> {
            let z: Vec<f64> = w.iter().map(|wk| r * wk).collect();
            self.system.eval(x, &z)
        };
        let g0 = phi(0.0)?;
        let r_max = self.cutoff;

        let (r_star, f_star) = if g0 < 0.0 {
            (0.0, g0)
        } else {
            golden_min(&phi, 0.0, r_max)?
        };
        if f_star >= 0.0 {
            return Ok(0.0);
        }
        let a = if g0 <= 0.0 {
            0.0
        } else {
            bisect_sign_change(&phi, 0.0, r_star, true)?
        };
        let b = if phi(r_max)? <= 0.0 {
            f64::INFINITY
        } else {
            bisect_sign_change(&phi, r_star, r_max, false)?
        };
        let upper = if b.is_infinite() { 1.0 } else { self.chi.cdf_unchecked(b) };
        Ok((upper - self.chi.cdf_unchecked(a)).max(0.0))
    }
}

/// `F_η(ρ)` for finite directions and 1 otherwise.
pub fn radial_probability(outcome: &RadiusOutcome, chi: &ChiDistribution) -> f64 {
    match outcome {
        RadiusOutcome::Finite { rho, .. } => chi.cdf_unchecked(*rho),
        RadiusOutcome::EffectivelyInfinite { .. } => 1.0,
    }
}

fn golden_min<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut best = (c, fc);
    for _ in 0..120 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        for cand in [(c, fc), (d, fd)] {
            if cand.1 < best.1 {
                best = cand;
            }
        }
        if b - a <= 1e-13 * b.abs().max(1.0) || best.1 < 0.0 {
            break;
        }
    }
    let (fa, fb) = (f(a)?, f(b)?);
    for cand in [(a, fa), (b, fb)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    Ok(best)
}

/// Sign change of `f` on `[lo, hi]`. `decreasing` means `f(lo) > 0 >= f(hi)`.
fn bisect_sign_change<F: Fn(f64) -> Result<f64>>(f: &F, mut lo: f64, mut hi: f64, decreasing: bool) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let inside = f(mid)? <= 0.0;
        // keep `lo` outside the sublevel set when decreasing, inside when increasing
        if inside == decreasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
