//! Regularity diagnostics: Slater point, the growth envelope
//! `l ‖z‖^{-m} exp(‖z‖² / (2‖L‖²))`, nice-direction probes, the radial-gradient
//! bound and the lower bound on the root slope, combined into a verdict.
//!
//! Probes are evidence, not proof. Every probe starts with fixed anchor points
//! (axis points at distance `1/l` in x and `l` in z) before the seeded random ones,
//! so obvious witnesses are reported reproducibly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::Estimator;
use crate::error::{Error, Result};
use crate::problem::InequalitySystem;
use crate::radial::{RadialEngine, RadiusOutcome, SlaterPoint};
use crate::sphere::SphereSample;

/// Allowed shortfall in `⟨∇_z g_i, Lv⟩ >= -g(x, 0) / ρ`.
pub const SLOPE_SLACK: f64 = 1e-10;
/// Radius of the x-neighbourhood used for the sampled Lipschitz modulus.
pub const LIPSCHITZ_RADIUS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlaterCheck {
    pub ok: bool,
    /// `g(x, 0)`
    pub value: f64,
}

/// `g(x, 0) < 0` for a system already in standardized coordinates.
pub fn check_slater(system: &InequalitySystem, x: &[f64]) -> Result<SlaterCheck> {
    let value = system.eval(x, &vec![0.0; system.m()])?;
    Ok(SlaterCheck { ok: value < 0.0, value })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeWitness {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub component: usize,
    /// Gradient norm (growth) or Clarke directional derivative (nice direction).
    pub lhs: f64,
    pub envelope: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub ok: bool,
    pub l: f64,
    pub probes: usize,
    /// Probe points where some component could not be evaluated.
    pub skipped: usize,
    pub worst_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<ProbeWitness>,
    /// First probe with ratio above 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<ProbeWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NiceDirectionProbe {
    pub h: Vec<f64>,
    pub passed: bool,
    pub probes: usize,
    pub skipped: usize,
    pub worst_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<ProbeWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub checked: usize,
    pub violations: usize,
    /// Largest `‖term‖ / (ρ χ(ρ) M̂ / |g(x, 0)|)` seen.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeCheck {
    pub checked: usize,
    pub violations: usize,
    /// Smallest `⟨∇_z g_i, Lv⟩ + g(x, 0) / ρ` over active components.
    pub min_slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    StrictDifferentiable,
    LipschitzOnly,
    Unknown,
}

/// Strict differentiability needs growth (or no infinite directions) and no ties;
/// growth or boundedness with ties gives Lipschitz continuity only.
pub fn classify_differentiability(growth_ok: bool, all_finite: bool, tie_fraction: f64) -> Verdict {
    let regular = growth_ok || all_finite;
    match (regular, tie_fraction == 0.0) {
        (true, true) => Verdict::StrictDifferentiable,
        (true, false) => Verdict::LipschitzOnly,
        (false, _) => Verdict::Unknown,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub slater: SlaterCheck,
    pub growth: GrowthCheck,
    pub nice_directions: Vec<NiceDirectionProbe>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_check: Option<BoundCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_check: Option<SlopeCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tie_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infinite_fraction: Option<f64>,
    /// `2 l K K* / |g(x0, 0)|`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_hat: Option<f64>,
    pub condition_number: f64,
    pub near_singular: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsOptions {
    pub l: f64,
    pub probes: usize,
    pub seed: u64,
    /// Directions for the nice-direction probe; `None` means `±e_j`.
    pub directions: Option<Vec<Vec<f64>>>,
    /// Finite directions used by the gradient-bound check.
    pub bound_directions: usize,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self { l: 1.0, probes: 2000, seed: 0, directions: None, bound_directions: 256 }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn envelope(l: f64, z: &[f64], m: usize, l_norm: f64) -> f64 {
    let r = norm(z);
    l * r.powi(-(m as i32)) * (r * r / (2.0 * l_norm * l_norm)).exp()
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let r = norm(&v);
        if r > 0.0 {
            return v.into_iter().map(|a| a / r).collect();
        }
    }
}

/// Anchor points first, then `probes` random pairs `y ∈ B_{1/l}(x0)`, `l <= ‖z‖ <= z_max`.
fn probe_points(
    x0: &[f64],
    direction: Option<&[f64]>,
    l: f64,
    m: usize,
    z_max: f64,
    probes: usize,
    seed: u64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = x0.len();
    let mut ys: Vec<Vec<f64>> = Vec::new();
    if let Some(h) = direction {
        let hn = norm(h);
        for s in [1.0, 0.5, 0.25] {
            ys.push(x0.iter().zip(h).map(|(a, b)| a + s * b / (hn * l)).collect());
        }
    }
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut y = x0.to_vec();
            y[j] += sign / l;
            ys.push(y);
        }
    }
    ys.push(x0.to_vec());
    let mut zs = Vec::new();
    for k in 0..m {
        for sign in [1.0, -1.0] {
            let mut z = vec![0.0; m];
            z[k] = sign * l;
            zs.push(z);
        }
    }
    let mut out: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for y in &ys {
        for z in &zs {
            out.push((y.clone(), z.clone()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z_hi = z_max.max(l);
    for _ in 0..probes {
        let y = if n == 0 {
            Vec::new()
        } else {
            let d = unit_gaussian(&mut rng, n);
            let u: f64 = rng.random::<f64>().powf(1.0 / n as f64) / l;
            x0.iter().zip(&d).map(|(a, b)| a + u * b).collect()
        };
        let s = unit_gaussian(&mut rng, m);
        let r = l + (z_hi - l) * rng.random::<f64>();
        out.push((y, s.into_iter().map(|a| r * a).collect()));
    }
    out
}

/// Compares `max_i ‖∇_x g_i(y, z)‖` against the growth envelope on probe points.
pub fn check_growth(engine: &RadialEngine, x0: &[f64], l: f64, probes: usize, seed: u64) -> Result<GrowthCheck> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidArgument(format!("growth constant l = {l} must be positive")));
    }
    let sys = engine.system();
    let model = engine.model();
    let m = sys.m();
    let l_norm = model.cholesky_norm();
    let points = probe_points(x0, None, l, m, engine.cutoff() * l_norm, probes, seed);

    let mut check = GrowthCheck {
        ok: true,
        l,
        probes: 0,
        skipped: 0,
        worst_ratio: 0.0,
        worst: None,
        witness: None,
    };
    'points: for (y, z) in points {
        let env = envelope(l, &z, m, l_norm);
        let mut best: Option<(usize, f64)> = None;
        for i in 0..sys.len() {
            match sys.grad_x_component(i, &y, &z) {
                Ok(g) => {
                    let gn = norm(&g);
                    if best.is_none_or(|(_, b)| gn > b) {
                        best = Some((i, gn));
                    }
                }
                Err(_) => {
                    check.skipped += 1;
                    continue 'points;
                }
            }
        }
        check.probes += 1;
        let Some((component, lhs)) = best else { continue };
        let ratio = if env > 0.0 && env.is_finite() { lhs / env } else { 0.0 };
        if !ratio.is_finite() {
            continue;
        }
        let witness = || ProbeWitness { y: y.clone(), z: z.clone(), component, lhs, envelope: env, ratio };
        if ratio > check.worst_ratio || check.worst.is_none() {
            check.worst_ratio = ratio;
            check.worst = Some(witness());
        }
        if ratio > 1.0 && check.witness.is_none() {
            check.ok = false;
            check.witness = Some(witness());
        }
    }
    Ok(check)
}

/// Tests `g°(·, z)(y; h) <= l ‖z‖^{-m} e^{‖z‖²/(2‖L‖²)} ‖h‖` on probe points, with the
/// Clarke derivative of the max taken over components active at `(y, z)`.
pub fn probe_nice_direction(
    engine: &RadialEngine,
    x0: &[f64],
    h: &[f64],
    l: f64,
    probes: usize,
    seed: u64,
) -> Result<NiceDirectionProbe> {
    let hn = norm(h);
    if h.len() != x0.len() {
        return Err(Error::DimensionMismatch(format!("direction h has length {}", h.len())));
    }
    if !(hn > 0.0) {
        return Err(Error::InvalidArgument("probe direction h must be nonzero".into()));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidArgument(format!("cone constant l = {l} must be positive")));
    }
    let sys = engine.system();
    let m = sys.m();
    let l_norm = engine.model().cholesky_norm();
    let tol = engine.config().tie_tolerance;
    let points = probe_points(x0, Some(h), l, m, engine.cutoff() * l_norm, probes, seed);

    let mut out = NiceDirectionProbe {
        h: h.to_vec(),
        passed: true,
        probes: 0,
        skipped: 0,
        worst_ratio: f64::NEG_INFINITY,
        first_violation: None,
    };
    for (y, z) in points {
        let Ok(values) = sys.eval_all(&y, &z) else {
            out.skipped += 1;
            continue;
        };
        let g = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut best: Option<(usize, f64)> = None;
        let mut failed = false;
        for (i, gi) in values.iter().enumerate() {
            if (g - gi).abs() > tol * (1.0 + g.abs()) {
                continue;
            }
            match sys.grad_x_component(i, &y, &z) {
                Ok(grad) => {
                    let d: f64 = grad.iter().zip(h).map(|(a, b)| a * b).sum();
                    if best.is_none_or(|(_, b)| d > b) {
                        best = Some((i, d));
                    }
                }
                Err(_) => failed = true,
            }
        }
        let Some((component, lhs)) = best.filter(|_| !failed) else {
            out.skipped += 1;
            continue;
        };
        out.probes += 1;
        let env = envelope(l, &z, m, l_norm) * hn;
        let ratio = lhs / env;
        if !ratio.is_finite() {
            continue;
        }
        out.worst_ratio = out.worst_ratio.max(ratio);
        if lhs > env && out.first_violation.is_none() {
            out.passed = false;
            out.first_violation = Some(ProbeWitness { y, z, component, lhs, envelope: env, ratio });
        }
    }
    if !out.worst_ratio.is_finite() {
        out.worst_ratio = 0.0;
    }
    Ok(out)
}

/// Checks `⟨∇_z g_i(x, ρLv), Lv⟩ >= -g(x, 0)/ρ - SLOPE_SLACK` for every active component.
pub fn slope_check(engine: &RadialEngine, point: &SlaterPoint, sample: &SphereSample, outcomes: &[RadiusOutcome]) -> Result<SlopeCheck> {
    let g0 = point.value();
    let mut check = SlopeCheck { checked: 0, violations: 0, min_slack: f64::INFINITY };
    for (k, outcome) in outcomes.iter().enumerate() {
        let RadiusOutcome::Finite { rho, active, .. } = outcome else { continue };
        let w = engine.model().apply_cholesky(sample.direction(k));
        let z: Vec<f64> = w.iter().map(|a| rho * a).collect();
        for &i in &active.indices {
            let (_, slope) = engine.system().value_and_slope(i, &point.x, &z, &w)?;
            let slack = slope + g0 / rho;
            check.checked += 1;
            check.min_slack = check.min_slack.min(slack);
            if slack < -SLOPE_SLACK {
                check.violations += 1;
            }
        }
    }
    if !check.min_slack.is_finite() {
        check.min_slack = 0.0;
    }
    Ok(check)
}

/// `‖term‖ <= ρ χ(ρ) M̂ / |g(x, 0)|` with `M̂` the largest `‖∇_x g_i(y, ρLv)‖` over
/// sampled `y` within `LIPSCHITZ_RADIUS` of `x`.
pub fn bound_check(
    engine: &RadialEngine,
    point: &SlaterPoint,
    sample: &SphereSample,
    outcomes: &[RadiusOutcome],
    max_directions: usize,
    seed: u64,
) -> Result<BoundCheck> {
    let sys = engine.system();
    let n = sys.n();
    let g0 = point.value().abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = BoundCheck { checked: 0, violations: 0, worst_ratio: 0.0 };
    for (k, outcome) in outcomes.iter().enumerate() {
        if check.checked >= max_directions {
            break;
        }
        let RadiusOutcome::Finite { rho, active, .. } = outcome else { continue };
        let w = engine.model().apply_cholesky(sample.direction(k));
        let z: Vec<f64> = w.iter().map(|a| rho * a).collect();
        let mut ys = vec![point.x.clone()];
        for _ in 0..8 {
            if n == 0 {
                break;
            }
            let d = unit_gaussian(&mut rng, n);
            let u = LIPSCHITZ_RADIUS * rng.random::<f64>();
            ys.push(point.x.iter().zip(&d).map(|(a, b)| a + u * b).collect());
        }
        let density = engine.chi().pdf_unchecked(*rho);
        for &i in &active.indices {
            let mut m_hat = 0.0f64;
            for y in &ys {
                if let Ok(g) = sys.grad_x_component(i, y, &z) {
                    m_hat = m_hat.max(norm(&g));
                }
            }
            let (_, slope) = sys.value_and_slope(i, &point.x, &z, &w)?;
            let grad = sys.grad_x_component(i, &point.x, &z)?;
            let term = density * norm(&grad) / slope;
            let bound = rho * density * m_hat / g0;
            check.checked += 1;
            if bound > 0.0 {
                check.worst_ratio = check.worst_ratio.max(term / bound);
            }
            if term > bound * (1.0 + 1e-9) + 1e-12 {
                check.violations += 1;
            }
        }
    }
    Ok(check)
}

/// Runs every diagnostic at `x0`. Radial checks are skipped when `g(x0, 0) >= 0`.
pub fn run_diagnostics(
    est: &Estimator,
    x0: &[f64],
    sample: &SphereSample,
    opts: &DiagnosticsOptions,
) -> Result<DiagnosticsReport> {
    let engine = est.engine();
    let sys = engine.system();
    if x0.len() != sys.n() {
        return Err(Error::DimensionMismatch(format!("x has length {} but n = {}", x0.len(), sys.n())));
    }
    let slater = check_slater(sys, x0)?;
    let growth = check_growth(engine, x0, opts.l, opts.probes, opts.seed)?;
    let directions = opts.directions.clone().unwrap_or_else(|| {
        (0..x0.len())
            .flat_map(|j| {
                [1.0, -1.0].map(|s| {
                    let mut e = vec![0.0; x0.len()];
                    e[j] = s;
                    e
                })
            })
            .collect()
    });
    let nice_directions = directions
        .iter()
        .map(|h| probe_nice_direction(engine, x0, h, opts.l, opts.probes, opts.seed))
        .collect::<Result<Vec<_>>>()?;
    let model = engine.model();

    let mut report = DiagnosticsReport {
        slater,
        growth,
        nice_directions,
        bound_check: None,
        slope_check: None,
        tie_fraction: None,
        infinite_fraction: None,
        r_hat: None,
        condition_number: model.condition_number(),
        near_singular: model.is_near_singular(),
        verdict: Verdict::Unknown,
    };
    if !slater.ok {
        return Ok(report);
    }
    let (point, outcomes) = est.outcomes(x0, sample)?;
    let count = outcomes.len() as f64;
    let ties = outcomes.iter().filter(|o| o.is_tie()).count() as f64 / count;
    let infinite = outcomes.iter().filter(|o| !o.is_finite()).count() as f64 / count;
    report.tie_fraction = Some(ties);
    report.infinite_fraction = Some(infinite);
    report.slope_check = Some(slope_check(engine, &point, sample, &outcomes)?);
    if sys.is_smooth_in_x() {
        report.bound_check = Some(bound_check(engine, &point, sample, &outcomes, opts.bound_directions, opts.seed)?);
    }
    report.r_hat = Some(2.0 * opts.l * engine.chi().normalizer() * model.min_stretch_constant() / slater.value.abs());
    report.verdict = classify_differentiability(report.growth.ok, infinite == 0.0, ties);
    Ok(report)
}
