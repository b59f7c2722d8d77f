//! Sphere averages of the radial kernel: probability, gradient and the
//! tie-policy enclosure of the Clarke subdifferential.
//!
//! Per-direction work runs on rayon when [`EstimatorOptions::parallel`] is set. Results
//! are collected in sample order and reduced serially with compensated summation, so
//! serial and parallel runs produce identical numbers.

pub mod diagnostics;
pub mod oracle;
pub mod policy;
pub mod stats;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian_model::GaussianModel;
use crate::problem::InequalitySystem;
use crate::radial::{DirectionGradient, RadialConfig, RadialEngine, RadiusOutcome, SlaterPoint};
use crate::sphere::{SamplerTag, SphereSample};

pub use diagnostics::{
    check_growth, check_slater, classify_differentiability, probe_nice_direction, BoundCheck, DiagnosticsOptions,
    DiagnosticsReport, GrowthCheck, SlopeCheck, NiceDirectionProbe, ProbeWitness, SlaterCheck, Verdict, run_diagnostics,
};
pub use oracle::{oracle_gradient_fd, oracle_probability_mc, OracleEstimate};
pub use policy::TiePolicy;
use stats::{mean_and_stderr, vector_mean_and_stderr};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorOptions {
    pub radial: RadialConfig,
    pub parallel: bool,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self { radial: RadialConfig::default(), parallel: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub sampler: SamplerTag,
    /// Fraction of directions with more than one active component.
    pub tie_fraction: f64,
    pub infinite_fraction: f64,
    /// Probability mass dropped by treating far-exiting rays as infinite.
    pub residual_infinite_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientEstimate {
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub sampler: SamplerTag,
    pub policy: TiePolicy,
    pub tie_fraction: f64,
    pub infinite_fraction: f64,
    pub residual_infinite_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyGradient {
    pub policy: TiePolicy,
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Status of the cone term that complements the integral part of the enclosure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeTerm {
    /// Growth check passed: the cone is the whole space, its polar is `{0}`.
    Trivial,
    /// Growth check failed: the enclosure reports the integral part only.
    Nontrivial,
    Unchecked,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubdiffEnclosure {
    pub policies: Vec<PolicyGradient>,
    pub hull_lower: Vec<f64>,
    pub hull_upper: Vec<f64>,
    /// Largest coordinate width of the interval hull.
    pub hull_width: f64,
    pub tie_fraction: f64,
    pub infinite_fraction: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub sampler: SamplerTag,
    pub cone_term: ConeTerm,
}

impl SubdiffEnclosure {
    pub fn contains(&self, g: &[f64], slack: f64) -> bool {
        g.iter()
            .zip(self.hull_lower.iter().zip(&self.hull_upper))
            .all(|(v, (lo, hi))| *v >= lo - slack && *v <= hi + slack)
    }

    pub fn with_cone_term(mut self, cone_term: ConeTerm) -> Self {
        self.cone_term = cone_term;
        self
    }
}

/// Sphere-average estimators over one standardized problem.
#[derive(Debug, Clone)]
pub struct Estimator {
    engine: RadialEngine,
    options: EstimatorOptions,
}

impl Estimator {
    /// `system` is expressed in the original variables ξ; it is standardized with `model`.
    pub fn new(system: &InequalitySystem, model: &GaussianModel, options: EstimatorOptions) -> Result<Self> {
        let engine = RadialEngine::from_problem(system, model, options.radial)?;
        Ok(Self { engine, options })
    }

    pub fn engine(&self) -> &RadialEngine {
        &self.engine
    }

    pub fn options(&self) -> &EstimatorOptions {
        &self.options
    }

    /// Same estimator with the parallel flag replaced.
    pub fn with_parallel(&self, parallel: bool) -> Self {
        Self { engine: self.engine.clone(), options: EstimatorOptions { parallel, ..self.options } }
    }

    fn check_inputs(&self, x: &[f64], sample: &SphereSample) -> Result<()> {
        let sys = self.engine.system();
        if x.len() != sys.n() {
            return Err(Error::DimensionMismatch(format!("x has length {} but n = {}", x.len(), sys.n())));
        }
        if sample.dim() != sys.m() {
            return Err(Error::DimensionMismatch(format!(
                "sample dimension {} but m = {}",
                sample.dim(),
                sys.m()
            )));
        }
        if sample.is_empty() {
            return Err(Error::InvalidArgument("empty direction sample".into()));
        }
        Ok(())
    }

    /// Applies `f(v, Lv)` to every direction, keeping sample order.
    fn map_directions<T, F>(&self, sample: &SphereSample, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&[f64], &[f64]) -> Result<T> + Sync,
    {
        let model = self.engine.model();
        let run = |k: usize| {
            let v = sample.direction(k);
            f(v, &model.apply_cholesky(v))
        };
        if self.options.parallel {
            (0..sample.len()).into_par_iter().map(run).collect()
        } else {
            (0..sample.len()).map(run).collect()
        }
    }

    /// Radius outcomes for every direction at a Slater point.
    pub fn outcomes(&self, x: &[f64], sample: &SphereSample) -> Result<(SlaterPoint, Vec<RadiusOutcome>)> {
        self.check_inputs(x, sample)?;
        let point = self.engine.require_slater(x)?;
        let outcomes = self.map_directions(sample, |_, w| self.engine.solve_radius_scaled(&point, w))?;
        Ok((point, outcomes))
    }

    fn summarize(&self, values: &[f64], sample: &SphereSample, ties: usize, infinite: usize) -> Estimate {
        let n = values.len();
        let (value, stderr) = mean_and_stderr(values, sample.blocks());
        let infinite_fraction = infinite as f64 / n as f64;
        Estimate {
            value: value.clamp(0.0, 1.0),
            stderr,
            n,
            sampler: sample.tag().clone(),
            tie_fraction: ties as f64 / n as f64,
            infinite_fraction,
            residual_infinite_mass: infinite_fraction * self.engine.cutoff_residual(),
        }
    }

    /// `φ(x) ≈ (1/N) Σ_k e(x, v_k)`; requires `g(x, 0) < 0`.
    pub fn probability(&self, x: &[f64], sample: &SphereSample) -> Result<Estimate> {
        let (_, outcomes) = self.outcomes(x, sample)?;
        let values: Vec<f64> = outcomes.iter().map(|o| self.engine.radial_probability(o)).collect();
        let ties = outcomes.iter().filter(|o| o.is_tie()).count();
        let infinite = outcomes.iter().filter(|o| !o.is_finite()).count();
        Ok(self.summarize(&values, sample, ties, infinite))
    }

    /// Like [`Self::probability`] but also defined when `g(x, 0) >= 0`, by measuring
    /// the feasible radii on each ray as an interval.
    pub fn probability_interval(&self, x: &[f64], sample: &SphereSample) -> Result<Estimate> {
        self.check_inputs(x, sample)?;
        if self.engine.slater_point(x)?.holds() {
            return self.probability(x, sample);
        }
        let values = self.map_directions(sample, |_, w| self.engine.radial_set_measure_scaled(x, w))?;
        Ok(self.summarize(&values, sample, 0, 0))
    }

    fn direction_gradients(&self, x: &[f64], sample: &SphereSample) -> Result<(Vec<RadiusOutcome>, Vec<DirectionGradient>)> {
        self.check_inputs(x, sample)?;
        let point = self.engine.require_slater(x)?;
        if let Some(i) = self.engine.system().components().iter().position(|c| !c.smooth_in_x) {
            return Err(Error::NonSmoothComponent(i));
        }
        let pairs = self.map_directions(sample, |_, w| {
            let outcome = self.engine.solve_radius_scaled(&point, w)?;
            let grad = self.engine.radial_gradient_scaled(&point, w, &outcome)?;
            Ok((outcome, grad))
        })?;
        Ok(pairs.into_iter().unzip())
    }

    fn aggregate(&self, grads: &[DirectionGradient], policy: TiePolicy, blocks: usize) -> (Vec<f64>, Vec<f64>) {
        let n = self.engine.system().n();
        let rows: Vec<Vec<f64>> = grads
            .iter()
            .map(|g| match g {
                DirectionGradient::Zero => vec![0.0; n],
                DirectionGradient::Terms(terms) => policy.select(terms).value.clone(),
            })
            .collect();
        vector_mean_and_stderr(&rows, n, blocks)
    }

    /// `∇φ(x)` with the lowest-index tie policy.
    pub fn gradient(&self, x: &[f64], sample: &SphereSample) -> Result<GradientEstimate> {
        self.gradient_with_policy(x, sample, TiePolicy::LowestIndex)
    }

    pub fn gradient_with_policy(&self, x: &[f64], sample: &SphereSample, policy: TiePolicy) -> Result<GradientEstimate> {
        if let Some(j) = policy.coordinate() {
            if j >= x.len() {
                return Err(Error::InvalidArgument(format!("policy {policy} exceeds n = {}", x.len())));
            }
        }
        let (outcomes, grads) = self.direction_gradients(x, sample)?;
        let (value, stderr) = self.aggregate(&grads, policy, sample.blocks());
        let est = self.summarize(&vec![0.0; outcomes.len()], sample, count_ties(&outcomes), count_infinite(&outcomes));
        Ok(GradientEstimate {
            value,
            stderr,
            n: est.n,
            sampler: est.sampler,
            policy,
            tie_fraction: est.tie_fraction,
            infinite_fraction: est.infinite_fraction,
            residual_infinite_mass: est.residual_infinite_mass,
        })
    }

    /// One gradient estimate per policy plus their componentwise interval hull.
    pub fn subdifferential(&self, x: &[f64], sample: &SphereSample, policies: &[TiePolicy]) -> Result<SubdiffEnclosure> {
        if policies.is_empty() {
            return Err(Error::InvalidArgument("at least one tie policy is required".into()));
        }
        if let Some(p) = policies.iter().find(|p| p.coordinate().is_some_and(|j| j >= x.len())) {
            return Err(Error::InvalidArgument(format!("policy {p} exceeds n = {}", x.len())));
        }
        let (outcomes, grads) = self.direction_gradients(x, sample)?;
        let n = x.len();
        let estimates: Vec<PolicyGradient> = policies
            .iter()
            .map(|&policy| {
                let (value, stderr) = self.aggregate(&grads, policy, sample.blocks());
                PolicyGradient { policy, value, stderr }
            })
            .collect();
        let mut lower = vec![f64::INFINITY; n];
        let mut upper = vec![f64::NEG_INFINITY; n];
        for e in &estimates {
            for j in 0..n {
                lower[j] = lower[j].min(e.value[j]);
                upper[j] = upper[j].max(e.value[j]);
            }
        }
        let hull_width = lower.iter().zip(&upper).map(|(l, u)| u - l).fold(0.0, f64::max);
        let count = outcomes.len() as f64;
        Ok(SubdiffEnclosure {
            policies: estimates,
            hull_lower: lower,
            hull_upper: upper,
            hull_width,
            tie_fraction: count_ties(&outcomes) as f64 / count,
            infinite_fraction: count_infinite(&outcomes) as f64 / count,
            n: outcomes.len(),
            sampler: sample.tag().clone(),
            cone_term: ConeTerm::Unchecked,
        })
    }
}

fn count_ties(outcomes: &[RadiusOutcome]) -> usize {
    outcomes.iter().filter(|o| o.is_tie()).count()
}

fn count_infinite(outcomes: &[RadiusOutcome]) -> usize {
    outcomes.iter().filter(|o| !o.is_finite()).count()
}

pub fn estimate_probability(
    system: &InequalitySystem,
    model: &GaussianModel,
    x: &[f64],
    sample: &SphereSample,
) -> Result<Estimate> {
    Estimator::new(system, model, EstimatorOptions::default())?.probability(x, sample)
}

pub fn estimate_probability_interval(
    system: &InequalitySystem,
    model: &GaussianModel,
    x: &[f64],
    sample: &SphereSample,
) -> Result<Estimate> {
    Estimator::new(system, model, EstimatorOptions::default())?.probability_interval(x, sample)
}

pub fn estimate_gradient(
    system: &InequalitySystem,
    model: &GaussianModel,
    x: &[f64],
    sample: &SphereSample,
) -> Result<GradientEstimate> {
    Estimator::new(system, model, EstimatorOptions::default())?.gradient(x, sample)
}

pub fn estimate_subdifferential(
    system: &InequalitySystem,
    model: &GaussianModel,
    x: &[f64],
    sample: &SphereSample,
    policies: &[TiePolicy],
) -> Result<SubdiffEnclosure> {
    Estimator::new(system, model, EstimatorOptions::default())?.subdifferential(x, sample, policies)
}
