//! Probability functions `φ(x) = P[g(x, ξ) <= 0]` for Gaussian `ξ` and z-convex
//! inequality systems, evaluated through the spheric-radial decomposition, together
//! with gradient and Clarke-subdifferential estimators and their diagnostics.

// `!(x > 0.0)` deliberately rejects NaN together with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod gaussian_model;
pub mod paper_example;
pub mod problem;
pub mod quadrature;
pub mod radial;
pub mod roots;
pub mod sphere;

pub use distributions::{normal_cdf, normal_pdf, normal_quantile, normal_sf, ChiDistribution};
pub use error::{Error, Result};
pub use estimators::{
    estimate_gradient, estimate_probability, estimate_probability_interval, estimate_subdifferential, ConeTerm,
    Estimate, Estimator, EstimatorOptions, GradientEstimate, SubdiffEnclosure, TiePolicy,
};
pub use gaussian_model::GaussianModel;
pub use problem::{
    schema::{ComponentSpec, Problem, ProblemSpec},
    ActiveSet, Component, ComponentKind, Expression, InequalitySystem,
};
pub use radial::{DirectionGradient, RadialConfig, RadialEngine, RadiusOutcome, SlaterPoint};
pub use sphere::{sample_mc, sample_qmc, sample_qmc_shifted, SamplerTag, SphereSample};
