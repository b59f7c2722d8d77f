//! Fixed regression problems with known probability functions.
//!
//! | name | g | φ |
//! |------|---|---|
//! | `half_space` | `z1 - x1` | `Φ(x)` |
//! | `slab` | `max(z1 - x1, -z1 - x1)` | `2Φ(x) - 1` |
//! | `ball_m{m}_r{r}` | `‖z‖ - r` | `F_m(r)` |
//! | `product` | `max(z1 - x1, z2 - x1)` | `Φ(x)²` |
//! | `duplicated` | `max(z1 - x1, z1 - x1)` | `Φ(x)` |
//! | `example` | `α(x) e^{h(z1)} + z2 - 1` | one-dimensional integral |
//!
//! plus a correlated, non-centred three-dimensional case and a five-dimensional ball
//! with an x-dependent radius.

use std::fmt;
use std::sync::Arc;

use crate::distributions::{normal_cdf, normal_pdf, ChiDistribution};
use crate::gaussian_model::GaussianModel;
use crate::paper_example::{example_model, example_phi_closed_form, example_system, DEFAULT_QUAD_TOL};
use crate::problem::{Component, InequalitySystem};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct Case {
    pub name: String,
    pub system: InequalitySystem,
    pub model: GaussianModel,
    /// Decisions with `g(x, 0) < 0` used by regression tests.
    pub points: Vec<Vec<f64>>,
    pub phi: Option<ScalarFn>,
    pub gradient: Option<VectorFn>,
}

impl fmt::Debug for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Case")
            .field("name", &self.name)
            .field("n", &self.system.n())
            .field("m", &self.system.m())
            .field("points", &self.points)
            .finish()
    }
}

fn expr(src: &str, n: usize, m: usize) -> Component {
    Component::expr(src, n, m).expect("corpus expressions parse")
}

fn system(n: usize, m: usize, components: Vec<Component>) -> InequalitySystem {
    InequalitySystem::new(n, m, components).expect("corpus dimensions are consistent")
}

fn standard(m: usize) -> GaussianModel {
    GaussianModel::standard(m).expect("identity covariance")
}

pub fn half_space() -> Case {
    Case {
        name: "half_space".into(),
        system: system(1, 2, vec![expr("z1 - x1", 1, 2)]),
        model: standard(2),
        points: vec![vec![0.5], vec![1.0], vec![2.0]],
        phi: Some(Arc::new(|x| normal_cdf(x[0]))),
        gradient: Some(Arc::new(|x| vec![normal_pdf(x[0])])),
    }
}

pub fn slab() -> Case {
    Case {
        name: "slab".into(),
        system: system(1, 2, vec![expr("z1 - x1", 1, 2), expr("-z1 - x1", 1, 2)]),
        model: standard(2),
        points: vec![vec![0.5], vec![1.0], vec![2.0]],
        phi: Some(Arc::new(|x| 2.0 * normal_cdf(x[0]) - 1.0)),
        gradient: Some(Arc::new(|x| vec![2.0 * normal_pdf(x[0])])),
    }
}

pub fn ball(m: usize, radius: f64) -> Case {
    let chi = ChiDistribution::new(m).expect("m >= 1");
    let value = chi.cdf(radius).expect("radius >= 0");
    Case {
        name: format!("ball_m{m}_r{radius}"),
        system: system(1, m, vec![Component::ball(&format!("{radius:?}"), 1, m).expect("constant radius")]),
        model: standard(m),
        points: vec![vec![0.0], vec![1.0]],
        phi: Some(Arc::new(move |_| value)),
        gradient: Some(Arc::new(|_| vec![0.0])),
    }
}

pub fn product() -> Case {
    Case {
        name: "product".into(),
        system: system(1, 2, vec![expr("z1 - x1", 1, 2), expr("z2 - x1", 1, 2)]),
        model: standard(2),
        points: vec![vec![0.5], vec![1.0], vec![1.5]],
        phi: Some(Arc::new(|x| normal_cdf(x[0]).powi(2))),
        gradient: Some(Arc::new(|x| vec![2.0 * normal_cdf(x[0]) * normal_pdf(x[0])])),
    }
}

pub fn duplicated() -> Case {
    Case {
        name: "duplicated".into(),
        system: system(1, 2, vec![expr("z1 - x1", 1, 2), expr("z1 - x1", 1, 2)]),
        model: standard(2),
        points: vec![vec![0.5], vec![1.0]],
        phi: Some(Arc::new(|x| normal_cdf(x[0]))),
        gradient: Some(Arc::new(|x| vec![normal_pdf(x[0])])),
    }
}

pub fn example() -> Case {
    Case {
        name: "example".into(),
        system: example_system(),
        model: example_model(),
        points: vec![vec![-0.5], vec![0.0], vec![0.1], vec![0.3]],
        phi: Some(Arc::new(|x| {
            example_phi_closed_form(x[0], DEFAULT_QUAD_TOL).expect("quadrature converges on the example")
        })),
        gradient: None,
    }
}

/// `ξ ~ N(μ, Σ)` in three dimensions with two affine rows; validated by the MC oracle only.
pub fn correlated() -> Case {
    let cov = vec![vec![2.0, 0.6, 0.2], vec![0.6, 1.0, -0.3], vec![0.2, -0.3, 0.5]];
    let model = GaussianModel::new(vec![0.5, -0.2, 0.1], &cov).expect("positive definite");
    Case {
        name: "correlated_m3".into(),
        system: system(2, 3, vec![expr("z1 + 0.5*z2 - x1 - 1", 2, 3), expr("z3 - z2 - x2", 2, 3)]),
        model,
        points: vec![vec![1.0, 1.0], vec![0.5, 2.0]],
        phi: None,
        gradient: None,
    }
}

/// `‖z‖ <= 2 + x²/10` in five dimensions: `φ = F_5(r(x))`, `φ' = χ_5(r(x)) x/5`.
pub fn ball_m5() -> Case {
    let chi = ChiDistribution::new(5).expect("m >= 1");
    Case {
        name: "ball_m5".into(),
        system: system(1, 5, vec![Component::ball("2 + 0.1*x1^2", 1, 5).expect("radius parses")]),
        model: standard(5),
        points: vec![vec![0.0], vec![1.5]],
        phi: Some(Arc::new(move |x| chi.cdf(2.0 + 0.1 * x[0] * x[0]).expect("positive radius"))),
        gradient: Some(Arc::new(move |x| vec![chi.pdf(2.0 + 0.1 * x[0] * x[0]).expect("positive radius") * 0.2 * x[0]])),
    }
}

/// The six-problem regression corpus.
pub fn six() -> Vec<Case> {
    vec![half_space(), slab(), ball(2, 2.0), product(), duplicated(), example()]
}

/// Everything, including the extra three- and five-dimensional cases.
pub fn all() -> Vec<Case> {
    let mut cases = six();
    cases.extend([ball(3, 1.0), ball(3, 2.0), correlated(), ball_m5()]);
    cases
}
