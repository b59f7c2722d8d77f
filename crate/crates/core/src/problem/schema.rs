//! JSON problem files.
//!
//! ```json
//! { "n": 1, "m": 2, "mean": [0, 0], "covariance": [[1, 0], [0, 1]],
//!   "components": [ {"kind": "expr", "src": "z1 - x1"} ] }
//! ```
//!
//! Component kinds: `expr` (`src`, optional `convex`), `affine` (`w`, `c`, `d`),
//! `ball` (`radius_expr`), `separable` (`offset_expr`, `q`) and `paper_example`.

use serde::{Deserialize, Serialize};

use super::{Component, InequalitySystem};
use crate::error::{Error, Result};
use crate::gaussian_model::GaussianModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentSpec {
    Expr {
        src: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        convex: Option<bool>,
    },
    Affine {
        w: Vec<f64>,
        c: Vec<f64>,
        d: f64,
    },
    Ball {
        radius_expr: String,
    },
    Separable {
        offset_expr: String,
        q: Vec<f64>,
    },
    PaperExample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub n: usize,
    pub m: usize,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub components: Vec<ComponentSpec>,
}

/// A validated problem: the Gaussian model of ξ and the (unstandardized) system.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub model: GaussianModel,
    pub system: InequalitySystem,
}

impl ProblemSpec {
    pub fn build(self) -> Result<Problem> {
        if self.mean.len() != self.m {
            return Err(Error::Problem(format!("mean has length {} but m = {}", self.mean.len(), self.m)));
        }
        let model = GaussianModel::new(self.mean.clone(), &self.covariance)?;
        let (n, m) = (self.n, self.m);
        let components = self
            .components
            .iter()
            .map(|c| match c {
                ComponentSpec::Expr { src, convex } => {
                    Ok(Component::expr(src, n, m)?.with_convexity(convex.unwrap_or(true)))
                }
                ComponentSpec::Affine { w, c, d } => Ok(Component::affine(w.clone(), c.clone(), *d)),
                ComponentSpec::Ball { radius_expr } => Component::ball(radius_expr, n, m),
                ComponentSpec::Separable { offset_expr, q } => Component::separable(offset_expr, q.clone(), n, m),
                ComponentSpec::PaperExample => Ok(Component::paper_example()),
            })
            .collect::<Result<Vec<_>>>()?;
        let system = InequalitySystem::new(n, m, components)?;
        Ok(Problem { spec: self, model, system })
    }
}

impl Problem {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ProblemSpec = serde_json::from_str(text).map_err(|e| Error::Problem(e.to_string()))?;
        spec.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind() {
        let text = r#"{
            "n": 1, "m": 2, "mean": [0, 0], "covariance": [[1, 0], [0, 1]],
            "components": [
                {"kind": "expr", "src": "z1 - x1"},
                {"kind": "affine", "w": [-1], "c": [0, 1], "d": -0.5},
                {"kind": "ball", "radius_expr": "2 + x1^2"},
                {"kind": "separable", "offset_expr": "-1 - x1^2", "q": [0.5, 0.25]},
                {"kind": "paper_example"}
            ]
        }"#;
        let p = Problem::from_json(text).unwrap();
        assert_eq!(p.system.len(), 5);
        let v = p.system.eval_all(&[0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(v, vec![0.0, -0.5, -2.0, -1.0, -1.0]);
    }

    #[test]
    fn schema_violations() {
        let bad_kind = r#"{"n":1,"m":1,"mean":[0],"covariance":[[1]],"components":[{"kind":"nope"}]}"#;
        assert!(matches!(Problem::from_json(bad_kind), Err(Error::Problem(_))));
        let bad_mean = r#"{"n":1,"m":2,"mean":[0],"covariance":[[1]],"components":[{"kind":"expr","src":"z1"}]}"#;
        assert!(matches!(Problem::from_json(bad_mean), Err(Error::Problem(_))));
        let bad_affine = r#"{"n":1,"m":1,"mean":[0],"covariance":[[1]],"components":[{"kind":"affine","w":[1,2],"c":[1],"d":0}]}"#;
        assert!(matches!(Problem::from_json(bad_affine), Err(Error::DimensionMismatch(_))));
        let extra = r#"{"n":1,"m":1,"mean":[0],"covariance":[[1]],"components":[],"x":1}"#;
        assert!(Problem::from_json(extra).is_err());
    }
}
