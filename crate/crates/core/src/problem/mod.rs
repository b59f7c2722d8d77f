//! Inequality systems `g(x, z) = max_i g_i(x, z)` with forward-mode derivatives.

pub mod dual;
pub mod expr;
pub mod schema;

use std::sync::Arc;

use serde::Serialize;

pub use dual::{Dual, Number};
pub use expr::{Expr, Expression, Func};
pub use schema::{ComponentSpec, Problem, ProblemSpec};

use crate::error::{Error, Result};
use crate::paper_example;

/// Default relative tolerance for deciding which components are active at a root.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ComponentKind {
    /// A parsed expression over `x1..xn`, `z1..zm`.
    Expr(Expression),
    /// `⟨w, x⟩ + ⟨c, z⟩ + d`.
    Affine { w: Vec<f64>, c: Vec<f64>, d: f64 },
    /// `a(x) + Σ_j q_j z_j²` with every `q_j >= 0`.
    Separable { offset: Expression, q: Vec<f64> },
    /// `‖z‖ - c(x)`.
    Ball { radius: Expression },
    /// `α(x) e^{h(z1)} + z2 - 1`, see [`crate::paper_example`].
    PaperExample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub kind: ComponentKind,
    /// Declared, not verified symbolically.
    pub convex_in_z: bool,
    pub smooth_in_x: bool,
    pub smooth_in_z: bool,
}

impl Component {
    pub fn new(kind: ComponentKind) -> Self {
        let (smooth_in_x, smooth_in_z) = match &kind {
            ComponentKind::Expr(e) => (!e.root.has_norm_over(true), !e.root.has_norm_over(false)),
            ComponentKind::Separable { offset, .. } => (!offset.root.has_norm_over(true), true),
            ComponentKind::Ball { radius } => (!radius.root.has_norm_over(true), true),
            ComponentKind::Affine { .. } | ComponentKind::PaperExample => (true, true),
        };
        Self { kind, convex_in_z: true, smooth_in_x, smooth_in_z }
    }

    pub fn affine(w: Vec<f64>, c: Vec<f64>, d: f64) -> Self {
        Self::new(ComponentKind::Affine { w, c, d })
    }

    pub fn expr(src: &str, n: usize, m: usize) -> Result<Self> {
        Ok(Self::new(ComponentKind::Expr(Expression::parse(src, n, m)?)))
    }

    pub fn ball(radius_src: &str, n: usize, m: usize) -> Result<Self> {
        Ok(Self::new(ComponentKind::Ball { radius: Expression::parse(radius_src, n, m)? }))
    }

    pub fn separable(offset_src: &str, q: Vec<f64>, n: usize, m: usize) -> Result<Self> {
        if q.len() != m {
            return Err(Error::DimensionMismatch(format!("separable q has length {} but m = {m}", q.len())));
        }
        if q.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument("separable weights must be nonnegative".into()));
        }
        Ok(Self::new(ComponentKind::Separable { offset: Expression::parse(offset_src, n, m)?, q }))
    }

    pub fn paper_example() -> Self {
        Self::new(ComponentKind::PaperExample)
    }

    pub fn with_convexity(mut self, convex: bool) -> Self {
        self.convex_in_z = convex;
        self
    }

    fn eval<N: Number>(&self, x: &[N], u: &[N]) -> Result<N> {
        match &self.kind {
            ComponentKind::Expr(e) => e.eval(x, u),
            ComponentKind::Affine { w, c, d } => {
                let mut acc = N::constant(*d);
                for (wj, xj) in w.iter().zip(x) {
                    acc = acc + N::constant(*wj) * xj.clone();
                }
                for (ck, uk) in c.iter().zip(u) {
                    acc = acc + N::constant(*ck) * uk.clone();
                }
                Ok(acc)
            }
            ComponentKind::Separable { offset, q } => {
                let mut acc = offset.eval(x, u)?;
                for (qk, uk) in q.iter().zip(u) {
                    acc = acc + N::constant(*qk) * uk.clone() * uk.clone();
                }
                Ok(acc)
            }
            ComponentKind::Ball { radius } => Ok(N::norm(u)? - radius.eval(x, u)?),
            ComponentKind::PaperExample => {
                let t = x[0].value();
                let alpha = x[0].lift(paper_example::alpha(t), paper_example::alpha_prime(t));
                let s = u[0].value();
                let eh = paper_example::h(s).exp();
                let growth = u[0].lift(eh, eh * paper_example::h_prime(s));
                let out = alpha * growth + u[1].clone() - N::constant(1.0);
                if !out.is_finite() {
                    return Err(Error::Domain("overflow in example constraint".into()));
                }
                Ok(out)
            }
        }
    }

    fn validate(&self, n: usize, m: usize) -> Result<()> {
        let check_expr = |e: &Expression| {
            if e.n != n || e.m != m {
                return Err(Error::DimensionMismatch(format!(
                    "expression parsed for (n, m) = ({}, {}) but system has ({n}, {m})",
                    e.n, e.m
                )));
            }
            Ok(())
        };
        match &self.kind {
            ComponentKind::Expr(e) | ComponentKind::Ball { radius: e } => check_expr(e),
            ComponentKind::Separable { offset, q } => {
                check_expr(offset)?;
                if q.len() != m {
                    return Err(Error::DimensionMismatch("separable q length".into()));
                }
                Ok(())
            }
            ComponentKind::Affine { w, c, .. } => {
                if w.len() != n || c.len() != m {
                    return Err(Error::DimensionMismatch(format!(
                        "affine component has |w| = {}, |c| = {} for (n, m) = ({n}, {m})",
                        w.len(),
                        c.len()
                    )));
                }
                Ok(())
            }
            ComponentKind::PaperExample => {
                if n != 1 || m != 2 {
                    return Err(Error::DimensionMismatch("the example constraint needs n = 1, m = 2".into()));
                }
                Ok(())
            }
        }
    }
}

/// Indices attaining the minimal component radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActiveSet {
    pub indices: Vec<usize>,
    pub tolerance: f64,
}

impl ActiveSet {
    pub fn is_tie(&self) -> bool {
        self.indices.len() > 1
    }
}

/// `g(x, z) = max_i g_i(x, s ⊙ z + b)`; the diagonal affine map `(s, b)` is the
/// identity unless the system has been standardized.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalitySystem {
    n: usize,
    m: usize,
    components: Arc<[Component]>,
    z_scale: Vec<f64>,
    z_shift: Vec<f64>,
}

impl InequalitySystem {
    pub fn new(n: usize, m: usize, components: Vec<Component>) -> Result<Self> {
        if m == 0 {
            return Err(Error::DimensionMismatch("random dimension must be at least 1".into()));
        }
        if components.is_empty() {
            return Err(Error::InvalidArgument("system needs at least one component".into()));
        }
        for c in &components {
            c.validate(n, m)?;
        }
        Ok(Self { n, m, components: components.into(), z_scale: vec![1.0; m], z_shift: vec![0.0; m] })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of components `p`.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn is_smooth_in_x(&self) -> bool {
        self.components.iter().all(|c| c.smooth_in_x)
    }

    /// `g̃(x, z) = g(x, scale ⊙ z + shift)`.
    pub fn compose_affine_z(&self, scale: &[f64], shift: &[f64]) -> Self {
        let z_scale = self.z_scale.iter().zip(scale).map(|(s, a)| s * a).collect();
        let z_shift = self
            .z_shift
            .iter()
            .zip(&self.z_scale)
            .zip(shift)
            .map(|((b, s), c)| s * c + b)
            .collect();
        Self { n: self.n, m: self.m, components: Arc::clone(&self.components), z_scale, z_shift }
    }

    /// Same components with the components reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if order.len() != self.len() || order.iter().any(|&i| i >= self.len() || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::InvalidArgument("order is not a permutation".into()));
        }
        let components: Vec<Component> = order.iter().map(|&i| self.components[i].clone()).collect();
        Ok(Self { components: components.into(), ..self.clone() })
    }

    fn check_dims(&self, i: usize, x: &[f64], z: &[f64]) -> Result<()> {
        if i >= self.len() {
            return Err(Error::InvalidArgument(format!("component {i} out of range (p = {})", self.len())));
        }
        if x.len() != self.n || z.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "expected x in R^{} and z in R^{}, got {} and {}",
                self.n,
                self.m,
                x.len(),
                z.len()
            )));
        }
        Ok(())
    }

    fn inner_point(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.z_scale).zip(&self.z_shift).map(|((z, s), b)| s * z + b).collect()
    }

    /// `g_i(x, z)`.
    pub fn eval_component(&self, i: usize, x: &[f64], z: &[f64]) -> Result<f64> {
        self.check_dims(i, x, z)?;
        let u = self.inner_point(z);
        self.components[i].eval(x, &u)
    }

    /// `g(x, z) = max_i g_i(x, z)`.
    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for i in 0..self.len() {
            best = best.max(self.eval_component(i, x, z)?);
        }
        Ok(best)
    }

    pub fn eval_all(&self, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        (0..self.len()).map(|i| self.eval_component(i, x, z)).collect()
    }

    /// `∇_x g_i(x, z)` by forward-mode differentiation.
    pub fn grad_x_component(&self, i: usize, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(i, x, z)?;
        let u: Vec<Dual> = self.inner_point(z).into_iter().map(Dual::constant).collect();
        let mut xd: Vec<Dual> = x.iter().map(|&v| Dual::constant(v)).collect();
        let mut grad = Vec::with_capacity(self.n);
        for j in 0..self.n {
            xd[j].tangent = 1.0;
            grad.push(self.components[i].eval(&xd, &u)?.tangent);
            xd[j].tangent = 0.0;
        }
        Ok(grad)
    }

    /// `∇_z g_i(x, z)` by forward-mode differentiation (chain rule through the z map).
    pub fn grad_z_component(&self, i: usize, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(i, x, z)?;
        let xd: Vec<Dual> = x.iter().map(|&v| Dual::constant(v)).collect();
        let mut u: Vec<Dual> = self.inner_point(z).into_iter().map(Dual::constant).collect();
        let mut grad = Vec::with_capacity(self.m);
        for k in 0..self.m {
            u[k].tangent = self.z_scale[k];
            grad.push(self.components[i].eval(&xd, &u)?.tangent);
            u[k].tangent = 0.0;
        }
        Ok(grad)
    }

    /// `(g_i(x, z), ⟨∇_z g_i(x, z), w⟩)` in one forward pass.
    pub fn value_and_slope(&self, i: usize, x: &[f64], z: &[f64], w: &[f64]) -> Result<(f64, f64)> {
        self.check_dims(i, x, z)?;
        let xd: Vec<Dual> = x.iter().map(|&v| Dual::constant(v)).collect();
        let u: Vec<Dual> = self
            .inner_point(z)
            .into_iter()
            .zip(w.iter().zip(&self.z_scale))
            .map(|(v, (wk, s))| Dual::new(v, wk * s))
            .collect();
        let out = self.components[i].eval(&xd, &u)?;
        Ok((out.value, out.tangent))
    }
}
