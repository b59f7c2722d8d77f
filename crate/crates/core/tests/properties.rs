use gaussprob::corpus;
use gaussprob::problem::expr::{Expr, Func};
use gaussprob::sphere::sample_qmc_shifted;
use gaussprob::{Component, Estimator, EstimatorOptions, Expression, GaussianModel, InequalitySystem};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

const SMOOTH: &[&str] = &[
    "x1^2 * z1 + exp(0.3*x2) - z2",
    "sqrt(1 + x1^2 + z1^2) - x2*z2",
    "log(2 + x1^2) * exp(z1/3) + z2^2 - x2",
    "(x1 - 2*x2)^3 / (4 + z1^2) + z2",
    "exp(x1*z1/4) * (1 + x2^2) - 1",
];

const CONVEX_IN_Z: &[&str] = &[
    "exp(z1 - x1) + z2^2 - 3",
    "norm(z1, z2) - 1 - x1^2",
    "sqrt(1 + z1^2 + z2^2) + x2*z1 - 2",
    "(z1 + z2)^2 / (1 + x1^2) - x2",
];

fn vec2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, 2)
}

fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let h = 1e-6 * (1.0 + x[j].abs());
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[j] += h;
            down[j] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..2000).prop_map(|k| Expr::Const(k as f64 / 16.0)),
        (0usize..2).prop_map(Expr::X),
        (0usize..3).prop_map(Expr::Z),
    ]
}

fn tree() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
            (inner.clone(), -3i32..4).prop_map(|(a, p)| Expr::Pow(Box::new(a), p as f64 / 2.0)),
            inner.clone().prop_map(|a| Expr::Call(Func::Exp, vec![a])),
            inner.clone().prop_map(|a| Expr::Call(Func::Log, vec![a])),
            inner.clone().prop_map(|a| Expr::Call(Func::Sqrt, vec![a])),
            prop::collection::vec(inner, 1..4).prop_map(|args| Expr::Call(Func::Norm, args)),
        ]
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn printed_expressions_parse_back(root in tree()) {
        let printed = root.to_string();
        let parsed = Expression::parse(&printed, 2, 3).expect("printed form parses");
        prop_assert_eq!(&parsed.root, &root, "{}", printed);
    }

    #[test]
    fn forward_mode_matches_differences(k in 0..SMOOTH.len(), x in vec2(), z in vec2()) {
        let sys = InequalitySystem::new(2, 2, vec![Component::expr(SMOOTH[k], 2, 2).unwrap()]).unwrap();
        let gx = sys.grad_x_component(0, &x, &z).unwrap();
        let fx = central_difference(|y| sys.eval_component(0, y, &z).unwrap(), &x);
        let gz = sys.grad_z_component(0, &x, &z).unwrap();
        let fz = central_difference(|w| sys.eval_component(0, &x, w).unwrap(), &z);
        for (a, b) in gx.iter().chain(&gz).zip(fx.iter().chain(&fz)) {
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{}: {a} vs {b}", SMOOTH[k]);
        }
    }

    #[test]
    fn slope_is_directional_derivative(k in 0..SMOOTH.len(), x in vec2(), z in vec2(), w in vec2()) {
        let sys = InequalitySystem::new(2, 2, vec![Component::expr(SMOOTH[k], 2, 2).unwrap()]).unwrap();
        let (value, slope) = sys.value_and_slope(0, &x, &z, &w).unwrap();
        let gz = sys.grad_z_component(0, &x, &z).unwrap();
        prop_assert_eq!(value, sys.eval_component(0, &x, &z).unwrap());
        let dot: f64 = gz.iter().zip(&w).map(|(a, b)| a * b).sum();
        prop_assert!((slope - dot).abs() <= 1e-12 * (1.0 + dot.abs()));
    }

    #[test]
    fn declared_convex_components_pass_midpoint(k in 0..CONVEX_IN_Z.len(), x in vec2(), a in vec2(), b in vec2()) {
        let sys = InequalitySystem::new(2, 2, vec![Component::expr(CONVEX_IN_Z[k], 2, 2).unwrap()]).unwrap();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
        let lhs = sys.eval(&x, &mid).unwrap();
        let rhs = 0.5 * (sys.eval(&x, &a).unwrap() + sys.eval(&x, &b).unwrap());
        prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn standardization_preserves_values(xi in prop::collection::vec(-3.0f64..3.0, 3), x in vec2()) {
        let case = corpus::correlated();
        let std = case.model.standardize_system(&case.system).unwrap();
        let z = case.model.standardize_point(&xi);
        let back = case.model.destandardize_point(&z);
        for (p, q) in xi.iter().zip(&back) {
            prop_assert!((p - q).abs() <= 1e-13 * (1.0 + p.abs()));
        }
        let direct = case.system.eval_all(&x, &xi).unwrap();
        let through = std.eval_all(&x, &z).unwrap();
        for (p, q) in direct.iter().zip(&through) {
            prop_assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn scaled_model_standardizes_to_its_correlation(s1 in 0.2f64..5.0, s2 in 0.2f64..5.0, r in -0.9f64..0.9) {
        let cov = vec![vec![s1 * s1, r * s1 * s2], vec![r * s1 * s2, s2 * s2]];
        let model = GaussianModel::new(vec![1.0, -2.0], &cov).unwrap();
        let corr = model.correlation();
        prop_assert!((corr[(0, 0)] - 1.0).abs() < 1e-14);
        prop_assert!((corr[(1, 1)] - 1.0).abs() < 1e-14);
        prop_assert!((corr[(0, 1)] - r).abs() < 1e-14);
        let l = model.cholesky();
        let llt = l * l.transpose();
        prop_assert!((llt - corr).abs().max() < 1e-14);
    }
}

#[test]
fn component_order_does_not_change_estimates() {
    let case = corpus::correlated();
    let sample = sample_qmc_shifted(3, 4096, 8, 5).unwrap();
    let x = [0.8, 1.2];
    let base = Estimator::new(&case.system, &case.model, EstimatorOptions::default()).unwrap();
    let p = base.probability(&x, &sample).unwrap();
    let g = base.gradient(&x, &sample).unwrap();

    let swapped = case.system.permuted(&[1, 0]).unwrap();
    let other = Estimator::new(&swapped, &case.model, EstimatorOptions::default()).unwrap();
    let q = other.probability(&x, &sample).unwrap();
    let h = other.gradient(&x, &sample).unwrap();

    assert!((p.value - q.value).abs() <= 1e-14, "{} vs {}", p.value, q.value);
    for (a, b) in g.value.iter().zip(&h.value) {
        assert!((a - b).abs() <= 1e-13, "{a} vs {b}");
    }
}

#[test]
fn invalid_permutations_are_rejected() {
    let sys = corpus::slab().system;
    assert!(sys.permuted(&[0, 0]).is_err());
    assert!(sys.permuted(&[0]).is_err());
    assert!(sys.permuted(&[0, 2]).is_err());
}
