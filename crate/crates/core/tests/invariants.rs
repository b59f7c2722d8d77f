use gaussprob::corpus::{self, Case};
use gaussprob::estimators::diagnostics::bound_check;
use gaussprob::estimators::oracle_probability_mc;
use gaussprob::paper_example::{example_phi_closed_form, DEFAULT_QUAD_TOL};
use gaussprob::sphere::{sample_mc, sample_qmc_shifted, SphereSample};
use gaussprob::{
    normal_cdf, normal_pdf, ChiDistribution, Component, Error, Estimator, EstimatorOptions, GaussianModel,
    InequalitySystem, RadiusOutcome, TiePolicy,
};

fn estimator(case: &Case) -> Estimator {
    Estimator::new(&case.system, &case.model, EstimatorOptions::default()).unwrap()
}

fn qmc(m: usize, count: usize, seed: u64) -> SphereSample {
    sample_qmc_shifted(m, count, 8, seed).unwrap()
}

fn scaled(model: &GaussianModel, v: &[f64], r: f64) -> Vec<f64> {
    model.apply_cholesky(v).into_iter().map(|a| r * a).collect()
}

#[test]
fn roots_have_small_residual_and_interior_is_feasible() {
    for case in corpus::all() {
        let est = estimator(&case);
        let engine = est.engine();
        let sample = qmc(case.system.m(), 1024, 3);
        for x in &case.points {
            let point = engine.require_slater(x).unwrap();
            let g0 = point.value();
            let (_, outcomes) = est.outcomes(x, &sample).unwrap();
            for (k, outcome) in outcomes.iter().enumerate() {
                let RadiusOutcome::Finite { rho, .. } = outcome else { continue };
                let v = sample.direction(k);
                let at = |r: f64| engine.system().eval(x, &scaled(engine.model(), v, r)).unwrap();
                let residual = at(*rho);
                assert!(residual.abs() <= 1e-9 * (1.0 + g0.abs()), "{} x={x:?}: residual {residual:e}", case.name);
                for frac in [0.25, 0.5, 0.75] {
                    assert!(at(frac * rho) < 0.0, "{} x={x:?}: infeasible at {frac}ρ", case.name);
                }
            }
        }
    }
}

#[test]
fn radius_is_continuous_in_direction() {
    for case in corpus::all() {
        let est = estimator(&case);
        let engine = est.engine();
        let m = case.system.m();
        let sample = sample_mc(m, 64, 11).unwrap();
        let x = &case.points[0];
        let point = engine.require_slater(x).unwrap();
        for v in sample.iter() {
            let mut w = v.to_vec();
            w[0] += 1e-7;
            let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            w.iter_mut().for_each(|a| *a /= norm);
            let a = engine.solve_radius(&point, v).unwrap();
            let b = engine.solve_radius(&point, &w).unwrap();
            match (a.rho(), b.rho()) {
                (Some(p), Some(q)) => assert!((p - q).abs() <= 1e-4 * (1.0 + p), "{}: {p} vs {q}", case.name),
                (None, None) => {}
                // A ray leaving exactly at the cutoff may flip; the radius must then sit near it.
                (Some(p), None) | (None, Some(p)) => assert!(p > 0.99 * engine.cutoff(), "{}", case.name),
            }
        }
    }
}

#[test]
fn direction_gradients_respect_the_radial_bound() {
    for case in corpus::all() {
        let est = estimator(&case);
        let sample = qmc(case.system.m(), 2048, 9);
        for x in &case.points {
            let (point, outcomes) = est.outcomes(x, &sample).unwrap();
            let check = bound_check(est.engine(), &point, &sample, &outcomes, usize::MAX, 0).unwrap();
            assert!(check.checked > 0 || case.name.starts_with("ball_m2") || case.name.starts_with("ball_m3"));
            assert_eq!(check.violations, 0, "{} x={x:?}: worst {}", case.name, check.worst_ratio);
        }
    }
}

#[test]
fn mc_directions_are_uniform_in_angle() {
    let count = 100_000;
    let sample = sample_mc(2, count, 2024).unwrap();
    let bins = 20;
    let mut hist = vec![0usize; bins];
    for v in sample.iter() {
        let theta = v[1].atan2(v[0]) + std::f64::consts::PI;
        let b = ((theta / (2.0 * std::f64::consts::PI)) * bins as f64) as usize;
        hist[b.min(bins - 1)] += 1;
    }
    let expected = count as f64 / bins as f64;
    let stat: f64 = hist.iter().map(|&h| (h as f64 - expected).powi(2) / expected).sum();
    // 99.9% point of chi-squared with 19 degrees of freedom.
    assert!(stat < 43.82, "chi-squared statistic {stat}");
}

#[test]
fn mc_coordinate_means_vanish() {
    for m in [2, 3, 5] {
        let count = 40_000;
        let sample = sample_mc(m, count, 7).unwrap();
        for j in 0..m {
            let mean = sample.iter().map(|v| v[j]).sum::<f64>() / count as f64;
            assert!(mean.abs() <= 4.0 / (count as f64).sqrt(), "m={m} j={j}: {mean}");
        }
        for v in sample.iter() {
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn qmc_error_shrinks_with_more_points() {
    let case = corpus::product();
    let est = estimator(&case);
    let exact = normal_cdf(1.0).powi(2);
    let err = |count: usize| -> f64 {
        (0..4).map(|s| (est.probability(&[1.0], &qmc(2, count, s)).unwrap().value - exact).abs()).sum::<f64>() / 4.0
    };
    let coarse = err(1 << 10);
    let fine = err(1 << 14);
    assert!(fine < coarse / 4.0, "2^10: {coarse:e}, 2^14: {fine:e}");
}

#[test]
fn probability_is_monotone_in_x() {
    let case = corpus::half_space();
    let est = estimator(&case);
    let sample = qmc(2, 4096, 1);
    let grid: Vec<f64> = (0..=40).map(|k| -2.0 + 0.1 * k as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&x| est.probability_interval(&[x], &sample).unwrap().value).collect();
    for (w, x) in values.windows(2).zip(&grid) {
        assert!(w[1] >= w[0] - 1e-12, "decrease after x={x}: {} -> {}", w[0], w[1]);
    }
    for (v, x) in values.iter().zip(&grid) {
        assert!((v - normal_cdf(*x)).abs() < 2e-3, "x={x}: {v}");
    }
}

#[test]
fn interval_path_agrees_with_strict_path_at_slater_points() {
    for case in corpus::six() {
        let est = estimator(&case);
        let sample = qmc(case.system.m(), 2048, 4);
        for x in &case.points {
            let a = est.probability(x, &sample).unwrap().value;
            let b = est.probability_interval(x, &sample).unwrap().value;
            assert_eq!(a, b, "{} x={x:?}", case.name);
        }
    }
}

#[test]
fn strict_path_rejects_non_slater_points() {
    let case = corpus::half_space();
    let est = estimator(&case);
    let sample = qmc(2, 256, 0);
    for x in [0.0, -1.0] {
        assert!(matches!(est.probability(&[x], &sample), Err(Error::SlaterViolation { .. })));
        assert!(matches!(est.gradient(&[x], &sample), Err(Error::SlaterViolation { .. })));
    }
}

#[test]
fn truncation_mass_is_negligible() {
    for m in 1..=6 {
        let case = corpus::ball(m, 1.0);
        let est = estimator(&case);
        assert!(est.engine().cutoff_residual() <= 1e-12, "m={m}");
    }
    let case = corpus::half_space();
    let e = estimator(&case).probability(&[1.0], &qmc(2, 4096, 2)).unwrap();
    assert!(e.infinite_fraction > 0.3);
    assert!(e.residual_infinite_mass <= 1e-12 * e.infinite_fraction + 1e-300);
}

/// Two components with identical roots on every ray but different x-gradients:
/// `φ(x) = Φ(min(x1, x2))`, whose Clarke subdifferential at `x1 = x2 = 1` is the segment
/// between `φ'(1) e1` and `φ'(1) e2`.
fn kink() -> (InequalitySystem, GaussianModel) {
    let sys = InequalitySystem::new(
        2,
        2,
        vec![Component::expr("z1 - x1", 2, 2).unwrap(), Component::expr("z1 - x2", 2, 2).unwrap()],
    )
    .unwrap();
    (sys, GaussianModel::standard(2).unwrap())
}

#[test]
fn policies_are_sandwiched_between_coordinate_extremes() {
    let (sys, model) = kink();
    let est = Estimator::new(&sys, &model, EstimatorOptions::default()).unwrap();
    let sample = qmc(2, 8192, 6);
    let x = [1.0, 1.0];
    let enclosure = est.subdifferential(&x, &sample, &TiePolicy::all(2)).unwrap();
    assert!(enclosure.tie_fraction > 0.4);
    for j in 0..2 {
        let lo = est.gradient_with_policy(&x, &sample, TiePolicy::MinCoordinate(j)).unwrap().value[j];
        let hi = est.gradient_with_policy(&x, &sample, TiePolicy::MaxCoordinate(j)).unwrap().value[j];
        for p in &enclosure.policies {
            assert!(p.value[j] >= lo - 1e-15 && p.value[j] <= hi + 1e-15, "{} coordinate {j}", p.policy);
        }
        assert!(lo.abs() < 1e-12);
        assert!((hi - normal_pdf(1.0)).abs() < 1e-2, "upper {hi}");
    }
    let lowest = est.gradient_with_policy(&x, &sample, TiePolicy::LowestIndex).unwrap();
    assert!(enclosure.contains(&lowest.value, 0.0));
    // The gradients of the two smooth pieces lie in the enclosure.
    assert!(enclosure.contains(&[normal_pdf(1.0), 0.0], 1e-2));
    assert!(enclosure.contains(&[0.0, normal_pdf(1.0)], 1e-2));
}

#[test]
fn smooth_slab_has_a_degenerate_enclosure() {
    let case = corpus::slab();
    let est = estimator(&case);
    let sample = qmc(2, 16384, 8);
    let enclosure = est.subdifferential(&[1.0], &sample, &TiePolicy::extremes(1)).unwrap();
    assert!(enclosure.hull_width <= 1e-12);
    assert!(enclosure.contains(&[2.0 * normal_pdf(1.0)], 2e-2), "{:?}", enclosure.hull_lower);
}

#[test]
fn correlated_case_matches_sampling_oracle() {
    let case = corpus::correlated();
    let est = estimator(&case);
    let sample = qmc(3, 16384, 12);
    for x in &case.points {
        let sphere = est.probability(x, &sample).unwrap();
        let oracle = oracle_probability_mc(&case.system, &case.model, x, 200_000, 77).unwrap();
        let tol = 4.0 * (oracle.stderr.powi(2) + sphere.stderr.powi(2)).sqrt() + 1e-4;
        assert!((sphere.value - oracle.value).abs() <= tol, "x={x:?}: {} vs {}", sphere.value, oracle.value);
    }
}

#[test]
fn five_dimensional_ball_matches_closed_forms() {
    let case = corpus::ball_m5();
    let est = estimator(&case);
    let sample = qmc(5, 16384, 13);
    let phi = case.phi.clone().unwrap();
    let grad = case.gradient.clone().unwrap();
    for x in &case.points {
        let p = est.probability(x, &sample).unwrap();
        assert!((p.value - phi(x)).abs() < 1e-10, "x={x:?}");
        let g = est.gradient(x, &sample).unwrap();
        assert!((g.value[0] - grad(x)[0]).abs() < 1e-9, "x={x:?}: {} vs {}", g.value[0], grad(x)[0]);
    }
}

#[test]
fn chi_quantiles_invert_where_representable() {
    for m in 1..=6 {
        let chi = ChiDistribution::new(m).unwrap();
        for k in 0..=79 {
            let t = 0.1 + 0.1 * k as f64;
            let p = chi.cdf(t).unwrap();
            let back = if p <= 0.5 { chi.quantile(p).unwrap() } else { chi.upper_quantile(chi.sf(t).unwrap()).unwrap() };
            assert!((back - t).abs() <= 1e-8, "m={m} t={t}: {back}");
        }
    }
}

#[test]
fn example_matches_its_one_dimensional_integral() {
    let case = corpus::example();
    let est = estimator(&case);
    let sample = qmc(2, 1 << 15, 21);
    for t in [-0.5, 0.0, 0.1] {
        let e = est.probability(&[t], &sample).unwrap();
        let exact = example_phi_closed_form(t, DEFAULT_QUAD_TOL).unwrap();
        assert!((e.value - exact).abs() <= (3.0 * e.stderr).max(2e-3), "t={t}: {} vs {exact}", e.value);
    }
    // g(0.5, 0) > 0, so only the interval path applies.
    assert!(est.probability(&[0.5], &sample).is_err());
    let e = est.probability_interval(&[0.5], &sample).unwrap();
    let exact = example_phi_closed_form(0.5, DEFAULT_QUAD_TOL).unwrap();
    assert!((e.value - exact).abs() <= (3.0 * e.stderr).max(2e-3), "t=0.5: {} vs {exact}", e.value);
}
