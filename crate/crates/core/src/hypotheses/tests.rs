use std::collections::BTreeMap;
use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::backgrounds::{birmingham_background, hyperbolic_background, polar_chart, regular_radius};
use crate::tensor::{Axis, AsymptoticDirection, Chart, CrossSection, MetricField};

fn hyperbolic(n: usize) -> MetricField {
    hyperbolic_background(n).unwrap().metric
}

fn euclidean_polar() -> MetricField {
    let chart = polar_chart(3, 0.5).unwrap();
    MetricField::diagonal(chart, &["1".into(), "r^2".into(), "r^2*sin(theta)^2".into()]).unwrap()
}

/// Birmingham `n = 3, k = 1` across its horizon in the coordinate
/// `r = r₀ + ρ²`. Factoring `r³ + r − 2m = (r − r₀)(r² + r₀r + r₀² + 1)` makes
/// `g_ρρ = 4ρ²/f` smooth at the minimal sphere `ρ = 0`.
fn bridge(m: f64) -> MetricField {
    let r0 = regular_radius(3, 1, m);
    let chart = Chart::new(
        vec![Axis::new("rho", -3.0, f64::INFINITY), Axis::new("theta", 0.0, PI), Axis::periodic("phi", 0.0, 2.0 * PI)],
        0,
        AsymptoticDirection::ToInfinity,
        CrossSection::Sphere,
    )
    .unwrap();
    let r = format!("({r0:?} + rho^2)");
    let mut src = BTreeMap::new();
    src.insert((0, 0), format!("4*{r}/({r}^2 + {r0:?}*{r} + {:?})", r0 * r0 + 1.0));
    src.insert((1, 1), format!("{r}^2"));
    src.insert((2, 2), format!("{r}^2*sin(theta)^2"));
    MetricField::from_sources(chart, &src).unwrap()
}

#[test]
fn sampler_is_deterministic_and_inside_chart() {
    let g = birmingham_background(4, 1, 0.3).unwrap().metric;
    let s = Sampler::new(7, 50);
    let a = s.points(g.chart());
    assert_eq!(a, s.points(g.chart()));
    assert_ne!(a, Sampler::new(8, 50).points(g.chart()));
    for p in &a {
        g.check_point(p).unwrap();
    }
}

#[test]
fn hyperbolic_scalar_margin_vanishes() {
    for n in 3..=5 {
        let m = scalar_margin(&hyperbolic(n), &Sampler::new(1, 100).points(hyperbolic(n).chart())).unwrap();
        assert!(m.value.abs() <= 1e-9, "n={n}: {}", m.value);
    }
}

#[test]
fn rescaled_hyperbolic_violates_scalar_bound() {
    let g = hyperbolic(3).scaled(0.81).unwrap();
    let m = scalar_margin(&g, &Sampler::default().points(g.chart())).unwrap();
    assert!((m.value - (6.0 - 6.0 / 0.81)).abs() <= 1e-9, "{}", m.value);
    let report = check(&g, &CheckConfig::default()).unwrap();
    assert!(!report.verdict.hypotheses_satisfied);
}

#[test]
fn birmingham_scalar_margin_vanishes() {
    for (n, k, m) in [(3, 1, 0.5), (4, 1, 0.3), (3, 0, 1.0), (4, 0, 0.2), (3, -1, 0.1), (4, -1, 0.05)] {
        let g = birmingham_background(n, k, m).unwrap().metric;
        let margin = scalar_margin(&g, &Sampler::new(3, 100).points(g.chart())).unwrap();
        assert!(margin.value.abs() <= 1e-9, "n={n} k={k}: {}", margin.value);
    }
}

#[test]
fn hyperbolic_unit_sphere_mean_margin() {
    let g = hyperbolic(3);
    let pts = Sampler::new(2, 40).level_points(g.chart(), 0, 1.0);
    let m = boundary_mean_margin(&g, 0, 1.0, &pts).unwrap();
    assert!((m.value - (-2.0 * 2f64.sqrt() - 2.0)).abs() <= 1e-12, "{}", m.value);
}

#[test]
fn far_sphere_mean_margin_tends_to_twice_minus_n_minus_one() {
    for n in [3, 4] {
        let g = hyperbolic(n);
        let pts = Sampler::new(2, 20).level_points(g.chart(), 0, 1e4);
        let m = boundary_mean_margin(&g, 0, 1e4, &pts).unwrap();
        assert!((m.value + 2.0 * (n as f64 - 1.0)).abs() <= 1e-6, "{}", m.value);
    }
}

#[test]
fn bridge_fixture_is_einstein() {
    let g = bridge(0.5);
    let pts = Sampler { asymptotic_range: Some((-2.0, 5.0)), ..Sampler::new(4, 60) }.points(g.chart());
    assert!(scalar_margin(&g, &pts).unwrap().value.abs() <= 1e-9);
}

#[test]
fn minimal_boundary_has_margin_minus_n_minus_one() {
    let g = bridge(0.5);
    let p = [0.0, 1.1, 0.4];
    let level = minimal_level(&g, 0, -0.3, 0.7, &p).unwrap();
    assert!(level.abs() <= 1e-10, "{level}");
    let pts = Sampler::new(5, 30).level_points(g.chart(), 0, level);
    let m = boundary_mean_margin(&g, 0, level, &pts).unwrap();
    assert!((m.value + 2.0).abs() <= 1e-9, "{}", m.value);
    // Both sides of the neck.
    assert!(boundary_mean_curvature(&g, 0, 0.2, &p).unwrap() < 0.0);
    assert!(boundary_mean_curvature(&g, 0, -0.2, &p).unwrap() > 0.0);
}

#[test]
fn mean_margin_needs_the_asymptotic_coordinate() {
    let g = hyperbolic(3);
    let pts = Sampler::new(1, 3).level_points(g.chart(), 1, 1.0);
    assert!(matches!(boundary_mean_margin(&g, 1, 1.0, &pts), Err(HypothesisError::InvalidInput(_))));
}

#[test]
fn birmingham_curvature_deviation_decays_at_order_n() {
    for (n, m) in [(3, 0.5), (4, 0.3)] {
        let g = birmingham_background(n, 1, m).unwrap().metric;
        let d = alh_diagnostic(&g, &default_levels(g.chart()), 24, 9).unwrap();
        for w in d.levels.windows(2) {
            assert!(w[1].deviation < w[0].deviation, "{:?}", d.levels);
        }
        let order = d.fitted_order.unwrap();
        assert!((order - n as f64).abs() < 0.1, "n={n}: {order}");
    }
}

#[test]
fn hyperbolic_deviation_is_roundoff() {
    let g = hyperbolic(4);
    let d = alh_diagnostic(&g, &default_levels(g.chart()), 16, 1).unwrap();
    assert!(d.levels.iter().all(|l| l.deviation <= 1e-10), "{:?}", d.levels);
    assert_eq!(d.fitted_order, None);
}

#[test]
fn euclidean_deviation_does_not_decay() {
    let g = euclidean_polar();
    match alh_diagnostic(&g, &default_levels(g.chart()), 16, 1) {
        Err(HypothesisError::Divergence { table, .. }) => {
            assert!(table.iter().all(|l| (l.deviation - 1.0).abs() < 1e-9));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn hyperbolic_boundary_is_round_sphere() {
    for n in [3, 4] {
        let g = hyperbolic(n);
        let r = boundary_cross_section(&g, &Sampler::new(1, 6), 1e-8).unwrap();
        assert!((r.constant_curvature.unwrap() - 1.0).abs() <= 1e-8);
        assert!(r.asymptotically_hyperbolic);
        let area = crate::backgrounds::unit_sphere_area(n);
        assert!((r.volume - area).abs() <= 1e-8 * area, "{} vs {area}", r.volume);
    }
}

#[test]
fn birmingham_boundary_metrics() {
    let torus = boundary_cross_section(&birmingham_background(3, 0, 1.0).unwrap().metric, &Sampler::new(1, 4), 1e-8)
        .unwrap();
    assert!(torus.constant_curvature.unwrap().abs() <= 1e-8);
    assert!((torus.volume - 1.0).abs() <= 1e-8);
    assert!(!torus.asymptotically_hyperbolic);
    for s in &torus.samples {
        assert!((s.metric[0] - 1.0).abs() <= 1e-8 && s.metric[1].abs() <= 1e-12 && (s.metric[2] - 1.0).abs() <= 1e-8);
    }

    let patch = boundary_cross_section(&birmingham_background(4, -1, 0.05).unwrap().metric, &Sampler::new(1, 4), 1e-8)
        .unwrap();
    assert!((patch.constant_curvature.unwrap() + 1.0).abs() <= 1e-8);
    // ∫₁² y⁻³ dy over a unit square of the other two coordinates.
    assert!((patch.volume - 0.375).abs() <= 1e-8, "{}", patch.volume);

    let round = boundary_cross_section(&birmingham_background(3, 1, 0.5).unwrap().metric, &Sampler::new(1, 4), 1e-8)
        .unwrap();
    assert!((round.constant_curvature.unwrap() - 1.0).abs() <= 1e-8);
}

#[test]
fn full_check_report() {
    let g = birmingham_background(3, 1, 0.5).unwrap().metric;
    let cfg = CheckConfig { boundary: Some((0, 2.0)), sampler: Sampler::new(11, 60), ..CheckConfig::default() };
    let report = check(&g, &cfg).unwrap();
    assert!(report.verdict.hypotheses_satisfied);
    assert_eq!(report.verdict.boundary_mean_curvature_ok, Some(true));
    assert!(report.alh.divergence.is_none());
    let json = serde_json::to_string(&report).unwrap();
    assert_eq!(json, serde_json::to_string(&check(&g, &cfg).unwrap()).unwrap());

    let flat = check(&euclidean_polar(), &CheckConfig::default()).unwrap();
    assert!(flat.alh.divergence.is_some());
    assert_eq!(flat.verdict.boundary_mean_curvature_ok, None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mean_curvature_flips_with_the_normal(r in 0.8f64..30.0, th in 0.1f64..3.0, ph in 0.0f64..6.2, m in 0.0f64..0.5) {
        let g = birmingham_background(3, 1, m).unwrap().metric;
        let p = [r, th, ph];
        let a = crate::tensor::mean_curvature(&g, 0, r, &p, 1.0).unwrap();
        let b = crate::tensor::mean_curvature(&g, 0, r, &p, -1.0).unwrap();
        prop_assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}
