//! Metric fields on charts and their curvature.

mod chart;
mod curvature;
mod grid;
mod metric;

pub use chart::{AsymptoticDirection, Axis, Chart, CrossSection};
pub use curvature::{
    covariant_hessian, curvature, hessian_from_jets, mean_curvature, mean_curvature_at, sectional_curvature,
    CurvatureBundle,
};
pub use grid::{fornberg_weights, GridAxis, GridMetric};
pub use metric::{Guard, MetricField, MetricJet};

use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("metric is not positive definite at {0}")]
    NotPositiveDefinite(String),
    #[error("point outside chart: {0}")]
    OutOfChart(String),
    #[error("degenerate plane")]
    DegeneratePlane,
    #[error("degenerate level set")]
    DegenerateLevelSet,
    #[error("grid metric: {0}")]
    Grid(String),
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn euclidean3() -> MetricField {
        let chart = Chart::new(
            vec![Axis::new("x", -10.0, 10.0), Axis::new("y", -10.0, 10.0), Axis::new("z", -10.0, 10.0)],
            0,
            AsymptoticDirection::ToInfinity,
            CrossSection::Patch,
        )
        .unwrap();
        MetricField::diagonal(chart, &["1".into(), "1".into(), "1".into()]).unwrap()
    }

    fn hyperbolic_polar(n: usize) -> MetricField {
        let mut axes = vec![Axis::new("r", 1e-3, f64::INFINITY)];
        let mut diag = vec!["1/(1+r^2)".to_string()];
        let mut prefix = String::from("r^2");
        for k in 1..n {
            let name = if k == n - 1 { "phi".to_string() } else { format!("t{k}") };
            if k == n - 1 {
                axes.push(Axis::periodic(&name, 0.0, 2.0 * PI));
            } else {
                axes.push(Axis::new(&name, 0.0, PI));
            }
            diag.push(prefix.clone());
            prefix = format!("{prefix}*sin({name})^2");
        }
        let chart = Chart::new(axes, 0, AsymptoticDirection::ToInfinity, CrossSection::Sphere).unwrap();
        MetricField::diagonal(chart, &diag).unwrap()
    }

    /// Deterministic points away from the polar axis.
    fn points(n: usize, count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|k| {
                let t = k as f64 + 0.5;
                let mut p = vec![0.3 + 7.0 * ((t * 0.618_033_988_7) % 1.0)];
                for d in 1..n {
                    let frac = (t * (0.754_877_666 + 0.1 * d as f64)) % 1.0;
                    p.push(if d == n - 1 { 2.0 * PI * frac } else { 0.2 + (PI - 0.4) * frac });
                }
                p
            })
            .collect()
    }

    #[test]
    fn euclidean_is_flat() {
        let g = euclidean3();
        let mj = g.metric_jet(&[0.3, -1.0, 2.0]).unwrap();
        assert!(mj.dg.iter().all(|v| *v == 0.0));
        assert!(mj.ddg.iter().all(|v| *v == 0.0));
        let cb = curvature(&mj);
        assert!(cb.christoffel.iter().all(|v| *v == 0.0));
        assert!(cb.ricci.iter().all(|v| *v == 0.0));
        assert_eq!(cb.scalar, 0.0);
        let k = sectional_curvature(&mj, &cb, &[1.0, 0.0, 0.0], &[0.3, 1.0, 0.2]).unwrap();
        assert_eq!(k, 0.0);
    }

    #[test]
    fn hyperbolic_radial_component_and_derivative() {
        let g = hyperbolic_polar(3);
        let mj = g.metric_jet(&[1.0, 1.0, 0.5]).unwrap();
        // g_rr = 1/(1+r^2), d/dr = -2r/(1+r^2)^2
        assert!((mj.g(0, 0) - 0.5).abs() < 1e-15);
        assert!((mj.dg(0, 0, 0) + 0.5).abs() < 1e-15);
        assert!((mj.ddg(0, 0, 0, 0) - 0.5).abs() < 1e-15); // (6r^2-2)/(1+r^2)^3
    }

    #[test]
    fn hyperbolic_is_einstein() {
        for n in [3usize, 4, 5] {
            let g = hyperbolic_polar(n);
            for p in points(n, 25) {
                let mj = g.metric_jet(&p).unwrap();
                // g · g⁻¹ = I
                for i in 0..n {
                    for j in 0..n {
                        let s: f64 = (0..n).map(|k| mj.g(i, k) * mj.g_inv(k, j)).sum();
                        assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                    }
                }
                let cb = curvature(&mj);
                let nf = n as f64;
                assert!((cb.scalar + nf * (nf - 1.0)).abs() < 1e-10, "R = {}", cb.scalar);
                for i in 0..n {
                    for j in 0..n {
                        let want = -(nf - 1.0) * mj.g(i, j);
                        let scale = 1.0 + mj.g(i, i).abs().max(mj.g(j, j).abs());
                        assert!((cb.ricci(i, j) - want).abs() < 1e-10 * scale);
                        assert!((cb.ricci(i, j) - cb.ricci(j, i)).abs() < 1e-12 * scale);
                        for k in 0..n {
                            assert_eq!(cb.gamma(k, i, j), cb.gamma(k, j, i));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn round_sphere_has_scalar_curvature_two() {
        let chart = Chart::new(
            vec![Axis::new("theta", 0.0, PI), Axis::periodic("phi", 0.0, 2.0 * PI)],
            0,
            AsymptoticDirection::ToZero,
            CrossSection::Patch,
        )
        .unwrap();
        let g = MetricField::diagonal(chart, &["1".into(), "sin(theta)^2".into()]).unwrap();
        let cb = curvature(&g.metric_jet(&[0.9, 2.0]).unwrap());
        assert!((cb.scalar - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_sectional_curvature_and_plane_invariance() {
        let g = hyperbolic_polar(3);
        for (k, p) in points(3, 20).into_iter().enumerate() {
            let mj = g.metric_jet(&p).unwrap();
            let cb = curvature(&mj);
            let t = k as f64;
            let u = [t.sin() + 0.1, (2.0 * t).cos(), 0.5];
            let v = [0.2, 1.0 - 0.5 * t.cos(), (3.0 * t).sin()];
            let kuv = sectional_curvature(&mj, &cb, &u, &v).unwrap();
            assert!((kuv + 1.0).abs() < 1e-9);
            let (a, b, c, d) = (1.3, -0.4, 0.7, 2.1);
            let u2: Vec<f64> = (0..3).map(|i| a * u[i] + b * v[i]).collect();
            let v2: Vec<f64> = (0..3).map(|i| c * u[i] + d * v[i]).collect();
            let k2 = sectional_curvature(&mj, &cb, &u2, &v2).unwrap();
            assert!((k2 - kuv).abs() < 1e-10 * kuv.abs());
        }
    }

    #[test]
    fn degenerate_plane_is_rejected() {
        let g = hyperbolic_polar(3);
        let mj = g.metric_jet(&[1.0, 1.0, 1.0]).unwrap();
        let cb = curvature(&mj);
        assert_eq!(
            sectional_curvature(&mj, &cb, &[1.0, 2.0, 0.0], &[2.0, 4.0, 0.0]),
            Err(GeometryError::DegeneratePlane)
        );
    }

    #[test]
    fn covariant_hessians() {
        let h = hyperbolic_polar(3);
        let vocab = h.chart().vocabulary().clone();
        let one = crate::expr::parse_with("1", vocab.clone()).unwrap();
        let v0 = crate::expr::parse_with("sqrt(r^2+1)", vocab).unwrap();
        for p in points(3, 10) {
            let zero = covariant_hessian(&h, &one, &p).unwrap();
            assert!(zero.iter().flatten().all(|v| *v == 0.0));
            let hess = covariant_hessian(&h, &v0, &p).unwrap();
            let mj = h.metric_jet(&p).unwrap();
            let val = v0.eval_value(&p).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let want = val * mj.g(i, j);
                    assert!((hess[i][j] - want).abs() < 1e-10 * (1.0 + want.abs()));
                }
            }
        }
        let e = euclidean3();
        let x = crate::expr::parse_with("x", e.chart().vocabulary().clone()).unwrap();
        let hx = covariant_hessian(&e, &x, &[0.4, 0.1, -2.0]).unwrap();
        assert!(hx.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn not_positive_definite_is_an_error() {
        let g = euclidean3().scaled(-1.0).unwrap();
        assert!(matches!(g.metric_jet(&[0.0, 0.0, 0.0]), Err(GeometryError::NotPositiveDefinite(_))));
    }

    #[test]
    fn mean_curvature_of_spheres_and_planes() {
        let h = hyperbolic_polar(3);
        let hval = mean_curvature(&h, 0, 1.0, &[0.0, 1.1, 0.3], 1.0).unwrap();
        assert!((hval - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let flipped = mean_curvature(&h, 0, 1.0, &[0.0, 1.1, 0.3], -1.0).unwrap();
        assert!((hval + flipped).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for r in [1.0, 10.0, 100.0, 1000.0] {
            let hr = mean_curvature(&h, 0, r, &[0.0, 0.7, 0.3], 1.0).unwrap();
            let want = 2.0 * (1.0 + r * r).sqrt() / r;
            assert!((hr - want).abs() < 1e-9 * want);
            assert!(hr > 2.0 && hr < last);
            last = hr;
        }
        let e = euclidean3();
        assert_eq!(mean_curvature(&e, 0, 0.0, &[0.0, 1.0, 1.0], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn fornberg_reproduces_classic_stencils() {
        let w = fornberg_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let d1 = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        let d2 = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
        for k in 0..5 {
            assert!((w[1][k] - d1[k]).abs() < 1e-14);
            assert!((w[2][k] - d2[k]).abs() < 1e-14);
        }
    }

    fn sampled_hyperbolic(h: f64, center: &[f64]) -> MetricField {
        let analytic = hyperbolic_polar(3);
        let axes: Vec<GridAxis> = center
            .iter()
            .map(|&c| GridAxis { start: c - 4.0 * h, step: h, count: 9, periodic: false })
            .collect();
        let grid = GridMetric::sample(&analytic, axes).unwrap();
        MetricField::grid(analytic.chart().clone(), grid)
    }

    #[test]
    fn grid_first_derivatives_converge_at_fourth_order() {
        let c = [1.5, 1.0, 0.5];
        let exact = hyperbolic_polar(3).metric_jet(&c).unwrap();
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| {
                let mj = sampled_hyperbolic(h, &c).metric_jet(&c).unwrap();
                mj.dg.iter().zip(&exact.dg).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((3.5..=4.5).contains(&order), "order {order} from {errs:?}");
        }
    }

    #[test]
    fn grid_edges_and_interpolation_stay_accurate() {
        let c = [1.5, 1.0, 0.5];
        let g = sampled_hyperbolic(0.01, &c);
        let analytic = hyperbolic_polar(3);
        // Edge node (one-sided stencils) and an off-node point.
        for p in [[1.5 - 0.04, 1.0 + 0.04, 0.5], [1.5031, 0.9917, 0.5049]] {
            let a = analytic.metric_jet(&p).unwrap();
            let b = g.metric_jet(&p).unwrap();
            let err = a.ddg.iter().zip(&b.ddg).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(err < 1e-5, "{err}");
        }
        assert!(matches!(g.metric_jet(&[2.0, 1.0, 0.5]), Err(GeometryError::OutOfChart(_))));
    }
}
