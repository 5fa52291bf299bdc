use std::f64::consts::PI;

use super::{BackgroundError, BackgroundModel, BoundaryMetric, EndType, Normalization, StaticPotential};
use crate::expr::parse_with;
use crate::tensor::{
    curvature, hessian_from_jets, AsymptoticDirection, Axis, Chart, CrossSection, GeometryError, Guard, MetricField,
};
use crate::expr::Expression;

/// Angle names for the round `S^{n-1}`: `theta, phi` for `n = 3`,
/// `theta1, …, theta{n-2}, phi` otherwise.
pub fn sphere_angle_names(n: usize) -> Vec<String> {
    if n == 3 {
        return vec!["theta".into(), "phi".into()];
    }
    let mut v: Vec<String> = (1..n - 1).map(|k| format!("theta{k}")).collect();
    v.push("phi".into());
    v
}

/// Polar chart `(r, angles)` with `r ≥ r_min`.
pub fn polar_chart(n: usize, r_min: f64) -> Result<Chart, GeometryError> {
    let mut axes = vec![Axis::new("r", r_min, f64::INFINITY)];
    let names = sphere_angle_names(n);
    for (k, name) in names.iter().enumerate() {
        if k == names.len() - 1 {
            axes.push(Axis::periodic(name, 0.0, 2.0 * PI));
        } else {
            axes.push(Axis::new(name, 0.0, PI));
        }
    }
    Chart::new(axes, 0, AsymptoticDirection::ToInfinity, CrossSection::Sphere)
}

/// Area of the unit round `S^{n-1}`.
pub fn unit_sphere_area(n: usize) -> f64 {
    // S^0 has two points, S^1 has length 2π; A_d = 2π/(d-1)·A_{d-2}.
    let d = n - 1;
    let mut a = if d % 2 == 0 { 2.0 } else { 2.0 * PI };
    let mut k = if d % 2 == 0 { 0 } else { 1 };
    while k < d {
        k += 2;
        a *= 2.0 * PI / (k as f64 - 1.0);
    }
    a
}

/// `r²` times the diagonal of the unit round metric in hyperspherical angles.
fn round_sphere_diagonal(angles: &[String], radius2: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(angles.len());
    let mut prefix = radius2.to_string();
    for a in angles {
        out.push(prefix.clone());
        prefix = format!("{prefix}*sin({a})^2");
    }
    out
}

/// Unit vector components `ω¹ … ωⁿ` as expression sources.
pub(crate) fn omega_sources(angles: &[String]) -> Vec<String> {
    let n = angles.len() + 1;
    (1..=n)
        .map(|i| {
            let mut factors: Vec<String> = angles[..i - 1].iter().map(|a| format!("sin({a})")).collect();
            if i < n {
                factors.push(format!("cos({})", angles[i - 1]));
            }
            factors.join("*")
        })
        .collect()
}

/// The static potentials `V₀ = √(r²+1)`, `V_i = r·ωⁱ` on a polar chart.
pub fn ah_basis(chart: &Chart) -> Result<Vec<StaticPotential>, BackgroundError> {
    if chart.cross_section() != CrossSection::Sphere {
        return Err(BackgroundError::InvalidParameter("AH basis needs a spherical cross-section".into()));
    }
    let names: Vec<String> = chart.names().iter().map(|s| s.to_string()).collect();
    let r = &names[chart.asymptotic()];
    let angles: Vec<String> = chart.cross_axes().iter().map(|&i| names[i].clone()).collect();
    let mut out = vec![StaticPotential {
        label: "V0".into(),
        expr: parse_with(&format!("sqrt({r}^2+1)"), chart.vocabulary().clone())?,
        tag: Normalization::AhBasis(0),
    }];
    for (i, w) in omega_sources(&angles).into_iter().enumerate() {
        out.push(StaticPotential {
            label: format!("V{}", i + 1),
            expr: parse_with(&format!("{r}*{w}"), chart.vocabulary().clone())?,
            tag: Normalization::AhBasis(i + 1),
        });
    }
    Ok(out)
}

fn round_boundary(chart: &Chart, n: usize) -> Result<BoundaryMetric, BackgroundError> {
    let angles = sphere_angle_names(n);
    let diag = round_sphere_diagonal(&angles, "1");
    BoundaryMetric::diagonal(chart, &diag, 1.0, unit_sphere_area(n))
}

fn check_dimension(n: usize) -> Result<(), BackgroundError> {
    if !(3..=crate::expr::MAX_DIM).contains(&n) {
        return Err(BackgroundError::InvalidParameter(format!(
            "dimension n = {n} outside 3..={}",
            crate::expr::MAX_DIM
        )));
    }
    Ok(())
}

/// `dr²/(1+r²) + r²dΩ²_{n-1}` with the full static potential basis.
pub fn hyperbolic_background(n: usize) -> Result<BackgroundModel, BackgroundError> {
    check_dimension(n)?;
    let chart = polar_chart(n, 0.0)?;
    let mut diag = vec!["1/(1+r^2)".to_string()];
    diag.extend(round_sphere_diagonal(&sphere_angle_names(n), "r^2"));
    let metric = MetricField::diagonal(chart.clone(), &diag)?;
    Ok(BackgroundModel {
        name: "hyperbolic".into(),
        params: vec![("n".into(), n as f64)],
        reference: metric.clone(),
        metric,
        potentials: ah_basis(&chart)?,
        end_type: EndType::AhSpherical,
        boundary: round_boundary(&chart, n)?,
    })
}

fn lapse(n: usize, k: i32, m: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| k as f64 + r * r - 2.0 * m / r.powi(n as i32 - 2)
}

/// Largest zero of `f(r) = k + r² − 2m/r^{n-2}` on `r > 0`, or 0 if `f > 0`
/// throughout.
pub fn regular_radius(n: usize, k: i32, m: f64) -> f64 {
    let f = lapse(n, k, m);
    // Scan a geometric grid downward from large r for the first sign change.
    let mut hi = 1e8;
    while hi > 1e-8 {
        let lo = hi / 1.05;
        if f(lo) <= 0.0 && f(hi) > 0.0 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if f(mid) > 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return b;
        }
        hi = lo;
    }
    0.0
}

/// `dr²/f + r²h_k`, `f = k + r² − 2m/r^{n-2}`, restricted to `r > r_reg`.
///
/// `k = 1`: unit round sphere. `k = 0`: unit-volume flat torus. `k = -1`: a
/// patch of the upper half-space model of hyperbolic `(n-1)`-space.
pub fn birmingham_background(n: usize, k: i32, m: f64) -> Result<BackgroundModel, BackgroundError> {
    birmingham_with_torus(n, k, m, 1.0)
}

/// As [`birmingham_background`], with torus side `side` when `k = 0`.
pub fn birmingham_with_torus(n: usize, k: i32, m: f64, side: f64) -> Result<BackgroundModel, BackgroundError> {
    check_dimension(n)?;
    if !(-1..=1).contains(&k) {
        return Err(BackgroundError::InvalidParameter(format!("k = {k} must be 1, 0 or -1")));
    }
    if !m.is_finite() {
        return Err(BackgroundError::InvalidParameter(format!("mass parameter {m}")));
    }
    if !(side > 0.0 && side.is_finite()) {
        return Err(BackgroundError::InvalidParameter(format!("torus side {side} must be positive")));
    }
    let metric = birmingham_metric(n, k, m, side)?;
    let reference = birmingham_metric(n, k, 0.0, side)?;
    let chart = metric.chart().clone();
    let vocab = chart.vocabulary().clone();
    let (potentials, end_type, boundary) = match k {
        1 => (ah_basis(&chart)?, EndType::AhSpherical, round_boundary(&chart, n)?),
        0 => {
            let src = if side == 1.0 { "r".to_string() } else { format!("{side:?}*r") };
            let v = StaticPotential {
                label: "V".into(),
                expr: parse_with(&src, vocab)?,
                tag: Normalization::AlhNormalized { scale: side },
            };
            let diag = vec!["1".to_string(); n - 1];
            let vol = side.powi(n as i32 - 1);
            (vec![v], EndType::Toroidal, BoundaryMetric::diagonal(&chart, &diag, 0.0, vol)?)
        }
        _ => {
            let v = StaticPotential {
                label: "V".into(),
                expr: parse_with("sqrt(r^2-1)", vocab)?,
                tag: Normalization::AlhNormalized { scale: 1.0 },
            };
            let h = &chart.names()[n - 1];
            let diag = vec![format!("1/{h}^2"); n - 1];
            let vol = (1.0 - 0.5f64.powi(n as i32 - 2)) / (n as f64 - 2.0);
            (vec![v], EndType::HigherGenus, BoundaryMetric::diagonal(&chart, &diag, -1.0, vol)?)
        }
    };
    Ok(BackgroundModel {
        name: "birmingham".into(),
        params: vec![("n".into(), n as f64), ("k".into(), k as f64), ("m".into(), m)],
        metric,
        reference,
        potentials,
        end_type,
        boundary,
    })
}

fn birmingham_metric(n: usize, k: i32, m: f64, side: f64) -> Result<MetricField, BackgroundError> {
    let r_reg = regular_radius(n, k, m);
    let mut f = format!("{k} + r^2");
    if m != 0.0 {
        f = format!("{f} - ({:?})/r^{}", 2.0 * m, n - 2);
    }
    let mut diag = vec![format!("1/({f})")];
    let chart = match k {
        1 => {
            diag.extend(round_sphere_diagonal(&sphere_angle_names(n), "r^2"));
            polar_chart(n, r_reg)?
        }
        0 => {
            let mut axes = vec![Axis::new("r", r_reg, f64::INFINITY)];
            for i in 1..n {
                axes.push(Axis::periodic(&format!("y{i}"), 0.0, side));
                diag.push("r^2".into());
            }
            Chart::new(axes, 0, AsymptoticDirection::ToInfinity, CrossSection::Torus)?
        }
        _ => {
            let mut axes = vec![Axis::new("r", r_reg, f64::INFINITY)];
            for i in 1..n - 1 {
                axes.push(Axis::new(&format!("y{i}"), -0.5, 0.5));
            }
            let h = format!("y{}", n - 1);
            axes.push(Axis::new(&h, 1.0, 2.0));
            for _ in 1..n {
                diag.push(format!("r^2/{h}^2"));
            }
            Chart::new(axes, 0, AsymptoticDirection::ToInfinity, CrossSection::Patch)?
        }
    };
    let guard = Guard { expr: parse_with(&f, chart.vocabulary().clone())?, min: 0.0 };
    Ok(MetricField::diagonal(chart, &diag)?.with_guard(guard))
}

/// `D_iD_jV − (R_ij − R/(n−1)·g_ij)·V` at `p`.
pub fn static_residual(g: &MetricField, v: &Expression, p: &[f64]) -> Result<Vec<Vec<f64>>, GeometryError> {
    let n = g.dim();
    let mj = g.metric_jet(p)?;
    let cb = curvature(&mj);
    let vj = v.eval_jet2_with(p, &[])?;
    let mut h = hessian_from_jets(&cb, &vj);
    let scale = cb.scalar / (n as f64 - 1.0);
    for i in 0..n {
        for j in 0..n {
            h[i][j] -= (cb.ricci(i, j) - scale * mj.g(i, j)) * vj.value();
        }
    }
    Ok(h)
}
