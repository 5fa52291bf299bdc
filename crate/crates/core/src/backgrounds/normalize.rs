use nalgebra::DMatrix;

use super::{BackgroundError, Normalization, StaticPotential};
use crate::expr::Expression;
use crate::numerics::{compensated_sum, richardson, Extrapolation};
use crate::quadrature::{cross_section_center, cross_section_rule, default_levels};
use crate::tensor::{CrossSection, MetricField};

const VOLUME_ORDER: usize = 24;

/// `vol(ḣ) = lim_{x→0} ∫ √det(x²·g|cross)`, extrapolated over the default levels.
pub fn boundary_volume(g: &MetricField) -> Result<Extrapolation, BackgroundError> {
    let chart = g.chart();
    let rule = cross_section_rule(chart, VOLUME_ORDER)?;
    let levels = default_levels(chart);
    let cross = chart.cross_axes();
    let m = cross.len();
    let mut values = Vec::with_capacity(levels.len());
    let mut noise = Vec::with_capacity(levels.len());
    for &s in &levels {
        let x = chart.x_of(s);
        let terms = (0..rule.len())
            .map(|k| {
                let gv = g.values(&rule.point(chart, k, s))?;
                let n = g.dim();
                let block = DMatrix::from_fn(m, m, |a, b| x * x * gv[cross[a] * n + cross[b]]);
                Ok(rule.weights[k] * block.determinant().sqrt())
            })
            .collect::<Result<Vec<f64>, BackgroundError>>()?;
        let v = compensated_sum(terms.iter().copied());
        noise.push(64.0 * f64::EPSILON * terms.iter().map(|t| t.abs()).sum::<f64>());
        values.push(v);
    }
    let xs: Vec<f64> = levels.iter().map(|&s| chart.x_of(s)).collect();
    richardson(&xs, &values, &noise, None).map_err(BackgroundError::Divergence)
}

/// `lim_{x→0} x·V` at the centre of the cross-section.
pub fn limit_x_times(g: &MetricField, v: &Expression) -> Result<Extrapolation, BackgroundError> {
    let chart = g.chart();
    let center = cross_section_center(chart);
    let levels = default_levels(chart);
    let mut values = Vec::with_capacity(levels.len());
    for &s in &levels {
        let mut p = vec![0.0; chart.dim()];
        p[chart.asymptotic()] = s;
        for (k, &a) in chart.cross_axes().iter().enumerate() {
            p[a] = center[k];
        }
        g.check_point(&p)?;
        values.push(chart.x_of(s) * v.eval_value(&p)?);
    }
    let noise: Vec<f64> = values.iter().map(|v| 16.0 * f64::EPSILON * v.abs()).collect();
    let xs: Vec<f64> = levels.iter().map(|&s| chart.x_of(s)).collect();
    richardson(&xs, &values, &noise, None).map_err(BackgroundError::Divergence)
}

/// Rescale `V` so that, after the boundary coordinates are scaled to give
/// `vol(ḣ) = 1`, `lim x·V = 1`.
///
/// A scaling `y → y/c` of the cross-section with `c = vol^{1/(n-1)}` changes
/// the boundary-defining function to `x/c`, so the returned potential is
/// `c·V / lim(x·V)`. Patches carry no global volume; for them only
/// `lim x·V = 1` is imposed and masses are quoted per unit boundary volume.
pub fn normalize_end(g: &MetricField, v: &StaticPotential) -> Result<StaticPotential, BackgroundError> {
    if g.chart().cross_section() == CrossSection::Sphere || matches!(v.tag, Normalization::AhBasis(_)) {
        return Err(BackgroundError::AhEnd);
    }
    let c = if g.chart().cross_section() == CrossSection::Patch {
        1.0
    } else {
        let vol = boundary_volume(g)?.limit;
        if !(vol > 0.0 && vol.is_finite()) {
            return Err(BackgroundError::DegenerateLimit(vol));
        }
        vol.powf(1.0 / (g.dim() as f64 - 1.0))
    };
    let lim = limit_x_times(g, &v.expr)?.limit;
    if !(lim.is_finite() && lim.abs() > 1e-300) {
        return Err(BackgroundError::DegenerateLimit(lim));
    }
    let scale = c / lim;
    let expr = if scale == 1.0 { v.expr.clone() } else { v.expr.scale(scale) };
    // The tag records the total factor relative to the unnormalized potential.
    let prior = match v.tag {
        Normalization::AlhNormalized { scale } => scale,
        Normalization::AhBasis(_) => 1.0,
    };
    Ok(StaticPotential { label: v.label.clone(), expr, tag: Normalization::AlhNormalized { scale: prior * scale } })
}
