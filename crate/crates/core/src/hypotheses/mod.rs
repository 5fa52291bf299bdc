//! Margins for the hypotheses of the positivity theorems: scalar curvature,
//! boundary mean curvature, curvature decay and the boundary cross-section.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backgrounds::{boundary_volume, BackgroundError};
use crate::numerics::{richardson, Halton};
use crate::quadrature::default_levels;
use crate::tensor::{
    curvature, mean_curvature, sectional_curvature, AsymptoticDirection, Chart, CrossSection, GeometryError,
    MetricField,
};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 20_210_726;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypothesisError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Background(#[from] BackgroundError),
    #[error("{0}")]
    InvalidInput(String),
    #[error("curvature deviation does not decay: {reason}")]
    Divergence { reason: String, table: Vec<AlhLevel> },
}

/// Deterministic sample points in a chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub seed: u64,
    pub count: usize,
    /// Range of the asymptotic coordinate; chart-dependent default when absent.
    pub asymptotic_range: Option<(f64, f64)>,
}

impl Default for Sampler {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, count: 200, asymptotic_range: None }
    }
}

/// Keeps polar angles this far from the coordinate axis.
const POLE_MARGIN: f64 = 0.02;

fn default_range(chart: &Chart) -> (f64, f64) {
    let a = chart.axis(chart.asymptotic());
    match chart.direction() {
        AsymptoticDirection::ToInfinity => {
            let base = a.lower.max(0.0);
            let lo = base + 0.05 * base.max(1.0);
            (lo, (lo + 20.0).min(a.upper))
        }
        AsymptoticDirection::ToZero => {
            let base = a.lower.max(0.0);
            (base + 1e-3, (base + 1.0).min(a.upper))
        }
    }
}

/// Map a unit-cube point onto the cross-section coordinates.
fn cross_coordinate(chart: &Chart, axis: usize, u: f64) -> f64 {
    let a = chart.axis(axis);
    if let Some(p) = a.period {
        a.lower + p * u
    } else if chart.cross_section() == CrossSection::Sphere {
        a.lower + POLE_MARGIN + (a.upper - a.lower - 2.0 * POLE_MARGIN) * u
    } else {
        a.lower + (a.upper - a.lower) * u
    }
}

impl Sampler {
    pub fn new(seed: u64, count: usize) -> Self {
        Self { seed, count, asymptotic_range: None }
    }

    pub fn points(&self, chart: &Chart) -> Vec<Vec<f64>> {
        let (lo, hi) = self.asymptotic_range.unwrap_or_else(|| default_range(chart));
        let c = chart.asymptotic();
        Halton::new(chart.dim(), self.seed)
            .take(self.count)
            .map(|u| {
                (0..chart.dim())
                    .map(|i| if i == c { lo + (hi - lo) * u[i] } else { cross_coordinate(chart, i, u[i]) })
                    .collect()
            })
            .collect()
    }

    /// Points on the level set `{x^coord = value}`.
    pub fn level_points(&self, chart: &Chart, coord: usize, value: f64) -> Vec<Vec<f64>> {
        Halton::new(chart.dim(), self.seed)
            .take(self.count)
            .map(|u| {
                (0..chart.dim())
                    .map(|i| if i == coord { value } else { cross_coordinate(chart, i, u[i]) })
                    .collect()
            })
            .collect()
    }
}

/// Extreme value over samples and where it occurred.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Margin {
    pub value: f64,
    pub at: Vec<f64>,
}

/// Reduce in sample order so ties resolve to the lowest index.
fn extreme(points: &[Vec<f64>], values: Vec<f64>, take_max: bool) -> Margin {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        let better = if take_max { *v > values[best] } else { *v < values[best] };
        if better {
            best = i;
        }
    }
    Margin { value: values[best], at: points[best].clone() }
}

/// `min (R + n(n−1))` over the samples.
pub fn scalar_margin(g: &MetricField, points: &[Vec<f64>]) -> Result<Margin, HypothesisError> {
    if points.is_empty() {
        return Err(HypothesisError::InvalidInput("no sample points".into()));
    }
    let n = g.dim() as f64;
    let values = points
        .par_iter()
        .map(|p| Ok(curvature(&g.metric_jet(p)?).scalar + n * (n - 1.0)))
        .collect::<Result<Vec<f64>, GeometryError>>()?;
    Ok(extreme(points, values, false))
}

/// Orientation of the normal pointing into `M` (toward the asymptotic end).
fn inward_orientation(g: &MetricField, coord: usize) -> Result<f64, HypothesisError> {
    if coord != g.chart().asymptotic() {
        return Err(HypothesisError::InvalidInput(format!(
            "boundary coordinate '{}' is not the asymptotic coordinate",
            g.chart().axis(coord).name
        )));
    }
    Ok(g.chart().outward_sign())
}

/// Mean curvature of `{x^coord = value}` with respect to the normal `ν` pointing
/// into `M`, taken as `H = −div ν`; a round sphere of radius `r` in hyperbolic
/// space then has `H = −(n−1)√(1+r²)/r`.
pub fn boundary_mean_curvature(g: &MetricField, coord: usize, value: f64, p: &[f64]) -> Result<f64, HypothesisError> {
    let s = inward_orientation(g, coord)?;
    Ok(-mean_curvature(g, coord, value, p, s)?)
}

/// `max (H − (n−1))` over the samples of the boundary.
pub fn boundary_mean_margin(
    g: &MetricField,
    coord: usize,
    value: f64,
    points: &[Vec<f64>],
) -> Result<Margin, HypothesisError> {
    if points.is_empty() {
        return Err(HypothesisError::InvalidInput("no sample points".into()));
    }
    inward_orientation(g, coord)?;
    let n = g.dim() as f64;
    let values = points
        .par_iter()
        .map(|p| Ok(boundary_mean_curvature(g, coord, value, p)? - (n - 1.0)))
        .collect::<Result<Vec<f64>, HypothesisError>>()?;
    Ok(extreme(points, values, true))
}

/// Level in `[lo, hi]` where the boundary mean curvature at `p` changes sign.
pub fn minimal_level(g: &MetricField, coord: usize, lo: f64, hi: f64, p: &[f64]) -> Result<f64, HypothesisError> {
    let h = |v: f64| boundary_mean_curvature(g, coord, v, p);
    let (mut a, mut b) = (lo, hi);
    let (ha, hb) = (h(a)?, h(b)?);
    if ha * hb > 0.0 {
        return Err(HypothesisError::InvalidInput(format!("mean curvature has one sign on [{lo}, {hi}]")));
    }
    let rising = ha < hb;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let hm = h(mid)?;
        if hm == 0.0 {
            return Ok(mid);
        }
        if (hm < 0.0) == rising {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlhLevel {
    pub level: f64,
    pub x: f64,
    /// `max |K + 1|` over the sampled planes.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlhDiagnostic {
    pub levels: Vec<AlhLevel>,
    /// Least-squares slope of `log deviation` against `log x`; absent when the
    /// deviations are at roundoff level.
    pub fitted_order: Option<f64>,
    pub planes_per_level: usize,
    pub seed: u64,
}

/// Deviations at or below this are treated as exact zeros.
const DEVIATION_FLOOR: f64 = 1e-10;

/// Per level, `max |K(u,v) + 1|` over pseudo-random planes at pseudo-random
/// points of the level set, and the fitted decay order in `x`.
pub fn alh_diagnostic(
    g: &MetricField,
    levels: &[f64],
    planes_per_level: usize,
    seed: u64,
) -> Result<AlhDiagnostic, HypothesisError> {
    let chart = g.chart();
    let n = g.dim();
    if levels.len() < 2 || planes_per_level == 0 {
        return Err(HypothesisError::InvalidInput("need two levels and at least one plane".into()));
    }
    let c = chart.asymptotic();
    // Same cross-section points and planes at every level.
    let draws: Vec<Vec<f64>> = Halton::new((3 * n).min(16), seed).take(planes_per_level).collect();
    let mut table = Vec::with_capacity(levels.len());
    for &s in levels {
        let devs = draws
            .par_iter()
            .map(|d| {
                let p: Vec<f64> =
                    (0..n).map(|i| if i == c { s } else { cross_coordinate(chart, i, d[i]) }).collect();
                let mj = g.metric_jet(&p)?;
                let cb = curvature(&mj);
                let u: Vec<f64> = (0..n).map(|i| 2.0 * d[(n + i) % d.len()] - 1.0).collect();
                let v: Vec<f64> = (0..n).map(|i| 2.0 * d[(2 * n + i) % d.len()] - 1.0).collect();
                match sectional_curvature(&mj, &cb, &u, &v) {
                    Ok(k) => Ok((k + 1.0).abs()),
                    Err(GeometryError::DegeneratePlane) => Ok(0.0),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<f64>, GeometryError>>()?;
        let deviation = devs.into_iter().fold(0.0, f64::max);
        table.push(AlhLevel { level: s, x: chart.x_of(s), deviation });
    }
    let first = table[0].deviation;
    let last = table[table.len() - 1].deviation;
    if last > DEVIATION_FLOOR && last >= 0.5 * first {
        return Err(HypothesisError::Divergence {
            reason: format!("|K+1| = {first:.3e} at the first level and {last:.3e} at the last"),
            table,
        });
    }
    let pts: Vec<(f64, f64)> =
        table.iter().filter(|l| l.deviation > DEVIATION_FLOOR).map(|l| (l.x.ln(), l.deviation.ln())).collect();
    let fitted_order = if pts.len() >= 2 {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    Ok(AlhDiagnostic { levels: table, fitted_order, planes_per_level, seed })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossSectionSample {
    /// Cross-section coordinates.
    pub point: Vec<f64>,
    /// `ḣ` upper-triangle components at `x = 0`.
    pub metric: Vec<f64>,
    /// Sectional curvatures of `ḣ` in the coordinate planes.
    pub curvatures: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossSectionReport {
    pub topology: CrossSection,
    pub samples: Vec<CrossSectionSample>,
    pub curvature_mean: f64,
    /// Largest deviation of a sampled curvature from the mean.
    pub curvature_spread: f64,
    /// `Some(c)` when every sampled curvature is within tolerance of `c`.
    pub constant_curvature: Option<f64>,
    pub volume: f64,
    pub volume_error: f64,
    /// Declared spherical topology with constant positive curvature.
    pub asymptotically_hyperbolic: bool,
    pub tolerance: f64,
}

/// Boundary metric `ḣ = lim x²·g|cross` and its sectional curvatures at the
/// sampled cross-section points, extrapolated over the default levels.
pub fn boundary_cross_section(
    g: &MetricField,
    sampler: &Sampler,
    tolerance: f64,
) -> Result<CrossSectionReport, HypothesisError> {
    let chart = g.chart();
    let cross = chart.cross_axes();
    let m = cross.len();
    let levels = default_levels(chart);
    let xs: Vec<f64> = levels.iter().map(|&s| chart.x_of(s)).collect();
    let c = chart.asymptotic();
    let mut samples = Vec::new();
    for base in sampler.level_points(chart, c, levels[0]) {
        // Per level: packed ḣ components then coordinate-plane curvatures.
        let mut metric_rows = Vec::with_capacity(levels.len());
        let mut curv_rows = Vec::with_capacity(levels.len());
        for (&s, &x) in levels.iter().zip(&xs) {
            let mut p = base.clone();
            p[c] = s;
            let mj = g.metric_jet(&p)?.restrict(&cross)?;
            let cb = curvature(&mj);
            let mut comps = Vec::with_capacity(m * (m + 1) / 2);
            for a in 0..m {
                for b in a..m {
                    comps.push(x * x * mj.g(a, b));
                }
            }
            let mut ks = Vec::new();
            for a in 0..m {
                for b in a + 1..m {
                    let mut u = vec![0.0; m];
                    let mut v = vec![0.0; m];
                    u[a] = 1.0;
                    v[b] = 1.0;
                    ks.push(sectional_curvature(&mj, &cb, &u, &v)? / (x * x));
                }
            }
            metric_rows.push(comps);
            curv_rows.push(ks);
        }
        let limit = |rows: &[Vec<f64>], j: usize| -> Result<f64, HypothesisError> {
            let vals: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let noise: Vec<f64> = vals.iter().map(|v| 1e3 * f64::EPSILON * v.abs().max(1.0)).collect();
            richardson(&xs, &vals, &noise, None)
                .map(|e| e.limit)
                .map_err(|reason| HypothesisError::Divergence { reason, table: Vec::new() })
        };
        let metric = (0..metric_rows[0].len()).map(|j| limit(&metric_rows, j)).collect::<Result<_, _>>()?;
        let curvatures = (0..curv_rows[0].len()).map(|j| limit(&curv_rows, j)).collect::<Result<_, _>>()?;
        samples.push(CrossSectionSample { point: cross.iter().map(|&a| base[a]).collect(), metric, curvatures });
    }
    let all: Vec<f64> = samples.iter().flat_map(|s| s.curvatures.iter().copied()).collect();
    if all.is_empty() {
        return Err(HypothesisError::InvalidInput("no cross-section samples".into()));
    }
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let spread = all.iter().map(|k| (k - mean).abs()).fold(0.0, f64::max);
    let constant_curvature = if spread <= tolerance * mean.abs().max(1.0) { Some(mean) } else { None };
    let vol = boundary_volume(g)?;
    let asymptotically_hyperbolic =
        chart.cross_section() == CrossSection::Sphere && constant_curvature.is_some_and(|k| k > tolerance);
    Ok(CrossSectionReport {
        topology: chart.cross_section(),
        samples,
        curvature_mean: mean,
        curvature_spread: spread,
        constant_curvature,
        volume: vol.limit,
        volume_error: vol.error,
        asymptotically_hyperbolic,
        tolerance,
    })
}

/// Settings for a full hypothesis check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckConfig {
    pub sampler: Sampler,
    pub tolerance: f64,
    /// Inner boundary `{x^coord = value}`, if any.
    pub boundary: Option<(usize, f64)>,
    /// Levels for the curvature-decay table; chart default when empty.
    pub levels: Vec<f64>,
    pub planes_per_level: usize,
    /// Cross-section samples for the boundary metric.
    pub cross_samples: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            sampler: Sampler::default(),
            tolerance: DEFAULT_TOLERANCE,
            boundary: None,
            levels: Vec::new(),
            planes_per_level: 32,
            cross_samples: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub coordinate: String,
    pub value: f64,
    pub margin: Margin,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlhReport {
    pub diagnostic: Option<AlhDiagnostic>,
    pub max_deviation: Option<f64>,
    pub divergence: Option<String>,
    pub divergence_table: Vec<AlhLevel>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub scalar_curvature_ok: bool,
    pub boundary_mean_curvature_ok: Option<bool>,
    pub hypotheses_satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub dimension: usize,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    pub scalar_margin: Margin,
    pub boundary: Option<BoundaryReport>,
    pub alh: AlhReport,
    pub cross_section: Option<CrossSectionReport>,
    pub cross_section_error: Option<String>,
    pub verdict: Verdict,
}

/// Run every check. Decay and cross-section failures are recorded in the
/// report rather than aborting it; they do not enter the verdict.
pub fn check(g: &MetricField, config: &CheckConfig) -> Result<HypothesisReport, HypothesisError> {
    let chart = g.chart();
    let tol = config.tolerance;
    if !(tol > 0.0) {
        return Err(HypothesisError::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    let points = config.sampler.points(chart);
    let scalar = scalar_margin(g, &points)?;
    let boundary = match config.boundary {
        Some((coord, value)) => {
            let pts = config.sampler.level_points(chart, coord, value);
            Some(BoundaryReport {
                coordinate: chart.axis(coord).name.clone(),
                value,
                margin: boundary_mean_margin(g, coord, value, &pts)?,
                samples: pts.len(),
            })
        }
        None => None,
    };
    let levels = if config.levels.is_empty() { default_levels(chart) } else { config.levels.clone() };
    let alh = match alh_diagnostic(g, &levels, config.planes_per_level, config.sampler.seed) {
        Ok(d) => AlhReport {
            max_deviation: d.levels.iter().map(|l| l.deviation).reduce(f64::max),
            diagnostic: Some(d),
            divergence: None,
            divergence_table: Vec::new(),
        },
        Err(HypothesisError::Divergence { reason, table }) => {
            AlhReport { diagnostic: None, max_deviation: None, divergence: Some(reason), divergence_table: table }
        }
        Err(e) => return Err(e),
    };
    let cross_sampler = Sampler { count: config.cross_samples, ..config.sampler.clone() };
    let (cross_section, cross_section_error) = match boundary_cross_section(g, &cross_sampler, tol) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let scalar_ok = scalar.value >= -tol;
    let boundary_ok = boundary.as_ref().map(|b| b.margin.value <= tol);
    Ok(HypothesisReport {
        dimension: g.dim(),
        seed: config.sampler.seed,
        samples: points.len(),
        tolerance: tol,
        scalar_margin: scalar,
        boundary,
        alh,
        cross_section,
        cross_section_error,
        verdict: Verdict {
            scalar_curvature_ok: scalar_ok,
            boundary_mean_curvature_ok: boundary_ok,
            hypotheses_satisfied: scalar_ok && boundary_ok.unwrap_or(true),
        },
    })
}

#[cfg(test)]
mod tests;
