//! The mass flux integral on level sets, its boundary limit, and the
//! energy-momentum vector.

mod causal;
mod level;

pub use causal::{classify_causal, minkowski_norm2, CausalClass};
pub use level::{adaptive_level, level_set_mass, level_set_values, mass_integrand, LevelEvaluation};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backgrounds::{ah_basis, boundary_volume, normalize_end, BackgroundError, StaticPotential};
use crate::expr::Expression;
use crate::numerics::richardson;
use crate::quadrature::{default_levels, geometric_levels};
use crate::tensor::{CrossSection, GeometryError, MetricField};

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRow {
    /// Value of the asymptotic coordinate.
    pub level: f64,
    pub x: f64,
    pub value: f64,
    pub noise: f64,
    pub order: usize,
    pub alh_deviation: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MassError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Background(#[from] BackgroundError),
    #[error("invalid mass configuration: {0}")]
    Config(String),
    #[error("mass does not converge: {reason}")]
    Divergence { reason: String, table: Vec<LevelRow> },
}

/// Level sequence and quadrature controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MassConfig {
    /// Values of the asymptotic coordinate, ordered toward the boundary.
    /// Empty means the chart default (`r = 20, 40, 80, 160` or `x = 0.05 … 0.00625`).
    pub levels: Vec<f64>,
    pub order: usize,
    pub max_order: usize,
    /// Relative disagreement between successive quadrature orders that
    /// triggers doubling.
    pub order_tolerance: f64,
    /// Decay exponent for extrapolation; fitted when absent.
    pub sigma: Option<f64>,
}

impl Default for MassConfig {
    fn default() -> Self {
        Self { levels: Vec::new(), order: 24, max_order: 192, order_tolerance: 1e-9, sigma: None }
    }
}

impl MassConfig {
    /// Levels for a chart: the configured ones or the chart default.
    pub fn levels_for(&self, g: &MetricField) -> Vec<f64> {
        if self.levels.is_empty() {
            default_levels(g.chart())
        } else {
            self.levels.clone()
        }
    }

    /// Geometric sequence `start, start·ratio, …` toward the boundary.
    pub fn with_geometric_levels(mut self, g: &MetricField, start: f64, ratio: f64, count: usize) -> Self {
        self.levels = geometric_levels(g.chart(), start, ratio, count);
        self
    }

    fn validate(&self, g: &MetricField) -> Result<Vec<f64>, MassError> {
        let levels = self.levels_for(g);
        if !(4..=8).contains(&levels.len()) {
            return Err(MassError::Config(format!("{} levels given, need between 4 and 8", levels.len())));
        }
        let xs: Vec<f64> = levels.iter().map(|&s| g.chart().x_of(s)).collect();
        if xs.iter().any(|x| !(*x > 0.0 && x.is_finite())) || xs.windows(2).any(|w| w[1] >= w[0]) {
            return Err(MassError::Config("levels must approach the boundary monotonically".into()));
        }
        if self.order < 2 || self.max_order < self.order {
            return Err(MassError::Config(format!("quadrature order {} / max {}", self.order, self.max_order)));
        }
        Ok(levels)
    }
}

/// Extrapolated mass for one potential, with the per-level table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassResult {
    pub m: f64,
    pub error: f64,
    pub sigma: Option<f64>,
    pub table: Vec<LevelRow>,
    /// Pairwise extrapolants, one per consecutive pair of levels.
    pub extrapolants: Vec<f64>,
}

impl MassResult {
    pub fn x_sequence(&self) -> Vec<f64> {
        self.table.iter().map(|r| r.x).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.table.iter().map(|r| r.value).collect()
    }

    /// Rows `(x, m(x), extrapolant, error estimate)`; the extrapolant uses the
    /// row and its predecessor, the error is its change from the previous one.
    pub fn convergence_rows(&self) -> Vec<(f64, f64, Option<f64>, Option<f64>)> {
        self.table
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let e = if k >= 1 { self.extrapolants.get(k - 1).copied() } else { None };
                let err = if k >= 2 {
                    match (self.extrapolants.get(k - 1), self.extrapolants.get(k - 2)) {
                        (Some(a), Some(b)) => Some((a - b).abs()),
                        _ => None,
                    }
                } else {
                    None
                };
                (row.x, row.value, e, err)
            })
            .collect()
    }
}

/// If curvature deviations from −1 stay large and do not decay, the metric
/// has no ALH end along this sequence.
fn alh_failure(table: &[LevelRow]) -> Option<String> {
    let first = table.first()?.alh_deviation;
    let last = table.last()?.alh_deviation;
    if last > 1e-3 && last >= 0.5 * first {
        Some(format!(
            "sectional curvatures do not approach -1 (|K+1| = {first:.3e} at the first level, {last:.3e} at the last)"
        ))
    } else {
        None
    }
}

/// Mass limits for several potentials over the same level sequence.
/// `background` switches index raising, normal and area to that metric.
pub fn mass_limits_with(
    g: &MetricField,
    background: Option<&MetricField>,
    potentials: &[Expression],
    config: &MassConfig,
) -> Result<Vec<MassResult>, MassError> {
    let levels = config.validate(g)?;
    let evals = levels
        .iter()
        .map(|&s| {
            adaptive_level(g, background, potentials, s, config.order, config.max_order, config.order_tolerance)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let xs: Vec<f64> = levels.iter().map(|&s| g.chart().x_of(s)).collect();
    let mut out = Vec::with_capacity(potentials.len());
    for i in 0..potentials.len() {
        let table: Vec<LevelRow> = evals
            .iter()
            .zip(&xs)
            .map(|(e, &x)| LevelRow {
                level: e.level,
                x,
                value: e.values[i],
                noise: e.noise[i],
                order: e.order,
                alh_deviation: e.alh_deviation,
            })
            .collect();
        if let Some(reason) = alh_failure(&table) {
            return Err(MassError::Divergence { reason, table });
        }
        let values: Vec<f64> = table.iter().map(|r| r.value).collect();
        let noise: Vec<f64> = table.iter().map(|r| r.noise).collect();
        match richardson(&xs, &values, &noise, config.sigma) {
            Ok(e) => out.push(MassResult { m: e.limit, error: e.error, sigma: e.sigma, table, extrapolants: e.extrapolants }),
            Err(reason) => return Err(MassError::Divergence { reason, table }),
        }
    }
    Ok(out)
}

/// `m(V) = −lim_{x→0} ∫ W^iν_i dA`.
pub fn mass_limit(g: &MetricField, v: &Expression, config: &MassConfig) -> Result<MassResult, MassError> {
    Ok(mass_limits_with(g, None, std::slice::from_ref(v), config)?.remove(0))
}

/// Mass of a non-spherical end: the potential is normalized first, and for
/// coordinate patches the result is divided by the patch's boundary volume.
pub fn end_mass(g: &MetricField, v: &StaticPotential, config: &MassConfig) -> Result<MassResult, MassError> {
    let v = normalize_end(g, v)?;
    let mut r = mass_limit(g, &v.expr, config)?;
    if g.chart().cross_section() == CrossSection::Patch {
        let vol = boundary_volume(g)?.limit;
        r.m /= vol;
        r.error /= vol;
        for row in &mut r.table {
            row.value /= vol;
            row.noise /= vol;
        }
        for e in &mut r.extrapolants {
            *e /= vol;
        }
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyMomentum {
    pub components: Vec<f64>,
    pub norm2: f64,
    pub class: CausalClass,
    pub tolerance: f64,
    pub results: Vec<MassResult>,
}

impl EnergyMomentum {
    pub fn new(results: Vec<MassResult>, tolerance: f64) -> Self {
        let components: Vec<f64> = results.iter().map(|r| r.m).collect();
        Self {
            norm2: minkowski_norm2(&components),
            class: classify_causal(&components, tolerance),
            components,
            tolerance,
            results,
        }
    }
}

/// `m_μ = m(V_μ)` for the basis `V₀ = √(r²+1)`, `V_i = r·ωⁱ` on an AH end.
pub fn energy_momentum(g: &MetricField, config: &MassConfig, tolerance: f64) -> Result<EnergyMomentum, MassError> {
    if g.chart().cross_section() != CrossSection::Sphere {
        return Err(MassError::Config("energy-momentum needs a spherical cross-section".into()));
    }
    let basis: Vec<Expression> = ah_basis(g.chart())?.into_iter().map(|v| v.expr).collect();
    let results = mass_limits_with(g, None, &basis, config)?;
    Ok(EnergyMomentum::new(results, tolerance))
}
