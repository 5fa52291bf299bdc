//! Reference metrics, their static potentials, boosts and end normalization.

mod catalog;
mod isometry;
mod normalize;

pub use catalog::{
    ah_basis, birmingham_background, birmingham_with_torus, hyperbolic_background, polar_chart, regular_radius,
    sphere_angle_names, static_residual, unit_sphere_area,
};
pub use isometry::{boost_isometry, boost_isometry_on, pullback_metric, IsometryMap};
pub use normalize::{boundary_volume, limit_x_times, normalize_end};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_with, ExprError, Expression};
use crate::tensor::{Chart, GeometryError, MetricField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackgroundError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{0}")]
    InvalidParameter(String),
    #[error("normalization convention is the AH basis")]
    AhEnd,
    #[error("limit did not converge: {0}")]
    Divergence(String),
    #[error("vanishing or non-finite limit {0}")]
    DegenerateLimit(f64),
}

impl From<ExprError> for BackgroundError {
    fn from(e: ExprError) -> Self {
        BackgroundError::Geometry(e.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndType {
    AhSpherical,
    Toroidal,
    HigherGenus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Index `μ` in the basis `V₀, …, Vₙ`.
    AhBasis(usize),
    /// `lim x·V = 1` after rescaling by `scale`.
    AlhNormalized { scale: f64 },
}

#[derive(Clone, Debug)]
pub struct StaticPotential {
    pub label: String,
    pub expr: Expression,
    pub tag: Normalization,
}

/// Boundary metric `ḣ` on the cross-section coordinates, its constant
/// sectional curvature and volume.
#[derive(Clone, Debug)]
pub struct BoundaryMetric {
    /// Upper-triangle components over the cross axes, written in the chart's
    /// vocabulary.
    pub components: Vec<Expression>,
    pub curvature: f64,
    pub volume: f64,
}

impl BoundaryMetric {
    fn diagonal(chart: &Chart, diag: &[String], curvature: f64, volume: f64) -> Result<Self, BackgroundError> {
        let m = diag.len();
        let mut components = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            for j in i..m {
                let src = if i == j { diag[i].as_str() } else { "0" };
                components.push(parse_with(src, chart.vocabulary().clone())?);
            }
        }
        Ok(Self { components, curvature, volume })
    }
}

/// A catalog entry: the metric, the background it asymptotes to and the
/// background's static potentials.
#[derive(Clone, Debug)]
pub struct BackgroundModel {
    pub name: String,
    pub params: Vec<(String, f64)>,
    pub metric: MetricField,
    /// The background `𝑚̊g` (the same family with zero mass parameter); the
    /// potentials solve the static equations on it.
    pub reference: MetricField,
    pub potentials: Vec<StaticPotential>,
    pub end_type: EndType,
    pub boundary: BoundaryMetric,
}
