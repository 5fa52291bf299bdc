use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::expr::Vocabulary;

/// Which way the asymptotic coordinate runs toward the conformal boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticDirection {
    /// Boundary at `x = 0`, approached from above.
    ToZero,
    /// Boundary at `r = ∞`; the boundary-defining coordinate is `x = 1/r`.
    ToInfinity,
}

/// Declared topology of the level sets of the asymptotic coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossSection {
    /// Hyperspherical angles `(θ₁, …, θ_{n-2}, φ)`; the last one periodic.
    Sphere,
    /// Every cross-section coordinate periodic.
    Torus,
    /// A bounded coordinate patch.
    Patch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub period: Option<f64>,
}

impl Axis {
    pub fn new(name: &str, lower: f64, upper: f64) -> Self {
        Self { name: name.to_string(), lower, upper, period: None }
    }

    pub fn periodic(name: &str, start: f64, period: f64) -> Self {
        Self { name: name.to_string(), lower: start, upper: start + period, period: Some(period) }
    }
}

/// A coordinate chart with one distinguished asymptotic coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    axes: Vec<Axis>,
    asymptotic: usize,
    direction: AsymptoticDirection,
    cross_section: CrossSection,
    vocab: Arc<Vocabulary>,
}

impl Chart {
    pub fn new(
        axes: Vec<Axis>,
        asymptotic: usize,
        direction: AsymptoticDirection,
        cross_section: CrossSection,
    ) -> Result<Self, GeometryError> {
        let n = axes.len();
        if n < 2 {
            return Err(GeometryError::InvalidChart(format!("dimension {n} is too small")));
        }
        if n > crate::expr::MAX_DIM {
            return Err(GeometryError::InvalidChart(format!("dimension {n} exceeds {}", crate::expr::MAX_DIM)));
        }
        if asymptotic >= n {
            return Err(GeometryError::InvalidChart("asymptotic coordinate out of range".into()));
        }
        for (i, a) in axes.iter().enumerate() {
            if let Some(p) = a.period {
                if !(p > 0.0 && p.is_finite()) {
                    return Err(GeometryError::InvalidChart(format!("axis '{}' has non-positive period", a.name)));
                }
                if i == asymptotic {
                    return Err(GeometryError::InvalidChart("asymptotic coordinate cannot be periodic".into()));
                }
            }
            if !(a.lower < a.upper) {
                return Err(GeometryError::InvalidChart(format!("axis '{}' has an empty range", a.name)));
            }
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(GeometryError::InvalidChart(format!("duplicate axis '{}'", a.name)));
            }
        }
        if cross_section == CrossSection::Torus
            && axes.iter().enumerate().any(|(i, a)| i != asymptotic && a.period.is_none())
        {
            return Err(GeometryError::InvalidChart("toroidal cross-section needs every angle periodic".into()));
        }
        let names: Vec<&str> = axes.iter().map(|a| a.name.as_str()).collect();
        let vocab = Arc::new(Vocabulary::new(&names, &[]));
        Ok(Self { axes, asymptotic, direction, cross_section, vocab })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn names(&self) -> Vec<&str> {
        self.axes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    pub fn asymptotic(&self) -> usize {
        self.asymptotic
    }

    pub fn direction(&self) -> AsymptoticDirection {
        self.direction
    }

    pub fn cross_section(&self) -> CrossSection {
        self.cross_section
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    /// Indices of the coordinates along the cross-section.
    pub fn cross_axes(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| i != self.asymptotic).collect()
    }

    /// Boundary-defining coordinate value for a value of the asymptotic coordinate.
    pub fn x_of(&self, s: f64) -> f64 {
        match self.direction {
            AsymptoticDirection::ToZero => s,
            AsymptoticDirection::ToInfinity => 1.0 / s,
        }
    }

    /// Inverse of [`Chart::x_of`].
    pub fn s_of(&self, x: f64) -> f64 {
        self.x_of(x)
    }

    /// Sign of `ds` along the direction toward the conformal boundary.
    pub fn outward_sign(&self) -> f64 {
        match self.direction {
            AsymptoticDirection::ToZero => -1.0,
            AsymptoticDirection::ToInfinity => 1.0,
        }
    }

    /// Checks non-periodic coordinate ranges.
    pub fn check_point(&self, p: &[f64]) -> Result<(), GeometryError> {
        if p.len() != self.dim() {
            return Err(GeometryError::OutOfChart(format!("expected {} coordinates, got {}", self.dim(), p.len())));
        }
        for (a, &v) in self.axes.iter().zip(p) {
            if !v.is_finite() {
                return Err(GeometryError::OutOfChart(format!("{} = {v}", a.name)));
            }
            if a.period.is_none() && (v < a.lower || v > a.upper) {
                return Err(GeometryError::OutOfChart(format!(
                    "{} = {v} outside [{}, {}]",
                    a.name, a.lower, a.upper
                )));
            }
        }
        Ok(())
    }

    /// Same chart with axis ranges replaced.
    pub fn with_axes(&self, axes: Vec<Axis>) -> Result<Self, GeometryError> {
        Self::new(axes, self.asymptotic, self.direction, self.cross_section)
    }
}
