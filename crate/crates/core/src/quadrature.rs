//! Product quadrature rules over the cross-section coordinates of a chart.

use std::f64::consts::PI;

use crate::numerics::gauss_legendre;
use crate::tensor::{AsymptoticDirection, Chart, CrossSection, GeometryError};

/// Nodes and coordinate weights over the cross-section axes. Integrating a
/// density `f` against the rule gives `∫ f dy¹…dy^{n-1}`; the area element is
/// supplied by the caller.
#[derive(Clone, Debug)]
pub struct CrossSectionRule {
    pub axes: Vec<usize>,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl CrossSectionRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Full chart point with the asymptotic coordinate set to `s`.
    pub fn point(&self, chart: &Chart, node: usize, s: f64) -> Vec<f64> {
        let mut p = vec![0.0; chart.dim()];
        p[chart.asymptotic()] = s;
        for (k, &a) in self.axes.iter().enumerate() {
            p[a] = self.nodes[node][k];
        }
        p
    }
}

/// One-dimensional rule along a single axis.
fn axis_rule(chart: &Chart, axis: usize, position: usize, q: usize) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    let a = chart.axis(axis);
    match (chart.cross_section(), a.period) {
        (CrossSection::Sphere, Some(p)) => Ok(trapezoid(a.lower, p, 2 * q)),
        (CrossSection::Sphere, None) => {
            // Polar angle θ_k carries sin^m θ_k in the area element. For odd m
            // the rule in cos θ absorbs one sine exactly.
            let m = chart.dim() - 2 - position;
            let (x, w) = gauss_legendre(q);
            if m % 2 == 1 {
                let theta: Vec<f64> = x.iter().map(|x| (-x).acos()).collect();
                let w = theta.iter().zip(&w).map(|(t, w)| w / t.sin()).collect();
                Ok((theta, w))
            } else {
                Ok(map_interval(&x, &w, 0.0, PI))
            }
        }
        (_, Some(p)) => Ok(trapezoid(a.lower, p, q)),
        (CrossSection::Torus, None) => {
            Err(GeometryError::InvalidChart(format!("torus cross-section axis '{}' is not periodic", a.name)))
        }
        (CrossSection::Patch, None) => {
            if !(a.lower.is_finite() && a.upper.is_finite()) {
                return Err(GeometryError::InvalidChart(format!("patch axis '{}' must be bounded", a.name)));
            }
            let (x, w) = gauss_legendre(q);
            Ok(map_interval(&x, &w, a.lower, a.upper))
        }
    }
}

fn trapezoid(start: f64, period: f64, count: usize) -> (Vec<f64>, Vec<f64>) {
    let h = period / count as f64;
    ((0..count).map(|j| start + (j as f64 + 0.5) * h).collect(), vec![h; count])
}

fn map_interval(x: &[f64], w: &[f64], a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let half = 0.5 * (b - a);
    (x.iter().map(|x| a + half * (x + 1.0)).collect(), w.iter().map(|w| w * half).collect())
}

/// Tensor-product rule with order `q` per axis (`2q` for the azimuth of a sphere).
pub fn cross_section_rule(chart: &Chart, q: usize) -> Result<CrossSectionRule, GeometryError> {
    let axes = chart.cross_axes();
    let rules = axes
        .iter()
        .enumerate()
        .map(|(pos, &a)| axis_rule(chart, a, pos, q))
        .collect::<Result<Vec<_>, _>>()?;
    let mut nodes = vec![Vec::new()];
    let mut weights = vec![1.0];
    for (x, w) in &rules {
        let mut n2 = Vec::with_capacity(nodes.len() * x.len());
        let mut w2 = Vec::with_capacity(nodes.len() * x.len());
        for (node, wt) in nodes.iter().zip(&weights) {
            for (xi, wi) in x.iter().zip(w) {
                let mut nn = node.clone();
                nn.push(*xi);
                n2.push(nn);
                w2.push(wt * wi);
            }
        }
        nodes = n2;
        weights = w2;
    }
    Ok(CrossSectionRule { axes, nodes, weights })
}

/// Midpoint of the cross-section coordinate box (used as a reference point).
pub fn cross_section_center(chart: &Chart) -> Vec<f64> {
    chart
        .cross_axes()
        .iter()
        .map(|&a| {
            let ax = chart.axis(a);
            0.5 * (ax.lower + ax.upper)
        })
        .collect()
}

/// Default level values of the asymptotic coordinate: `r = 20·2^k` toward
/// infinity, `x = 0.05·2^{-k}` toward zero, four levels.
pub fn default_levels(chart: &Chart) -> Vec<f64> {
    let start = match chart.direction() {
        AsymptoticDirection::ToInfinity => 20.0,
        AsymptoticDirection::ToZero => 0.05,
    };
    geometric_levels(chart, start, 2.0, 4)
}

/// `count` levels starting at `start` and moving toward the boundary by `ratio`.
pub fn geometric_levels(chart: &Chart, start: f64, ratio: f64, count: usize) -> Vec<f64> {
    let x0 = chart.x_of(start);
    (0..count).map(|k| chart.s_of(x0 / ratio.powi(k as i32))).collect()
}
