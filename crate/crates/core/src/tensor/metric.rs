use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::chart::Chart;
use super::grid::GridMetric;
use super::GeometryError;
use crate::expr::{parse_with, Evaluator, Expression, Jet2};

#[inline]
pub(crate) fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + b
}

/// A region restriction beyond the chart's box, `expr > min` (for example
/// `r > r_reg` where a lapse function vanishes).
#[derive(Clone, Debug)]
pub struct Guard {
    pub expr: Expression,
    pub min: f64,
}

#[derive(Clone, Debug)]
enum Source {
    /// Upper-triangle components, row-major.
    Analytic(Vec<Expression>),
    Grid(Arc<GridMetric>),
}

/// A Riemannian metric on a chart.
#[derive(Clone, Debug)]
pub struct MetricField {
    chart: Chart,
    source: Source,
    guards: Vec<Guard>,
}

impl MetricField {
    /// From upper-triangle component expressions in row-major order
    /// (`g_00, g_01, …, g_0n, g_11, …`). Parameters must already be bound.
    pub fn analytic(chart: Chart, components: Vec<Expression>) -> Result<Self, GeometryError> {
        let n = chart.dim();
        if components.len() != n * (n + 1) / 2 {
            return Err(GeometryError::InvalidMetric(format!(
                "expected {} components, got {}",
                n * (n + 1) / 2,
                components.len()
            )));
        }
        let components = components
            .into_iter()
            .map(|c| {
                if !c.vocabulary().params.is_empty() {
                    return Err(GeometryError::InvalidMetric(format!("unbound parameters in '{c}'")));
                }
                c.with_vocabulary(chart.vocabulary().clone()).map_err(GeometryError::from)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { chart, source: Source::Analytic(components), guards: Vec::new() })
    }

    /// Parse components keyed by `(i, j)` with `i <= j`; missing entries are zero.
    pub fn from_sources(chart: Chart, sources: &BTreeMap<(usize, usize), String>) -> Result<Self, GeometryError> {
        let n = chart.dim();
        let mut comps = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                let src = sources.get(&(i, j)).map(String::as_str).unwrap_or("0");
                comps.push(parse_with(src, chart.vocabulary().clone())?);
            }
        }
        Self::analytic(chart, comps)
    }

    /// Sugar for catalog construction: `diag` gives diagonal components in
    /// coordinate order.
    pub fn diagonal(chart: Chart, diag: &[String]) -> Result<Self, GeometryError> {
        let mut m = BTreeMap::new();
        for (i, s) in diag.iter().enumerate() {
            m.insert((i, i), s.clone());
        }
        Self::from_sources(chart, &m)
    }

    pub fn grid(chart: Chart, grid: GridMetric) -> Self {
        Self { chart, source: Source::Grid(Arc::new(grid)), guards: Vec::new() }
    }

    pub fn with_guard(mut self, guard: Guard) -> Self {
        self.guards.push(guard);
        self
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn guards(&self) -> &[Guard] {
        &self.guards
    }

    /// Upper-triangle component expressions, if the metric is analytic.
    pub fn components(&self) -> Option<&[Expression]> {
        match &self.source {
            Source::Analytic(c) => Some(c),
            Source::Grid(_) => None,
        }
    }

    pub fn component(&self, i: usize, j: usize) -> Option<&Expression> {
        self.components().map(|c| &c[packed_index(self.dim(), i, j)])
    }

    /// Roundoff amplification of second derivatives: zero for closed forms,
    /// see [`GridMetric::roundoff_gain`] for sampled metrics.
    pub fn roundoff_gain(&self) -> f64 {
        match &self.source {
            Source::Analytic(_) => 0.0,
            Source::Grid(g) => g.roundoff_gain(),
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.source, Source::Grid(_))
    }

    /// Multiply every component by a constant.
    pub fn scaled(&self, c: f64) -> Result<Self, GeometryError> {
        match &self.source {
            Source::Analytic(comps) => Ok(Self {
                chart: self.chart.clone(),
                source: Source::Analytic(comps.iter().map(|e| e.scale(c)).collect()),
                guards: self.guards.clone(),
            }),
            Source::Grid(g) => Ok(Self {
                chart: self.chart.clone(),
                source: Source::Grid(Arc::new(g.scaled(c))),
                guards: self.guards.clone(),
            }),
        }
    }

    /// Same metric with a different chart (used for range changes).
    pub fn with_chart(&self, chart: Chart) -> Result<Self, GeometryError> {
        if chart.names() != self.chart.names() {
            return Err(GeometryError::InvalidChart("coordinate names differ".into()));
        }
        Ok(Self { chart, source: self.source.clone(), guards: self.guards.clone() })
    }

    /// Chart and guard checks for `p`.
    pub fn check_point(&self, p: &[f64]) -> Result<(), GeometryError> {
        self.chart.check_point(p)?;
        for g in &self.guards {
            let v = g.expr.eval_value(p)?;
            if !(v > g.min) {
                return Err(GeometryError::OutOfChart(format!("{} = {v} not above {}", g.expr, g.min)));
            }
        }
        Ok(())
    }

    /// Value, first and second derivatives of every component at `p`.
    pub fn metric_jet(&self, p: &[f64]) -> Result<MetricJet, GeometryError> {
        self.check_point(p)?;
        let n = self.dim();
        let jets: Vec<Jet2> = match &self.source {
            Source::Analytic(comps) => Evaluator::new(p, &[])?.eval_all(comps)?,
            Source::Grid(grid) => grid.jets(p)?,
        };
        MetricJet::from_component_jets(n, &jets, p)
    }

    /// Component values only.
    pub fn values(&self, p: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let mj = self.metric_jet(p)?;
        Ok(mj.g)
    }
}

/// Metric and its first two derivatives at a point, plus the inverse.
#[derive(Clone, Debug)]
pub struct MetricJet {
    n: usize,
    /// `g_ij`, row-major.
    pub g: Vec<f64>,
    /// `g^ij`, row-major.
    pub g_inv: Vec<f64>,
    /// `∂_k g_ij` at `(i*n + j)*n + k`.
    pub dg: Vec<f64>,
    /// `∂_k ∂_l g_ij` at `((i*n + j)*n + k)*n + l`.
    pub ddg: Vec<f64>,
}

impl MetricJet {
    pub fn from_component_jets(n: usize, jets: &[Jet2], p: &[f64]) -> Result<Self, GeometryError> {
        let mut g = vec![0.0; n * n];
        let mut dg = vec![0.0; n * n * n];
        let mut ddg = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                let jet = &jets[packed_index(n, i, j)];
                g[i * n + j] = jet.value();
                for k in 0..n {
                    dg[(i * n + j) * n + k] = jet.d(k);
                    for l in 0..n {
                        ddg[((i * n + j) * n + k) * n + l] = jet.dd(k, l);
                    }
                }
            }
        }
        let m = DMatrix::from_row_slice(n, n, &g);
        let chol = m
            .cholesky()
            .ok_or_else(|| GeometryError::NotPositiveDefinite(format!("{p:?}")))?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NotPositiveDefinite(format!("{p:?}")));
        }
        let inv = chol.inverse();
        let mut g_inv = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                // Symmetrize the factorization's roundoff.
                g_inv[i * n + j] = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            }
        }
        Ok(Self { n, g, g_inv, dg, ddg })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.n + j]
    }

    #[inline]
    pub fn g_inv(&self, i: usize, j: usize) -> f64 {
        self.g_inv[i * self.n + j]
    }

    #[inline]
    pub fn dg(&self, i: usize, j: usize, k: usize) -> f64 {
        self.dg[(i * self.n + j) * self.n + k]
    }

    #[inline]
    pub fn ddg(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.ddg[((i * self.n + j) * self.n + k) * self.n + l]
    }

    /// `∂_k g^ij = -g^ia ∂_k g_ab g^bj`.
    pub fn d_g_inv(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += self.g_inv(i, a) * self.dg(a, b, k) * self.g_inv(b, j);
            }
        }
        -s
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.g(i, j) * u[i] * v[j];
            }
        }
        s
    }

    /// Restriction to the coordinate sub-block `axes` (value and derivatives
    /// along those axes only).
    pub fn restrict(&self, axes: &[usize]) -> Result<MetricJet, GeometryError> {
        let m = axes.len();
        let mut jets = Vec::with_capacity(m * (m + 1) / 2);
        for a in 0..m {
            for b in a..m {
                let (i, j) = (axes[a], axes[b]);
                let grad: Vec<f64> = axes.iter().map(|&k| self.dg(i, j, k)).collect();
                let hess: Vec<Vec<f64>> =
                    axes.iter().map(|&k| axes.iter().map(|&l| self.ddg(i, j, k, l)).collect()).collect();
                jets.push(Jet2::from_parts(self.g(i, j), &grad, &hess));
            }
        }
        MetricJet::from_component_jets(m, &jets, &[])
    }
}
