use super::catalog::polar_chart;
use super::BackgroundError;
use crate::expr::{Evaluator, Expression, Func, Jet2};
use crate::tensor::{Chart, CrossSection, GeometryError, Guard, MetricField};

/// A chart self-map together with the Lorentz matrix it induces on the static
/// potential basis: `V_μ ∘ Φ = Λ_μ^ν V_ν`.
#[derive(Clone, Debug)]
pub struct IsometryMap {
    chart: Chart,
    outputs: Vec<Expression>,
    /// `(n+1)×(n+1)`, row-major.
    lorentz: Vec<f64>,
}

impl IsometryMap {
    pub fn new(chart: Chart, outputs: Vec<Expression>, lorentz: Vec<f64>) -> Result<Self, BackgroundError> {
        let n = chart.dim();
        if outputs.len() != n || lorentz.len() != (n + 1) * (n + 1) {
            return Err(BackgroundError::InvalidParameter(format!(
                "isometry needs {n} outputs and a {}x{} matrix",
                n + 1,
                n + 1
            )));
        }
        let outputs = outputs
            .into_iter()
            .map(|e| e.with_vocabulary(chart.vocabulary().clone()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { chart, outputs, lorentz })
    }

    pub fn identity(chart: &Chart) -> Self {
        let n = chart.dim();
        let outputs = (0..n).map(|i| Expression::coord(i, chart.vocabulary().clone())).collect();
        let mut lorentz = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..=n {
            lorentz[i * (n + 1) + i] = 1.0;
        }
        Self { chart: chart.clone(), outputs, lorentz }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn outputs(&self) -> &[Expression] {
        &self.outputs
    }

    pub fn lorentz(&self) -> &[f64] {
        &self.lorentz
    }

    pub fn lorentz_at(&self, mu: usize, nu: usize) -> f64 {
        self.lorentz[mu * (self.chart.dim() + 1) + nu]
    }

    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>, GeometryError> {
        Ok(self.jets(p)?.iter().map(|j| j.value()).collect())
    }

    pub fn jets(&self, p: &[f64]) -> Result<Vec<Jet2>, GeometryError> {
        Ok(Evaluator::new(p, &[])?.eval_all(&self.outputs)?)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &IsometryMap) -> Result<IsometryMap, BackgroundError> {
        if self.chart.vocabulary() != inner.chart.vocabulary() {
            return Err(BackgroundError::InvalidParameter("isometries live on different charts".into()));
        }
        let outputs = self
            .outputs
            .iter()
            .map(|e| e.substitute(&inner.outputs))
            .collect::<Result<Vec<_>, _>>()?;
        let m = self.chart.dim() + 1;
        let mut lorentz = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                lorentz[i * m + j] = (0..m).map(|k| self.lorentz[i * m + k] * inner.lorentz[k * m + j]).sum();
            }
        }
        Ok(IsometryMap { chart: self.chart.clone(), outputs, lorentz })
    }

    /// `max |ΛᵀηΛ − η|` with `η = diag(−1, 1, …, 1)`.
    pub fn lorentz_defect(&self) -> f64 {
        let m = self.chart.dim() + 1;
        let eta = |i: usize| if i == 0 { -1.0 } else { 1.0 };
        let mut worst = 0.0f64;
        for a in 0..m {
            for b in 0..m {
                let s: f64 = (0..m).map(|k| self.lorentz[k * m + a] * eta(k) * self.lorentz[k * m + b]).sum();
                let target = if a == b { eta(a) } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    /// Energy-momentum of `Φ*g` predicted from that of `g`.
    ///
    /// Naturality gives `m(V; Φ*g) = m(V∘Φ⁻¹; g)`, so the lower-index
    /// components transform with `Λ⁻¹ = ηΛᵀη`. Equivalently `Λ` acts on the
    /// raised vector `m^μ = η^{μν}m_ν`.
    pub fn transform_energy_momentum(&self, m: &[f64]) -> Vec<f64> {
        let dim = self.chart.dim() + 1;
        let eta = |i: usize| if i == 0 { -1.0 } else { 1.0 };
        (0..dim)
            .map(|mu| (0..dim).map(|nu| eta(mu) * self.lorentz[nu * dim + mu] * eta(nu) * m[nu]).sum())
            .collect()
    }
}

/// Boost of rapidity `beta` in the `(0, axis)` plane on the standard polar
/// chart of hyperbolic `n`-space.
pub fn boost_isometry(n: usize, axis: usize, beta: f64) -> Result<IsometryMap, BackgroundError> {
    boost_isometry_on(&polar_chart(n, 0.0)?, axis, beta)
}

/// Boost on any polar chart laid out as `(r, θ₁, …, θ_{n-2}, φ)`.
///
/// Embeds into the hyperboloid `y⁰ = √(1+r²)`, `yⁱ = r·ωⁱ`, boosts, and
/// reads the polar coordinates back off the boosted point.
pub fn boost_isometry_on(chart: &Chart, axis: usize, beta: f64) -> Result<IsometryMap, BackgroundError> {
    let n = chart.dim();
    if chart.cross_section() != CrossSection::Sphere || chart.asymptotic() != 0 {
        return Err(BackgroundError::InvalidParameter("boosts need a polar chart (r, angles)".into()));
    }
    if !(1..=n).contains(&axis) {
        return Err(BackgroundError::InvalidParameter(format!("boost axis {axis} outside 1..={n}")));
    }
    if !beta.is_finite() {
        return Err(BackgroundError::InvalidParameter(format!("rapidity {beta}")));
    }
    let (ch, sh) = (beta.cosh(), beta.sinh());
    let m = n + 1;
    let mut lorentz = vec![0.0; m * m];
    for i in 0..m {
        lorentz[i * m + i] = 1.0;
    }
    lorentz[0] = ch;
    lorentz[axis * m + axis] = ch;
    lorentz[axis] = sh;
    lorentz[axis * m] = sh;
    if beta == 0.0 {
        let id = IsometryMap::identity(chart);
        return Ok(IsometryMap { lorentz, ..id });
    }

    let vocab = chart.vocabulary().clone();
    let c = |v: f64| Expression::constant(v, vocab.clone());
    let coord = |i: usize| Expression::coord(i, vocab.clone());
    let r = coord(0);
    let sines: Vec<Expression> = (1..n).map(|k| coord(k).apply(Func::Sin)).collect();
    let cosines: Vec<Expression> = (1..n).map(|k| coord(k).apply(Func::Cos)).collect();
    // prefix[k] = r·sinθ₁⋯sinθ_k, so prefix[0] = r.
    let mut prefix = vec![r.clone()];
    for s in &sines {
        let last = prefix.last().unwrap().mul(s);
        prefix.push(last);
    }
    // y[1..=n], index 0 unused.
    let mut y = vec![c(0.0)];
    for k in 1..n {
        y.push(prefix[k - 1].mul(&cosines[k - 1]));
    }
    y.push(prefix[n - 1].clone());
    let y0 = r.mul(&r).add(&c(1.0)).apply(Func::Sqrt);

    let mut big_y = y.clone();
    big_y[axis] = y0.scale(sh).add(&y[axis].scale(ch));

    let mut outputs = Vec::with_capacity(n);
    let sum_sq = |from: usize| {
        let mut s = c(0.0);
        for yj in &big_y[from..] {
            s = s.add(&yj.mul(yj));
        }
        s
    };
    outputs.push(sum_sq(1).apply(Func::Sqrt));
    for k in 1..n - 1 {
        if axis < k {
            outputs.push(coord(k));
            continue;
        }
        // Length of (Y_{k+1}, …, Y_n); these are unboosted when axis ≤ k.
        let tail = if axis <= k { prefix[k].clone() } else { sum_sq(k + 1).apply(Func::Sqrt) };
        outputs.push(tail.atan2(&big_y[k]));
    }
    if axis < n - 1 {
        outputs.push(coord(n - 1));
    } else {
        outputs.push(big_y[n].atan2(&big_y[n - 1]));
    }
    IsometryMap::new(chart.clone(), outputs, lorentz)
}

/// `(Φ*g)_ij = ∂_iΦᵃ ∂_jΦᵇ g_ab∘Φ`.
pub fn pullback_metric(g: &MetricField, phi: &IsometryMap) -> Result<MetricField, BackgroundError> {
    let comps = g
        .components()
        .ok_or_else(|| BackgroundError::InvalidParameter("pullback needs an analytic metric".into()))?;
    if g.chart().vocabulary() != phi.chart().vocabulary() {
        return Err(BackgroundError::InvalidParameter("metric and isometry use different coordinates".into()));
    }
    let n = g.dim();
    let out = phi.outputs();
    let jac: Vec<Vec<Expression>> = out.iter().map(|e| (0..n).map(|i| e.derivative(i)).collect()).collect();
    let moved: Vec<Expression> = comps.iter().map(|e| e.substitute(out)).collect::<Result<_, _>>()?;
    let gab = |a: usize, b: usize| &moved[if a <= b { a * n - a * (a + 1) / 2 + b } else { b * n - b * (b + 1) / 2 + a }];
    let zero = Expression::constant(0.0, g.chart().vocabulary().clone());
    let mut pulled = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let mut s = zero.clone();
            for a in 0..n {
                if jac[a][i].is_zero() {
                    continue;
                }
                for b in 0..n {
                    if jac[b][j].is_zero() || gab(a, b).is_zero() {
                        continue;
                    }
                    s = s.add(&jac[a][i].mul(&jac[b][j]).mul(gab(a, b)));
                }
            }
            pulled.push(s);
        }
    }
    let mut result = MetricField::analytic(g.chart().clone(), pulled)?;
    let asym = g.chart().asymptotic();
    let lower = g.chart().axis(asym).lower;
    if lower.is_finite() {
        result = result.with_guard(Guard { expr: out[asym].clone(), min: lower });
    }
    for guard in g.guards() {
        result = result.with_guard(Guard { expr: guard.expr.substitute(out)?, min: guard.min });
    }
    Ok(result)
}
