use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::expr::{Evaluator, Expression};
use crate::numerics::CompensatedSum;
use crate::quadrature::cross_section_rule;
use crate::tensor::{curvature, CurvatureBundle, GeometryError, MetricField, MetricJet};

/// `W^i = D^jV (R^i_j − (R/n) δ^i_j)` with indices raised by `g`.
pub fn mass_integrand(g: &MetricField, v: &Expression, p: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let mj = g.metric_jet(p)?;
    let cb = curvature(&mj);
    let dv = v.eval_jet2_with(p, &[])?;
    let grad: Vec<f64> = (0..g.dim()).map(|k| dv.d(k)).collect();
    Ok(flux_vector(&mj, &cb, &mj, &grad))
}

/// `W^i = b^{ia} T_aj b^{jk} ∂_kV` where `T` is the traceless Ricci tensor of
/// the metric behind `cb` and `b` is the metric used to raise indices.
fn flux_vector(phys: &MetricJet, cb: &CurvatureBundle, raise: &MetricJet, grad: &[f64]) -> Vec<f64> {
    let n = phys.dim();
    let trace = cb.scalar / n as f64;
    let up: Vec<f64> = (0..n).map(|j| (0..n).map(|k| raise.g_inv(j, k) * grad[k]).sum()).collect();
    // T_aj D^jV
    let tv: Vec<f64> = (0..n)
        .map(|a| (0..n).map(|j| (cb.ricci(a, j) - trace * phys.g(a, j)) * up[j]).sum())
        .collect();
    (0..n).map(|i| (0..n).map(|a| raise.g_inv(i, a) * tv[a]).sum()).collect()
}

/// `Σ_a |b^{ca}| Σ_j (|R_aj| + (|R/n| + n·gain)·|g_aj|)·|D^jV|`: the size of
/// the terms whose cancellation produces `W^c`. `gain` is the roundoff
/// amplification of sampled-metric second derivatives (zero for closed
/// forms); each Ricci component sums `n` of them.
fn flux_bound(phys: &MetricJet, cb: &CurvatureBundle, raise: &MetricJet, grad: &[f64], c: usize, gain: f64) -> f64 {
    let n = phys.dim();
    let trace = (cb.scalar / n as f64).abs() + n as f64 * gain;
    let up: Vec<f64> = (0..n).map(|j| (0..n).map(|k| raise.g_inv(j, k) * grad[k]).sum::<f64>().abs()).collect();
    (0..n)
        .map(|a| {
            raise.g_inv(c, a).abs()
                * (0..n).map(|j| (cb.ricci(a, j).abs() + trace * phys.g(a, j).abs()) * up[j]).sum::<f64>()
        })
        .sum()
}

/// Per-node data shared by every potential at one level.
struct NodeTerms {
    /// `−w·W^iν_i·√det` for each potential.
    flux: Vec<f64>,
    /// Roundoff bound for each flux term.
    noise: Vec<f64>,
    area: f64,
    /// `max |K + 1|` over coordinate planes.
    alh: f64,
}

/// Values of `−∫ W^iν_i dA` on one level set for several potentials.
#[derive(Clone, Debug)]
pub struct LevelEvaluation {
    pub level: f64,
    pub order: usize,
    pub values: Vec<f64>,
    pub noise: Vec<f64>,
    /// `∫ |W^iν_i| dA`, the scale against which quadrature agreement is judged.
    pub magnitude: Vec<f64>,
    pub area: f64,
    pub alh_deviation: f64,
}

/// Max `|K(∂_i, ∂_j) + 1|` over coordinate planes.
pub(crate) fn coordinate_plane_deviation(mj: &MetricJet, cb: &CurvatureBundle) -> f64 {
    let n = mj.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let denom = mj.g(i, i) * mj.g(j, j) - mj.g(i, j) * mj.g(i, j);
            let num: f64 = (0..n).map(|a| mj.g(i, a) * cb.riemann(a, j, i, j)).sum();
            worst = worst.max((num / denom + 1.0).abs());
        }
    }
    worst
}

/// Evaluate all potentials on the level set `{x^asym = s}` with quadrature order `q`.
/// `background`, when given, raises indices and supplies the normal and area
/// element in place of `g`.
pub fn level_set_values(
    g: &MetricField,
    background: Option<&MetricField>,
    potentials: &[Expression],
    s: f64,
    q: usize,
) -> Result<LevelEvaluation, GeometryError> {
    let chart = g.chart();
    let n = g.dim();
    let c = chart.asymptotic();
    let sign = chart.outward_sign();
    let rule = cross_section_rule(chart, q)?;
    let gain = g.roundoff_gain();
    let cross = rule.axes.clone();
    let m = cross.len();
    let terms: Vec<Result<NodeTerms, GeometryError>> = (0..rule.len())
        .into_par_iter()
        .map(|k| {
            let p = rule.point(chart, k, s);
            let mj = g.metric_jet(&p)?;
            let cb = curvature(&mj);
            let bj = match background {
                Some(b) => Some(b.metric_jet(&p)?),
                None => None,
            };
            let raise = bj.as_ref().unwrap_or(&mj);
            let block = DMatrix::from_fn(m, m, |a, b| raise.g(cross[a], cross[b]));
            let det = block.determinant();
            if !(det > 0.0) {
                return Err(GeometryError::DegenerateLevelSet);
            }
            let da = rule.weights[k] * det.sqrt();
            let nu = sign / raise.g_inv(c, c).sqrt();
            let jets = Evaluator::new(&p, &[])?.eval_all(potentials)?;
            let mut flux = Vec::with_capacity(potentials.len());
            let mut noise = Vec::with_capacity(potentials.len());
            for jet in &jets {
                let grad: Vec<f64> = (0..n).map(|i| jet.d(i)).collect();
                let w = flux_vector(&mj, &cb, raise, &grad);
                flux.push(-w[c] * nu * da);
                noise.push(NOISE_FACTOR * f64::EPSILON * flux_bound(&mj, &cb, raise, &grad, c, gain) * nu.abs() * da);
            }
            Ok(NodeTerms { flux, noise, area: da, alh: coordinate_plane_deviation(&mj, &cb) })
        })
        .collect();
    let mut values = vec![CompensatedSum::default(); potentials.len()];
    let mut magnitude = vec![0.0; potentials.len()];
    let mut noise = vec![0.0; potentials.len()];
    let mut area = CompensatedSum::default();
    let mut alh = 0.0f64;
    for t in terms {
        let t = t?;
        for i in 0..potentials.len() {
            values[i].add(t.flux[i]);
            magnitude[i] += t.flux[i].abs();
            noise[i] += t.noise[i];
        }
        area.add(t.area);
        alh = alh.max(t.alh);
    }
    Ok(LevelEvaluation {
        level: s,
        order: q,
        values: values.iter().map(|v| v.total()).collect(),
        noise,
        magnitude,
        area: area.total(),
        alh_deviation: alh,
    })
}

/// Roundoff amplification allowed per node, relative to machine epsilon.
const NOISE_FACTOR: f64 = 4.0;

/// `−∫ W^iν_i dA` over `{x^asym = s}` at quadrature order `q`.
pub fn level_set_mass(g: &MetricField, v: &Expression, s: f64, q: usize) -> Result<f64, GeometryError> {
    Ok(level_set_values(g, None, std::slice::from_ref(v), s, q)?.values[0])
}

/// Quadrature order control: start at `order`, double while the result at
/// `q` and `q/2` disagree by more than `tolerance` relative to `∫|integrand|`
/// plus the roundoff bound.
pub fn adaptive_level(
    g: &MetricField,
    background: Option<&MetricField>,
    potentials: &[Expression],
    s: f64,
    order: usize,
    max_order: usize,
    tolerance: f64,
) -> Result<LevelEvaluation, GeometryError> {
    let mut coarse = level_set_values(g, background, potentials, s, (order / 2).max(2))?;
    let mut q = order;
    loop {
        let fine = level_set_values(g, background, potentials, s, q)?;
        let agreed = (0..potentials.len()).all(|i| {
            (fine.values[i] - coarse.values[i]).abs()
                <= tolerance * fine.magnitude[i] + fine.noise[i] + coarse.noise[i]
        });
        if agreed || 2 * q > max_order {
            return Ok(fine);
        }
        coarse = fine;
        q *= 2;
    }
}
