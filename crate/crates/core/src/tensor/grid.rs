//! Metrics sampled on a uniform rectilinear grid, differentiated with
//! fourth-order finite differences.

use std::path::Path;

use super::chart::Chart;
use super::metric::MetricField;
use super::GeometryError;
use crate::expr::Jet2;

/// Finite-difference weights for derivatives `0..=order` at `z` from samples
/// at `nodes` (Fornberg's recursion). `w[k][j]` multiplies `f(nodes[j])`.
pub fn fornberg_weights(z: f64, nodes: &[f64], order: usize) -> Vec<Vec<f64>> {
    let np = nodes.len();
    let mut c = vec![vec![0.0; np]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..np {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis {
    pub start: f64,
    pub step: f64,
    pub count: usize,
    pub periodic: bool,
}

impl GridAxis {
    pub fn coord(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    fn wrap(&self, i: isize) -> usize {
        let n = self.count as isize;
        (((i % n) + n) % n) as usize
    }

    /// Stencil (node indices, weights for d/dx, weights for d²/dx²) at node `i`.
    fn stencil(&self, i: usize) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
        let n = self.count;
        let offsets: Vec<isize> = if self.periodic || (i >= 2 && i + 2 < n) {
            (-2..=2).collect()
        } else if i < 2 {
            (0..6).map(|k| k - i as isize).collect()
        } else {
            (0..6).map(|k| (n as isize - 6 + k) - i as isize).collect()
        };
        let xs: Vec<f64> = offsets.iter().map(|&o| o as f64 * self.step).collect();
        let w = fornberg_weights(0.0, &xs, 2);
        let idx: Vec<usize> = offsets.iter().map(|&o| self.wrap(i as isize + o)).collect();
        let mut d1 = w[1].clone();
        // A 6-point one-sided window is only needed for the second derivative;
        // the first derivative uses the 5 points nearest the node.
        if offsets.len() == 6 {
            let far = if i < 2 { 5 } else { 0 };
            let keep: Vec<f64> = xs.iter().enumerate().filter(|(k, _)| *k != far).map(|(_, x)| *x).collect();
            let w5 = fornberg_weights(0.0, &keep, 1);
            let mut it = w5[1].iter();
            d1 = (0..6).map(|k| if k == far { 0.0 } else { *it.next().unwrap() }).collect();
        }
        (idx, d1, w[2].clone())
    }

    /// Interpolation nodes and weights for an arbitrary coordinate value.
    fn interpolation(&self, v: f64) -> Result<Vec<(usize, f64)>, GeometryError> {
        let mut t = (v - self.start) / self.step;
        if self.periodic {
            let n = self.count as f64;
            t = t.rem_euclid(n);
        }
        let nearest = t.round();
        if (t - nearest).abs() < 1e-9 {
            let i = if self.periodic { self.wrap(nearest as isize) } else { nearest as usize };
            if !self.periodic && nearest as isize >= self.count as isize {
                return Err(GeometryError::OutOfChart(format!("{v} beyond grid")));
            }
            return Ok(vec![(i, 1.0)]);
        }
        let base = t.floor() as isize;
        let mut first = base - 1;
        if !self.periodic {
            if t < 0.0 || t > (self.count - 1) as f64 {
                return Err(GeometryError::OutOfChart(format!("{v} outside grid")));
            }
            first = first.clamp(0, self.count as isize - 4);
        }
        let idx: Vec<isize> = (first..first + 4).collect();
        let xs: Vec<f64> = idx.iter().map(|&k| k as f64).collect();
        let w = fornberg_weights(t, &xs, 0);
        Ok(idx.iter().zip(&w[0]).map(|(&k, &wk)| (self.wrap(k), wk)).collect())
    }
}

/// Metric components sampled on a grid (upper triangle per node, row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct GridMetric {
    axes: Vec<GridAxis>,
    values: Vec<f64>,
}

impl GridMetric {
    fn ncomp(&self) -> usize {
        let n = self.axes.len();
        n * (n + 1) / 2
    }

    pub fn new(axes: Vec<GridAxis>, values: Vec<f64>) -> Result<Self, GeometryError> {
        let n = axes.len();
        let nodes: usize = axes.iter().map(|a| a.count).product();
        if values.len() != nodes * n * (n + 1) / 2 {
            return Err(GeometryError::Grid("value count does not match grid size".into()));
        }
        for a in &axes {
            let min = if a.periodic { 5 } else { 6 };
            if a.count < min {
                return Err(GeometryError::Grid(format!("axis needs at least {min} nodes")));
            }
            if !(a.step > 0.0) {
                return Err(GeometryError::Grid("non-positive grid step".into()));
            }
        }
        Ok(Self { axes, values })
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    /// Sample an analytic metric. Periodic chart axes are covered by
    /// `count` nodes over one period.
    pub fn sample(metric: &MetricField, axes: Vec<GridAxis>) -> Result<Self, GeometryError> {
        let n = metric.dim();
        let total: usize = axes.iter().map(|a| a.count).product();
        let mut values = Vec::with_capacity(total * n * (n + 1) / 2);
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            let p: Vec<f64> = idx.iter().zip(&axes).map(|(&i, a)| a.coord(i)).collect();
            let g = metric.values(&p)?;
            for i in 0..n {
                for j in i..n {
                    values.push(g[i * n + j]);
                }
            }
            // last coordinate fastest
            for k in (0..n).rev() {
                idx[k] += 1;
                if idx[k] < axes[k].count {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self::new(axes, values)
    }

    /// Bound on the roundoff of a second difference relative to the sampled
    /// values, `Σ|w|/h²` for the finest axis.
    pub fn roundoff_gain(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| {
                let xs: Vec<f64> = (-2..=2).map(|o| o as f64 * a.step).collect();
                fornberg_weights(0.0, &xs, 2)[2].iter().map(|w| w.abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { axes: self.axes.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    fn node_offset(&self, idx: &[usize]) -> usize {
        let mut off = 0;
        for (a, &i) in self.axes.iter().zip(idx) {
            off = off * a.count + i;
        }
        off * self.ncomp()
    }

    fn sample_at(&self, idx: &[usize], comp: usize) -> f64 {
        self.values[self.node_offset(idx) + comp]
    }

    /// Finite-difference jets of every component at a grid node.
    fn node_jets(&self, node: &[usize]) -> Vec<Jet2> {
        let n = self.axes.len();
        let stencils: Vec<_> = (0..n).map(|k| self.axes[k].stencil(node[k])).collect();
        (0..self.ncomp())
            .map(|c| {
                let value = self.sample_at(node, c);
                let mut grad = vec![0.0; n];
                let mut hess = vec![vec![0.0; n]; n];
                let mut q = node.to_vec();
                for k in 0..n {
                    let (ref idx, ref d1, ref d2) = stencils[k];
                    let (mut g1, mut g2) = (0.0, 0.0);
                    for (s, &ii) in idx.iter().enumerate() {
                        q[k] = ii;
                        let f = self.sample_at(&q, c);
                        g1 += d1[s] * f;
                        g2 += d2[s] * f;
                    }
                    q[k] = node[k];
                    grad[k] = g1;
                    hess[k][k] = g2;
                }
                for k in 0..n {
                    for l in (k + 1)..n {
                        let (ref ik, ref wk, _) = stencils[k];
                        let (ref il, ref wl, _) = stencils[l];
                        let mut acc = 0.0;
                        for (a, &ia) in ik.iter().enumerate() {
                            if wk[a] == 0.0 {
                                continue;
                            }
                            q[k] = ia;
                            for (b, &ib) in il.iter().enumerate() {
                                if wl[b] == 0.0 {
                                    continue;
                                }
                                q[l] = ib;
                                acc += wk[a] * wl[b] * self.sample_at(&q, c);
                            }
                        }
                        q[k] = node[k];
                        q[l] = node[l];
                        hess[k][l] = acc;
                        hess[l][k] = acc;
                    }
                }
                Jet2::from_parts(value, &grad, &hess)
            })
            .collect()
    }

    /// Component jets at an arbitrary point; off-node points interpolate the
    /// nodal jets with cubic Lagrange weights per axis.
    pub fn jets(&self, p: &[f64]) -> Result<Vec<Jet2>, GeometryError> {
        let n = self.axes.len();
        let per_axis: Vec<Vec<(usize, f64)>> =
            self.axes.iter().zip(p).map(|(a, &v)| a.interpolation(v)).collect::<Result<_, _>>()?;
        let mut out: Option<Vec<Jet2>> = None;
        let mut counter = vec![0usize; n];
        loop {
            let node: Vec<usize> = (0..n).map(|k| per_axis[k][counter[k]].0).collect();
            let w: f64 = (0..n).map(|k| per_axis[k][counter[k]].1).product();
            let jets = self.node_jets(&node);
            out = Some(match out {
                None => jets.into_iter().map(|j| j.scale(w)).collect(),
                Some(acc) => acc.into_iter().zip(jets).map(|(a, j)| a + j.scale(w)).collect(),
            });
            let mut k = n;
            loop {
                if k == 0 {
                    return Ok(out.unwrap());
                }
                k -= 1;
                counter[k] += 1;
                if counter[k] < per_axis[k].len() {
                    break;
                }
                counter[k] = 0;
            }
        }
    }

    /// Header names: coordinates then `g_<a>_<b>` for the upper triangle.
    pub fn header(chart: &Chart) -> Vec<String> {
        let names = chart.names();
        let mut h: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        for i in 0..names.len() {
            for j in i..names.len() {
                h.push(format!("g_{}_{}", names[i], names[j]));
            }
        }
        h
    }

    pub fn write_csv(&self, chart: &Chart, path: &Path) -> Result<(), GeometryError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| GeometryError::Grid(e.to_string()))?;
        w.write_record(Self::header(chart)).map_err(|e| GeometryError::Grid(e.to_string()))?;
        let n = self.axes.len();
        let total: usize = self.axes.iter().map(|a| a.count).product();
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            let mut row: Vec<String> = idx.iter().zip(&self.axes).map(|(&i, a)| format!("{}", a.coord(i))).collect();
            let off = self.node_offset(&idx);
            row.extend(self.values[off..off + self.ncomp()].iter().map(|v| format!("{v}")));
            w.write_record(&row).map_err(|e| GeometryError::Grid(e.to_string()))?;
            for k in (0..n).rev() {
                idx[k] += 1;
                if idx[k] < self.axes[k].count {
                    break;
                }
                idx[k] = 0;
            }
        }
        w.flush().map_err(|e| GeometryError::Grid(e.to_string()))?;
        Ok(())
    }

    /// Read a delimited grid file: header row, one row per node, last
    /// coordinate varying fastest.
    pub fn read_csv(chart: &Chart, path: &Path) -> Result<Self, GeometryError> {
        let ctx = |line: u64, msg: String| GeometryError::Grid(format!("{}:{line}: {msg}", path.display()));
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| GeometryError::Grid(format!("{}: {e}", path.display())))?;
        let expected = Self::header(chart);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| ctx(1, e.to_string()))?
            .iter()
            .map(|s| s.to_string())
            .collect();
        if header != expected {
            return Err(ctx(1, format!("header {header:?} does not match expected {expected:?}")));
        }
        let n = chart.dim();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let line = k as u64 + 2;
            let rec = rec.map_err(|e| ctx(line, e.to_string()))?;
            let row: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| ctx(line, format!("not a number: '{s}'"))))
                .collect::<Result<_, _>>()?;
            if row.len() != expected.len() {
                return Err(ctx(line, "wrong number of columns".into()));
            }
            rows.push(row);
        }
        // Axis values in file order.
        let mut axes = Vec::with_capacity(n);
        for k in 0..n {
            let mut vals: Vec<f64> = Vec::new();
            for r in &rows {
                if !vals.iter().any(|v| (*v - r[k]).abs() <= 1e-12 * (1.0 + v.abs())) {
                    vals.push(r[k]);
                }
            }
            vals.sort_by(|a, b| a.total_cmp(b));
            let count = vals.len();
            if count < 2 {
                return Err(ctx(1, format!("axis '{}' has fewer than two nodes", chart.axis(k).name)));
            }
            let step = (vals[count - 1] - vals[0]) / (count - 1) as f64;
            for (i, v) in vals.iter().enumerate() {
                if (v - (vals[0] + step * i as f64)).abs() > 1e-9 * step.max(1e-300) * (1.0 + i as f64) {
                    return Err(ctx(1, format!("axis '{}' is not uniformly spaced", chart.axis(k).name)));
                }
            }
            let periodic = match chart.axis(k).period {
                Some(p) => {
                    if ((count as f64) * step - p).abs() > 1e-9 * p {
                        return Err(ctx(1, format!("periodic axis '{}' must cover exactly one period", chart.axis(k).name)));
                    }
                    true
                }
                None => false,
            };
            axes.push(GridAxis { start: vals[0], step, count, periodic });
        }
        let total: usize = axes.iter().map(|a| a.count).product();
        if total != rows.len() {
            return Err(ctx(1, format!("expected {total} rows for a full grid, found {}", rows.len())));
        }
        let mut idx = vec![0usize; n];
        let mut values = Vec::with_capacity(total * n * (n + 1) / 2);
        for (k, r) in rows.iter().enumerate() {
            for d in 0..n {
                let want = axes[d].coord(idx[d]);
                if (r[d] - want).abs() > 1e-9 * axes[d].step {
                    return Err(ctx(k as u64 + 2, "rows are not in row-major order (last coordinate fastest)".into()));
                }
            }
            values.extend_from_slice(&r[n..]);
            for d in (0..n).rev() {
                idx[d] += 1;
                if idx[d] < axes[d].count {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self::new(axes, values)
    }
}
