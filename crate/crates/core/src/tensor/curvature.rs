use super::metric::{MetricField, MetricJet};
use super::GeometryError;
use crate::expr::{Expression, Jet2};

/// Levi-Civita connection and curvature at a point.
#[derive(Clone, Debug)]
pub struct CurvatureBundle {
    n: usize,
    /// `Γ^k_ij` at `(k*n + i)*n + j`.
    pub christoffel: Vec<f64>,
    /// `R^a_bcd` at `((a*n + b)*n + c)*n + d`, with `R(∂_c, ∂_d)∂_b = R^a_bcd ∂_a`.
    pub riemann: Vec<f64>,
    /// `R_ij`, row-major.
    pub ricci: Vec<f64>,
    pub scalar: f64,
}

impl CurvatureBundle {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.christoffel[(k * self.n + i) * self.n + j]
    }

    #[inline]
    pub fn ricci(&self, i: usize, j: usize) -> f64 {
        self.ricci[i * self.n + j]
    }

    #[inline]
    pub fn riemann(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.riemann[((a * self.n + b) * self.n + c) * self.n + d]
    }

    /// Mixed Ricci `R^i_j = g^ik R_kj`.
    pub fn ricci_mixed(&self, mj: &MetricJet) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| mj.g_inv(i, k) * self.ricci(k, j)).sum();
            }
        }
        out
    }
}

/// Christoffel symbols, Riemann, Ricci and scalar curvature.
pub fn curvature(mj: &MetricJet) -> CurvatureBundle {
    let n = mj.dim();
    let idx3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;

    // First kind: Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij), and its derivatives.
    let mut first = vec![0.0; n * n * n];
    let mut d_first = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                first[idx3(l, i, j)] = 0.5 * (mj.dg(j, l, i) + mj.dg(i, l, j) - mj.dg(i, j, l));
                for m in 0..n {
                    d_first[idx3(l, i, j) * n + m] =
                        0.5 * (mj.ddg(j, l, i, m) + mj.ddg(i, l, j, m) - mj.ddg(i, j, l, m));
                }
            }
        }
    }
    let mut d_inv = vec![0.0; n * n * n];
    for k in 0..n {
        for l in 0..n {
            for m in 0..n {
                d_inv[idx3(k, l, m)] = mj.d_g_inv(k, l, m);
            }
        }
    }

    let mut gamma = vec![0.0; n * n * n];
    // ∂_m Γ^k_ij at idx3(k,i,j)*n + m
    let mut d_gamma = vec![0.0; n * n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += mj.g_inv(k, l) * first[idx3(l, i, j)];
                }
                gamma[idx3(k, i, j)] = s;
                for m in 0..n {
                    let mut ds = 0.0;
                    for l in 0..n {
                        ds += d_inv[idx3(k, l, m)] * first[idx3(l, i, j)]
                            + mj.g_inv(k, l) * d_first[idx3(l, i, j) * n + m];
                    }
                    d_gamma[idx3(k, i, j) * n + m] = ds;
                }
            }
        }
    }

    // R^a_bcd = ∂_c Γ^a_db − ∂_d Γ^a_cb + Γ^a_ce Γ^e_db − Γ^a_de Γ^e_cb
    let mut riemann = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut s = d_gamma[idx3(a, d, b) * n + c] - d_gamma[idx3(a, c, b) * n + d];
                    for e in 0..n {
                        s += gamma[idx3(a, c, e)] * gamma[idx3(e, d, b)] - gamma[idx3(a, d, e)] * gamma[idx3(e, c, b)];
                    }
                    riemann[idx3(a, b, c) * n + d] = s;
                }
            }
        }
    }

    let mut ricci = vec![0.0; n * n];
    for b in 0..n {
        for d in 0..n {
            ricci[b * n + d] = (0..n).map(|a| riemann[idx3(a, b, a) * n + d]).sum();
        }
    }
    let mut scalar = 0.0;
    for i in 0..n {
        for j in 0..n {
            scalar += mj.g_inv(i, j) * ricci[i * n + j];
        }
    }
    CurvatureBundle { n, christoffel: gamma, riemann, ricci, scalar }
}

/// `K(u, v) = ⟨R(u,v)v, u⟩ / (|u|²|v|² − ⟨u,v⟩²)`.
pub fn sectional_curvature(mj: &MetricJet, cb: &CurvatureBundle, u: &[f64], v: &[f64]) -> Result<f64, GeometryError> {
    let n = mj.dim();
    let uu = mj.inner(u, u);
    let vv = mj.inner(v, v);
    let uv = mj.inner(u, v);
    let denom = uu * vv - uv * uv;
    if !(denom > 1e-14 * uu * vv) {
        return Err(GeometryError::DegeneratePlane);
    }
    // R(u,v)v = R^a_bcd v^b u^c v^d ∂_a
    let mut num = 0.0;
    for a in 0..n {
        let mut w = 0.0;
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    w += cb.riemann(a, b, c, d) * v[b] * u[c] * v[d];
                }
            }
        }
        for e in 0..n {
            num += mj.g(a, e) * w * u[e];
        }
    }
    Ok(num / denom)
}

/// `D_i D_j V = ∂_i ∂_j V − Γ^k_ij ∂_k V`.
pub fn hessian_from_jets(cb: &CurvatureBundle, v: &Jet2) -> Vec<Vec<f64>> {
    let n = cb.dim();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| v.dd(i, j) - (0..n).map(|k| cb.gamma(k, i, j) * v.d(k)).sum::<f64>())
                .collect()
        })
        .collect()
}

/// Covariant Hessian of a scalar field at `p`.
pub fn covariant_hessian(g: &MetricField, v: &Expression, p: &[f64]) -> Result<Vec<Vec<f64>>, GeometryError> {
    let mj = g.metric_jet(p)?;
    let cb = curvature(&mj);
    let vj = v.eval_jet2_with(p, &[])?;
    Ok(hessian_from_jets(&cb, &vj))
}

/// Mean curvature of the level set `{x^coord = p[coord]}` at `p`, as the
/// divergence of the unit normal `orientation · grad(x^coord)/|grad(x^coord)|`.
/// With this convention a sphere has positive mean curvature for the outward
/// normal.
pub fn mean_curvature_at(mj: &MetricJet, cb: &CurvatureBundle, coord: usize, orientation: f64) -> Result<f64, GeometryError> {
    let n = mj.dim();
    let c = coord;
    let gcc = mj.g_inv(c, c);
    if !(gcc > 0.0) || !gcc.is_finite() {
        return Err(GeometryError::DegenerateLevelSet);
    }
    let s = orientation.signum();
    let norm = gcc.sqrt();
    let normal: Vec<f64> = (0..n).map(|i| s * mj.g_inv(i, c) / norm).collect();
    // ∂_i N^i
    let mut div = 0.0;
    for i in 0..n {
        let d_gic = mj.d_g_inv(i, c, i);
        let d_gcc = mj.d_g_inv(c, c, i);
        div += s * (d_gic / norm - 0.5 * mj.g_inv(i, c) * d_gcc / (gcc * norm));
    }
    // + Γ^i_ik N^k
    for i in 0..n {
        for k in 0..n {
            div += cb.gamma(i, i, k) * normal[k];
        }
    }
    Ok(div)
}

/// Mean curvature of the level set `{x^coord = value}` through `p`.
pub fn mean_curvature(
    g: &MetricField,
    coord: usize,
    value: f64,
    p: &[f64],
    orientation: f64,
) -> Result<f64, GeometryError> {
    let mut q = p.to_vec();
    q[coord] = value;
    let mj = g.metric_jet(&q)?;
    let cb = curvature(&mj);
    mean_curvature_at(&mj, &cb, coord, orientation)
}
