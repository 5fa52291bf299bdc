//! Quadrature rules, compensated summation, Richardson extrapolation and
//! low-discrepancy sampling.

use serde::Serialize;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let m = (q + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=q {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pq = if q == 1 { z } else { p1 };
            let pq1 = if q == 1 { 1.0 } else { p0 };
            dp = q as f64 * (z * pq - pq1) / (z * z - 1.0);
            let dz = pq / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if q == 1 {
            dp = 1.0;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[q - 1 - i] = z;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    (nodes, weights)
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = CompensatedSum::default();
    for v in it {
        s.add(v);
    }
    s.total()
}

/// Outcome of extrapolating a sequence `v_k = v(x_k)` to `x → 0` under the
/// error model `v(x) = L + a·x^σ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Extrapolation {
    pub limit: f64,
    /// Change between the last two extrapolants plus the roundoff of the last
    /// two levels carried through the formula; the noise-band spread on a
    /// plateau.
    pub error: f64,
    /// Fitted or supplied decay exponent; `None` when the sequence had already
    /// settled to within its noise level.
    pub sigma: Option<f64>,
    /// Pairwise extrapolants `E_k` from levels `k, k+1` (length `len - 1`).
    pub extrapolants: Vec<f64>,
}

/// Richardson extrapolation with a fitted exponent.
///
/// `noise[k]` bounds the roundoff in `values[k]`; differences inside the
/// combined noise band are treated as zero. Returns `Err` with a reason when
/// the data do not decay toward a limit.
pub fn richardson(xs: &[f64], values: &[f64], noise: &[f64], sigma: Option<f64>) -> Result<Extrapolation, String> {
    let len = values.len();
    if len < 2 || xs.len() != len || noise.len() != len {
        return Err("need at least two levels".into());
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("non-finite level value".into());
    }
    let band = |i: usize, j: usize| noise[i] + noise[j];

    // Earliest level from which every later value agrees within noise.
    let plateau = (0..len - 1).find(|&s| (s + 1..len).all(|j| (values[j] - values[s]).abs() <= band(s, j)));
    if let Some(s) = plateau {
        let spread = (s + 1..len).map(|j| (values[j] - values[s]).abs()).fold(0.0, f64::max);
        return Ok(Extrapolation {
            limit: values[s],
            error: spread.max(noise[s]),
            sigma: None,
            extrapolants: values[1..].to_vec(),
        });
    }

    let sigma = match sigma {
        Some(s) => s,
        None => {
            if len < 3 {
                return Err("need three levels to fit the decay exponent".into());
            }
            let k = len - 3;
            let d1 = values[k + 1] - values[k];
            let d2 = values[k + 2] - values[k + 1];
            let ratio = d1 / d2;
            let rho = (xs[k] / xs[k + 1]).ln();
            if !(ratio > 0.0) || !ratio.is_finite() {
                return Err(format!("level differences change sign ({d1:e}, {d2:e})"));
            }
            ratio.ln() / rho
        }
    };
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(format!("fitted decay exponent {sigma:.3} is not positive"));
    }
    let extrapolants: Vec<f64> = (0..len - 1)
        .map(|k| {
            let (a, b) = (xs[k].powf(sigma), xs[k + 1].powf(sigma));
            (values[k + 1] * a - values[k] * b) / (a - b)
        })
        .collect();
    let limit = *extrapolants.last().unwrap();
    let change = if extrapolants.len() >= 2 {
        (limit - extrapolants[extrapolants.len() - 2]).abs()
    } else {
        (limit - values[len - 1]).abs()
    };
    // Roundoff of the last pair carried through the extrapolation formula.
    let (a, b) = (xs[len - 2].powf(sigma), xs[len - 1].powf(sigma));
    let carried = (a * noise[len - 1] + b * noise[len - 2]) / (a - b).abs();
    let error = change + carried;
    Ok(Extrapolation { limit, error, sigma: Some(sigma), extrapolants })
}

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Deterministic Halton sequence in `[0,1)^dims`; the seed offsets the index.
#[derive(Clone, Debug)]
pub struct Halton {
    dims: usize,
    next: u64,
}

impl Halton {
    pub fn new(dims: usize, seed: u64) -> Self {
        assert!(dims <= PRIMES.len());
        Self { dims, next: seed + 1 }
    }
}

impl Iterator for Halton {
    type Item = Vec<f64>;
    fn next(&mut self) -> Option<Vec<f64>> {
        let k = self.next;
        self.next += 1;
        Some((0..self.dims).map(|d| radical_inverse(k, PRIMES[d])).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for q in [1usize, 2, 5, 12, 24, 48] {
            let (x, w) = gauss_legendre(q);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * q) {
                let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((integral - exact).abs() < 1e-13, "q={q} deg={deg}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn richardson_recovers_power_law_limit() {
        let xs: Vec<f64> = (0..5).map(|k| 0.05 / 2f64.powi(k)).collect();
        let vals: Vec<f64> = xs.iter().map(|x| 3.0 + 2.0 * x.powi(3)).collect();
        let e = richardson(&xs, &vals, &[0.0; 5], None).unwrap();
        assert!((e.limit - 3.0).abs() < 1e-14);
        assert!((e.sigma.unwrap() - 3.0).abs() < 1e-8);
    }

    #[test]
    fn richardson_reports_growth_as_divergence() {
        let xs: Vec<f64> = (0..4).map(|k| 0.05 / 2f64.powi(k)).collect();
        let vals: Vec<f64> = xs.iter().map(|x| 1.0 / x).collect();
        assert!(richardson(&xs, &vals, &[0.0; 4], None).is_err());
    }

    #[test]
    fn richardson_settles_on_noise_plateau() {
        let xs: Vec<f64> = (0..4).map(|k| 0.05 / 2f64.powi(k)).collect();
        let vals = [1e-12, -3e-12, 2e-12, 5e-12];
        let e = richardson(&xs, &vals, &[1e-11; 4], None).unwrap();
        assert_eq!(e.limit, 1e-12);
        assert!(e.sigma.is_none());
    }

    #[test]
    fn compensated_sum_is_order_stable() {
        let v: Vec<f64> = (0..1000).map(|k| ((k * 7919) % 1000) as f64 * 1e-3 + 1e8 * ((k % 2) as f64 - 0.5)).collect();
        let a = compensated_sum(v.iter().copied());
        let b = compensated_sum(v.iter().rev().copied());
        assert!((a - b).abs() <= 1e-14 * v.iter().map(|x| x.abs()).sum::<f64>());
    }

    #[test]
    fn halton_is_deterministic_and_in_unit_cube() {
        let a: Vec<_> = Halton::new(3, 7).take(50).collect();
        let b: Vec<_> = Halton::new(3, 7).take(50).collect();
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|v| (0.0..1.0).contains(v)));
    }
}
