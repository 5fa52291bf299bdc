//! Second-order forward jets: a value with its gradient and Hessian.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Largest chart dimension a jet can carry.
pub const MAX_DIM: usize = 8;
const MAX_PACKED: usize = MAX_DIM * (MAX_DIM + 1) / 2;

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    b * (b + 1) / 2 + a
}

/// A scalar together with its first and second partial derivatives at a point.
///
/// The Hessian is stored as a packed upper triangle, so symmetry holds by
/// construction rather than up to a tolerance.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet2 {
    dim: usize,
    value: f64,
    grad: [f64; MAX_DIM],
    hess: [f64; MAX_PACKED],
}

impl Jet2 {
    pub fn constant(dim: usize, value: f64) -> Self {
        assert!(dim <= MAX_DIM, "jet dimension {dim} exceeds {MAX_DIM}");
        Self { dim, value, grad: [0.0; MAX_DIM], hess: [0.0; MAX_PACKED] }
    }

    /// The coordinate function `x^index` evaluated at `value`.
    pub fn variable(dim: usize, index: usize, value: f64) -> Self {
        let mut j = Self::constant(dim, value);
        j.grad[index] = 1.0;
        j
    }

    pub fn from_parts(value: f64, grad: &[f64], hess: &[Vec<f64>]) -> Self {
        let dim = grad.len();
        let mut j = Self::constant(dim, value);
        j.grad[..dim].copy_from_slice(grad);
        for b in 0..dim {
            for a in 0..=b {
                j.hess[packed(a, b)] = 0.5 * (hess[a][b] + hess[b][a]);
            }
        }
        j
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    pub fn grad(&self) -> &[f64] {
        &self.grad[..self.dim]
    }

    #[inline]
    pub fn d(&self, i: usize) -> f64 {
        self.grad[i]
    }

    #[inline]
    pub fn dd(&self, i: usize, j: usize) -> f64 {
        self.hess[packed(i, j)]
    }

    pub fn hess(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.dd(i, j)).collect()).collect()
    }

    #[inline]
    fn npacked(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = *self;
        out.value *= c;
        for g in &mut out.grad[..self.dim] {
            *g *= c;
        }
        for h in &mut out.hess[..self.npacked()] {
            *h *= c;
        }
        out
    }

    /// `f(self)` given `f`, `f'` and `f''` at `self.value()`.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Self::constant(self.dim, f0);
        for i in 0..self.dim {
            out.grad[i] = f1 * self.grad[i];
        }
        for b in 0..self.dim {
            for a in 0..=b {
                let k = packed(a, b);
                out.hess[k] = f1 * self.hess[k] + f2 * self.grad[a] * self.grad[b];
            }
        }
        out
    }

    /// `F(u, v)` given `F`, its gradient `[F_u, F_v]` and Hessian entries
    /// `[F_uu, F_uv, F_vv]` at `(u, v)`.
    pub fn chain2(u: &Self, v: &Self, f0: f64, f1: [f64; 2], f2: [f64; 3]) -> Self {
        debug_assert_eq!(u.dim, v.dim);
        let mut out = Self::constant(u.dim, f0);
        for i in 0..u.dim {
            out.grad[i] = f1[0] * u.grad[i] + f1[1] * v.grad[i];
        }
        for b in 0..u.dim {
            for a in 0..=b {
                let k = packed(a, b);
                out.hess[k] = f1[0] * u.hess[k]
                    + f1[1] * v.hess[k]
                    + f2[0] * u.grad[a] * u.grad[b]
                    + f2[1] * (u.grad[a] * v.grad[b] + v.grad[a] * u.grad[b])
                    + f2[2] * v.grad[a] * v.grad[b];
            }
        }
        out
    }

    pub fn recip(&self) -> Self {
        let x = self.value;
        let r = 1.0 / x;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn powi(&self, k: i32) -> Self {
        let x = self.value;
        let kf = k as f64;
        match k {
            0 => Self::constant(self.dim, 1.0),
            1 => *self,
            2 => self.chain(x * x, 2.0 * x, 2.0),
            _ => self.chain(x.powi(k), kf * x.powi(k - 1), kf * (kf - 1.0) * x.powi(k - 2)),
        }
    }

    pub fn powf(&self, c: f64) -> Self {
        let x = self.value;
        self.chain(x.powf(c), c * x.powf(c - 1.0), c * (c - 1.0) * x.powf(c - 2.0))
    }

    pub fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let x = self.value;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tan(&self) -> Self {
        let t = self.value.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }

    pub fn sinh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(c, s, c)
    }

    pub fn tanh(&self) -> Self {
        let t = self.value.tanh();
        let sech2 = 1.0 - t * t;
        self.chain(t, sech2, -2.0 * t * sech2)
    }

    /// Absolute value; the derivative at zero is taken to be zero.
    pub fn abs(&self) -> Self {
        let s = if self.value > 0.0 {
            1.0
        } else if self.value < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.value.abs(), s, 0.0)
    }

    /// `atan2(self, x)`, the angle of the point `(x, self)`.
    pub fn atan2(&self, x: &Self) -> Self {
        let (yv, xv) = (self.value, x.value);
        let rho = xv * xv + yv * yv;
        let rho2 = rho * rho;
        Self::chain2(
            self,
            x,
            yv.atan2(xv),
            [xv / rho, -yv / rho],
            [-2.0 * xv * yv / rho2, (yv * yv - xv * xv) / rho2, 2.0 * xv * yv / rho2],
        )
    }
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet2")
            .field("value", &self.value)
            .field("grad", &self.grad())
            .field("hess", &self.hess())
            .finish()
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(mut self, rhs: Jet2) -> Jet2 {
        debug_assert_eq!(self.dim, rhs.dim);
        self.value += rhs.value;
        for i in 0..self.dim {
            self.grad[i] += rhs.grad[i];
        }
        for k in 0..self.npacked() {
            self.hess[k] += rhs.hess[k];
        }
        self
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(mut self, rhs: Jet2) -> Jet2 {
        debug_assert_eq!(self.dim, rhs.dim);
        self.value -= rhs.value;
        for i in 0..self.dim {
            self.grad[i] -= rhs.grad[i];
        }
        for k in 0..self.npacked() {
            self.hess[k] -= rhs.hess[k];
        }
        self
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        debug_assert_eq!(self.dim, rhs.dim);
        let (u, v) = (self.value, rhs.value);
        Jet2::chain2(&self, &rhs, u * v, [v, u], [0.0, 1.0, 0.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_matches_hand_expansion() {
        // f = x*y at (2,3): grad (3,2), hess [[0,1],[1,0]]
        let x = Jet2::variable(2, 0, 2.0);
        let y = Jet2::variable(2, 1, 3.0);
        let p = x * y;
        assert_eq!(p.value(), 6.0);
        assert_eq!(p.grad(), &[3.0, 2.0]);
        assert_eq!(p.hess(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn atan2_gradient_is_angular_form() {
        let x = Jet2::variable(2, 0, 1.0);
        let y = Jet2::variable(2, 1, 1.0);
        let t = y.atan2(&x);
        assert!((t.value() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!((t.d(0) + 0.5).abs() < 1e-15);
        assert!((t.d(1) - 0.5).abs() < 1e-15);
        // Laplacian of the angle vanishes.
        assert!((t.dd(0, 0) + t.dd(1, 1)).abs() < 1e-15);
    }

    #[test]
    fn hessian_is_structurally_symmetric() {
        let x = Jet2::variable(3, 0, 0.3);
        let y = Jet2::variable(3, 2, -1.1);
        let f = (x * y.sin()).exp();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(f.dd(i, j).to_bits(), f.dd(j, i).to_bits());
            }
        }
    }
}
