//! Second-order forward-mode jets.
//!
//! A [`Jet`] carries a value together with its gradient and Hessian with
//! respect to up to [`MAX_VARS`] independent variables. The Hessian is stored
//! as a packed upper triangle, so it is symmetric by construction.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Largest number of independent variables a jet can track.
pub const MAX_VARS: usize = 8;

const PACKED: usize = MAX_VARS * (MAX_VARS + 1) / 2;

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

/// Numeric types that expressions can be evaluated over.
///
/// Implemented for plain `f64` and for [`Jet`]. Domain checks (for `ln`,
/// `sqrt`, division) are the caller's job; these methods never fail.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + From<f64>
{
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn powi(self, k: i32) -> Self;
    fn powf(self, c: f64) -> Self;

    fn scale(self, c: f64) -> Self {
        self * Self::from(c)
    }
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    fn powf(self, c: f64) -> Self {
        f64::powf(self, c)
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

/// Truncated second-order Taylor expansion in `nvars` variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    nvars: usize,
    value: f64,
    grad: [f64; MAX_VARS],
    hess: [f64; PACKED],
}

impl Jet {
    pub fn constant(value: f64) -> Self {
        Self {
            nvars: 0,
            value,
            grad: [0.0; MAX_VARS],
            hess: [0.0; PACKED],
        }
    }

    /// The `index`-th coordinate function of `nvars` variables, evaluated at `value`.
    ///
    /// Panics if `index >= nvars` or `nvars > MAX_VARS`.
    pub fn variable(value: f64, index: usize, nvars: usize) -> Self {
        assert!(nvars <= MAX_VARS, "at most {MAX_VARS} jet variables");
        assert!(index < nvars);
        let mut jet = Self::constant(value);
        jet.nvars = nvars;
        jet.grad[index] = 1.0;
        jet
    }

    /// Builds a jet from explicit value, gradient and (full, symmetric) Hessian.
    /// Only the upper triangle of `hess` is read.
    pub fn from_parts(value: f64, grad: &[f64], hess: impl Fn(usize, usize) -> f64) -> Self {
        let n = grad.len();
        assert!(n <= MAX_VARS);
        let mut jet = Self::constant(value);
        jet.nvars = n;
        jet.grad[..n].copy_from_slice(grad);
        for j in 0..n {
            for i in 0..=j {
                jet.hess[packed(i, j)] = hess(i, j);
            }
        }
        jet
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn val(&self) -> f64 {
        self.value
    }

    pub fn grad(&self, i: usize) -> f64 {
        self.grad[i]
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad[..self.nvars]
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[packed(i, j)]
    }

    /// The partial derivative `∂_i` as a jet that is accurate to first order
    /// only: its Hessian is left at zero because third derivatives are not
    /// tracked.
    pub fn partial(&self, i: usize) -> Jet {
        let mut out = Self::constant(self.grad[i]);
        out.nvars = self.nvars;
        for j in 0..self.nvars {
            out.grad[j] = self.hess[packed(i, j)];
        }
        out
    }

    /// Drops the second-order part.
    pub fn first_order(mut self) -> Jet {
        self.hess = [0.0; PACKED];
        self
    }

    /// Composition with a scalar function `φ` given `φ(v), φ'(v), φ''(v)`.
    #[inline]
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Jet {
        let n = self.nvars;
        let mut out = Self::constant(f0);
        out.nvars = n;
        for i in 0..n {
            out.grad[i] = f1 * self.grad[i];
        }
        for j in 0..n {
            for i in 0..=j {
                let k = packed(i, j);
                out.hess[k] = f2 * self.grad[i] * self.grad[j] + f1 * self.hess[k];
            }
        }
        out
    }

    pub fn recip(self) -> Jet {
        let v = self.value;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }
}

impl From<f64> for Jet {
    fn from(value: f64) -> Self {
        Jet::constant(value)
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, rhs: Jet) -> Jet {
        let n = self.nvars.max(rhs.nvars);
        let mut out = self;
        out.nvars = n;
        out.value += rhs.value;
        for i in 0..n {
            out.grad[i] += rhs.grad[i];
        }
        for k in 0..n * (n + 1) / 2 {
            out.hess[k] += rhs.hess[k];
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(mut self) -> Jet {
        let n = self.nvars;
        self.value = -self.value;
        for i in 0..n {
            self.grad[i] = -self.grad[i];
        }
        for k in 0..n * (n + 1) / 2 {
            self.hess[k] = -self.hess[k];
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: Jet) -> Jet {
        let n = self.nvars.max(rhs.nvars);
        let (a, b) = (&self, &rhs);
        let mut out = Jet::constant(a.value * b.value);
        out.nvars = n;
        for i in 0..n {
            out.grad[i] = a.grad[i] * b.value + a.value * b.grad[i];
        }
        for j in 0..n {
            for i in 0..=j {
                let k = packed(i, j);
                out.hess[k] = a.hess[k] * b.value
                    + a.value * b.hess[k]
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i];
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        self.value
    }
    fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }
    fn sqrt(self) -> Self {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.value))
    }
    fn ln(self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }
    fn powi(self, k: i32) -> Self {
        let v = self.value;
        let kf = k as f64;
        let d1 = if k == 0 { 0.0 } else { kf * v.powi(k - 1) };
        let d2 = if k == 0 || k == 1 {
            0.0
        } else {
            kf * (kf - 1.0) * v.powi(k - 2)
        };
        self.chain(v.powi(k), d1, d2)
    }
    fn powf(self, c: f64) -> Self {
        let v = self.value;
        self.chain(v.powf(c), c * v.powf(c - 1.0), c * (c - 1.0) * v.powf(c - 2.0))
    }
    fn scale(mut self, c: f64) -> Self {
        let n = self.nvars;
        self.value *= c;
        for i in 0..n {
            self.grad[i] *= c;
        }
        for k in 0..n * (n + 1) / 2 {
            self.hess[k] *= c;
        }
        self
    }
}
