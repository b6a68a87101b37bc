//! Scalar abstraction used by model definitions, and a forward-mode dual
//! number in four variables.
//!
//! Models are written once against [`Real`]; evaluating them on
//! `Dual<Dual<f64>>` yields values, first and second partials exactly.

use core::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    /// Plain value, discarding derivative parts.
    fn val(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn one() -> Self {
        Self::cst(1.0)
    }
    fn powi(self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
    fn recip(self) -> Self {
        Self::one() / self
    }
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn val(&self) -> f64 {
        *self
    }
    #[inline]
    fn sin(self) -> Self {
        libm::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        libm::cos(self)
    }
    #[inline]
    fn exp(self) -> Self {
        libm::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        libm::log(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
}

/// Dual number `v + Σ g_k ε_k` in four infinitesimals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub v: T,
    pub g: [T; 4],
}

impl<T: Real> Dual<T> {
    pub fn constant(v: T) -> Self {
        Dual { v, g: [T::zero(); 4] }
    }

    /// The coordinate function `x_k` at value `v`.
    pub fn var(v: T, k: usize) -> Self {
        let mut g = [T::zero(); 4];
        g[k] = T::one();
        Dual { v, g }
    }

    #[inline]
    fn chain(self, f: T, df: T) -> Self {
        Dual { v: f, g: self.g.map(|gi| gi * df) }
    }
}

/// Seeds a point for second-order evaluation: the outer and inner
/// infinitesimals both track the coordinate directions.
pub fn seed2(x: [f64; 4]) -> [Dual<Dual<f64>>; 4] {
    core::array::from_fn(|k| {
        let mut g = [Dual::constant(0.0); 4];
        g[k] = Dual::constant(1.0);
        Dual { v: Dual::var(x[k], k), g }
    })
}

/// Seeds a point for first-order evaluation.
pub fn seed1(x: [f64; 4]) -> [Dual<f64>; 4] {
    core::array::from_fn(|k| Dual::var(x[k], k))
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual { v: self.v + o.v, g: core::array::from_fn(|k| self.g[k] + o.g[k]) }
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual { v: self.v - o.v, g: core::array::from_fn(|k| self.g[k] - o.g[k]) }
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual {
            v: self.v * o.v,
            g: core::array::from_fn(|k| self.g[k] * o.v + self.v * o.g[k]),
        }
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = o.v.recip();
        let q = self.v * inv;
        Dual { v: q, g: core::array::from_fn(|k| (self.g[k] - q * o.g[k]) * inv) }
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual { v: -self.v, g: self.g.map(|x| -x) }
    }
}

impl<T: Real> Add<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: f64) -> Self {
        Dual { v: self.v + o, g: self.g }
    }
}

impl<T: Real> Sub<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: f64) -> Self {
        Dual { v: self.v - o, g: self.g }
    }
}

impl<T: Real> Mul<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        Dual { v: self.v * o, g: self.g.map(|x| x * o) }
    }
}

impl<T: Real> Div<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        Dual { v: self.v / o, g: self.g.map(|x| x / o) }
    }
}

impl<T: Real> Real for Dual<T> {
    fn cst(v: f64) -> Self {
        Dual::constant(T::cst(v))
    }
    fn val(&self) -> f64 {
        self.v.val()
    }
    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), self.v.recip())
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, (s * 2.0).recip())
    }
}
