//! Truncated second-order Taylor numbers.
//!
//! A [`HyperDual`] carries a value together with two independent first-order
//! perturbations `e1`, `e2` and their mixed term `e12` (with `e1² = e2² = 0`).
//! Seeding `e1` along coordinate `a` and `e2` along coordinate `b` yields
//! `∂f/∂a` in `e1`, `∂f/∂b` in `e2` and `∂²f/∂a∂b` in `e12`, exact to rounding.

use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HyperDual {
    pub re: f64,
    pub e1: f64,
    pub e2: f64,
    pub e12: f64,
}

impl HyperDual {
    pub const ZERO: HyperDual = HyperDual::constant(0.0);
    pub const ONE: HyperDual = HyperDual::constant(1.0);

    #[inline]
    pub const fn new(re: f64, e1: f64, e2: f64, e12: f64) -> Self {
        HyperDual { re, e1, e2, e12 }
    }

    #[inline]
    pub const fn constant(re: f64) -> Self {
        HyperDual::new(re, 0.0, 0.0, 0.0)
    }

    /// Independent variable seeded along the first perturbation only.
    #[inline]
    pub const fn variable(re: f64) -> Self {
        HyperDual::new(re, 1.0, 0.0, 0.0)
    }

    /// Applies a scalar function given its value and first two derivatives at `re`.
    #[inline]
    pub fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        HyperDual {
            re: f0,
            e1: f1 * self.e1,
            e2: f1 * self.e2,
            e12: f1 * self.e12 + f2 * self.e1 * self.e2,
        }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.e1.is_finite() && self.e2.is_finite() && self.e12.is_finite()
    }

    #[inline]
    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => HyperDual::ONE,
            1 => self,
            2 => self * self,
            _ => {
                let x = self.re;
                let nf = n as f64;
                self.chain(x.powi(n), nf * x.powi(n - 1), nf * (nf - 1.0) * x.powi(n - 2))
            }
        }
    }

    pub fn powf(self, p: f64) -> Self {
        let x = self.re;
        self.chain(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0))
    }

    pub fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.re))
    }

    pub fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let x = self.re;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tanh(self) -> Self {
        let t = self.re.tanh();
        let d = 1.0 - t * t;
        self.chain(t, d, -2.0 * t * d)
    }

    pub fn recip(self) -> Self {
        let x = self.re;
        self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }
}

impl From<f64> for HyperDual {
    fn from(x: f64) -> Self {
        HyperDual::constant(x)
    }
}

impl Add for HyperDual {
    type Output = HyperDual;
    #[inline]
    fn add(self, o: HyperDual) -> HyperDual {
        HyperDual::new(self.re + o.re, self.e1 + o.e1, self.e2 + o.e2, self.e12 + o.e12)
    }
}

impl Sub for HyperDual {
    type Output = HyperDual;
    #[inline]
    fn sub(self, o: HyperDual) -> HyperDual {
        HyperDual::new(self.re - o.re, self.e1 - o.e1, self.e2 - o.e2, self.e12 - o.e12)
    }
}

impl Mul for HyperDual {
    type Output = HyperDual;
    #[inline]
    fn mul(self, o: HyperDual) -> HyperDual {
        HyperDual::new(
            self.re * o.re,
            self.re * o.e1 + self.e1 * o.re,
            self.re * o.e2 + self.e2 * o.re,
            self.re * o.e12 + self.e1 * o.e2 + self.e2 * o.e1 + self.e12 * o.re,
        )
    }
}

impl Div for HyperDual {
    type Output = HyperDual;
    #[inline]
    fn div(self, o: HyperDual) -> HyperDual {
        self * o.recip()
    }
}

impl Neg for HyperDual {
    type Output = HyperDual;
    #[inline]
    fn neg(self) -> HyperDual {
        HyperDual::new(-self.re, -self.e1, -self.e2, -self.e12)
    }
}

impl Add<f64> for HyperDual {
    type Output = HyperDual;
    #[inline]
    fn add(self, o: f64) -> HyperDual {
        HyperDual {
            re: self.re + o,
            ..self
        }
    }
}

impl Sub<f64> for HyperDual {
    type Output = HyperDual;
    #[inline]
    fn sub(self, o: f64) -> HyperDual {
        HyperDual {
            re: self.re - o,
            ..self
        }
    }
}

impl Mul<f64> for HyperDual {
    type Output = HyperDual;
    #[inline]
    fn mul(self, o: f64) -> HyperDual {
        HyperDual::new(self.re * o, self.e1 * o, self.e2 * o, self.e12 * o)
    }
}

impl Div<f64> for HyperDual {
    type Output = HyperDual;
    #[inline]
    fn div(self, o: f64) -> HyperDual {
        self * (1.0 / o)
    }
}

impl Add<HyperDual> for f64 {
    type Output = HyperDual;
    #[inline]
    fn add(self, o: HyperDual) -> HyperDual {
        o + self
    }
}

impl Sub<HyperDual> for f64 {
    type Output = HyperDual;
    #[inline]
    fn sub(self, o: HyperDual) -> HyperDual {
        -o + self
    }
}

impl Mul<HyperDual> for f64 {
    type Output = HyperDual;
    #[inline]
    fn mul(self, o: HyperDual) -> HyperDual {
        o * self
    }
}

impl Div<HyperDual> for f64 {
    type Output = HyperDual;
    #[inline]
    fn div(self, o: HyperDual) -> HyperDual {
        o.recip() * self
    }
}

impl AddAssign for HyperDual {
    #[inline]
    fn add_assign(&mut self, o: HyperDual) {
        *self = *self + o;
    }
}

impl SubAssign for HyperDual {
    #[inline]
    fn sub_assign(&mut self, o: HyperDual) {
        *self = *self - o;
    }
}

impl MulAssign for HyperDual {
    #[inline]
    fn mul_assign(&mut self, o: HyperDual) {
        *self = *self * o;
    }
}

impl Sum for HyperDual {
    fn sum<I: Iterator<Item = HyperDual>>(iter: I) -> HyperDual {
        iter.fold(HyperDual::ZERO, |a, b| a + b)
    }
}
