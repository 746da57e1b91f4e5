//! Second-order forward-mode jets.
//!
//! A [`Jet2`] carries `(f, f', f'')` of a univariate function at one point.
//! Arithmetic on jets is truncated Taylor arithmetic, so evaluating an
//! expression on the seed [`Jet2::variable`] yields its exact first and
//! second derivatives up to roundoff.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::{lit, Real};

#[derive(Copy, Clone, Debug, PartialEq, Default)]
pub struct Jet2<T> {
    pub v: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Real> Jet2<T> {
    pub fn new(v: T, d1: T, d2: T) -> Self {
        Self { v, d1, d2 }
    }

    pub fn constant(v: T) -> Self {
        Self::new(v, T::zero(), T::zero())
    }

    /// The identity function seeded at `x`.
    pub fn variable(x: T) -> Self {
        Self::new(x, T::one(), T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.v`.
    #[inline]
    pub fn chain(self, g: T, dg: T, ddg: T) -> Self {
        Self::new(g, dg * self.d1, ddg * self.d1 * self.d1 + dg * self.d2)
    }

    pub fn ln(self) -> Self {
        let inv = self.v.recip();
        self.chain(self.v.ln(), inv, -inv * inv)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        let dr = lit::<T>(0.5) / r;
        self.chain(r, dr, -dr / (lit::<T>(2.0) * self.v))
    }

    /// `self^p` for a constant exponent.
    pub fn powf(self, p: T) -> Self {
        let one = T::one();
        if p == T::zero() {
            return Self::constant(one);
        }
        if p == one {
            return self;
        }
        let dg = p * self.v.powf(p - one);
        let ddg = p * (p - one) * self.v.powf(p - lit(2.0));
        self.chain(self.v.powf(p), dg, ddg)
    }

    /// `self^e` with a jet exponent, computed as `exp(e ln self)`.
    pub fn pow(self, e: Self) -> Self {
        (e * self.ln()).exp()
    }

    pub fn scale(self, t: T) -> Self {
        Self::new(self.v * t, self.d1 * t, self.d2 * t)
    }
}

impl<T: Real> Add for Jet2<T> {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl<T: Real> Sub for Jet2<T> {
    type Output = Self;

    fn sub(self, o: Self) -> Self {
        Self::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl<T: Real> Neg for Jet2<T> {
    type Output = Self;

    fn neg(self) -> Self {
        Self::new(-self.v, -self.d1, -self.d2)
    }
}

impl<T: Real> Mul for Jet2<T> {
    type Output = Self;

    fn mul(self, o: Self) -> Self {
        let two = lit::<T>(2.0);
        Self::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + two * self.d1 * o.d1 + self.v * o.d2,
        )
    }
}

impl<T: Real> Div for Jet2<T> {
    type Output = Self;

    fn div(self, o: Self) -> Self {
        // q = a / b, q' = (a' - q b') / b, q'' = (a'' - 2 q' b' - q b'') / b
        let two = lit::<T>(2.0);
        let q = self.v / o.v;
        let q1 = (self.d1 - q * o.d1) / o.v;
        let q2 = (self.d2 - two * q1 * o.d1 - q * o.d2) / o.v;
        Self::new(q, q1, q2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Jet2<f64>, b: (f64, f64, f64), tol: f64) -> bool {
        (a.v - b.0).abs() <= tol && (a.d1 - b.1).abs() <= tol && (a.d2 - b.2).abs() <= tol
    }

    #[test]
    fn product_and_quotient_rules() {
        let x = Jet2::variable(2.0);
        // x^3 via products
        let cube = x * x * x;
        assert!(close(cube, (8.0, 12.0, 12.0), 1e-15));
        // 1/x
        let inv = Jet2::constant(1.0) / x;
        assert!(close(inv, (0.5, -0.25, 0.25), 1e-15));
    }

    #[test]
    fn elementary_functions() {
        let x = Jet2::variable(2.0f64);
        assert!(close(-x.ln(), (-(2.0f64.ln()), -0.5, 0.25), 1e-15));
        let e = 2.0f64.exp();
        assert!(close(x.exp(), (e, e, e), 1e-13));
        let r = 2.0f64.sqrt();
        assert!(close(x.sqrt(), (r, 0.5 / r, -0.25 / (2.0 * r)), 1e-15));
        assert!(close(x.powf(3.0), (8.0, 12.0, 12.0), 1e-14));
        assert!(close(x.pow(Jet2::constant(3.0)), (8.0, 12.0, 12.0), 1e-12));
    }

    #[test]
    fn ln_of_exp_is_identity() {
        for &s in &[0.01f64, 0.5, 1.0, 3.0, 40.0] {
            let j = Jet2::variable(s).exp().ln();
            assert!((j.v - s).abs() <= 1e-12 * s.max(1.0));
            assert!((j.d1 - 1.0).abs() <= 1e-12);
            assert!(j.d2.abs() <= 1e-12);
        }
    }

    #[test]
    fn doubling_is_exact() {
        let x = Jet2::variable(0.7f64);
        let e = x.ln() * x.sqrt();
        let twice = e + e;
        assert_eq!(twice, e.scale(2.0));
    }

    #[test]
    fn works_in_single_precision() {
        let j = Jet2::variable(4.0f32).sqrt();
        assert_eq!(j.v, 2.0);
        assert_eq!(j.d1, 0.25);
    }
}
