//! Second-order forward-mode jets.
//!
//! A [`Jet`] carries a value together with its first and second derivative
//! with respect to one real variable. Every profile in the smooth kit is
//! evaluated through jets so that `f`, `f'` and `f''` come out of a single
//! pass with no finite differencing.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const ZERO: Jet = Jet { v: 0.0, d1: 0.0, d2: 0.0 };
    pub const ONE: Jet = Jet { v: 1.0, d1: 0.0, d2: 0.0 };

    pub const fn new(v: f64, d1: f64, d2: f64) -> Self {
        Jet { v, d1, d2 }
    }

    /// The identity jet at `x`.
    pub const fn var(x: f64) -> Self {
        Jet { v: x, d1: 1.0, d2: 0.0 }
    }

    pub const fn constant(c: f64) -> Self {
        Jet { v: c, d1: 0.0, d2: 0.0 }
    }

    /// Chain rule: applies a scalar function given its value and first two
    /// derivatives at `self.v`.
    #[inline]
    pub fn chain(self, f: f64, fp: f64, fpp: f64) -> Jet {
        Jet {
            v: f,
            d1: fp * self.d1,
            d2: fpp * self.d1 * self.d1 + fp * self.d2,
        }
    }

    #[inline]
    pub fn scale(self, c: f64) -> Jet {
        Jet { v: c * self.v, d1: c * self.d1, d2: c * self.d2 }
    }

    #[inline]
    pub fn exp(self) -> Jet {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    #[inline]
    pub fn sin(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    #[inline]
    pub fn cos(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn is_zero(&self) -> bool {
        self.v == 0.0 && self.d1 == 0.0 && self.d2 == 0.0
    }

    pub fn is_one(&self) -> bool {
        self.v == 1.0 && self.d1 == 0.0 && self.d2 == 0.0
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, c: f64) -> Jet {
        Jet { v: self.v + c, ..self }
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, o: Jet) -> Jet {
        Jet { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, c: f64) -> Jet {
        Jet { v: self.v - c, ..self }
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(self) -> Jet {
        Jet { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, o: Jet) -> Jet {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        let q1 = (self.d1 - q * o.d1) * inv;
        let q2 = (self.d2 - 2.0 * q1 * o.d1 - q * o.d2) * inv;
        Jet { v: q, d1: q1, d2: q2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        // f = x^2 / (1 + x) at x = 0.7
        let x = Jet::var(0.7);
        let f = (x * x) / (x + 1.0);
        let xv: f64 = 0.7;
        let exact_d1 = (xv * xv + 2.0 * xv) / (1.0 + xv).powi(2);
        let exact_d2 = 2.0 / (1.0 + xv).powi(3);
        assert!((f.v - xv * xv / (1.0 + xv)).abs() < 1e-15);
        assert!((f.d1 - exact_d1).abs() < 1e-14);
        assert!((f.d2 - exact_d2).abs() < 1e-14);
    }

    #[test]
    fn composition_through_exp_and_sin() {
        let x = Jet::var(0.3);
        let f = (x.sin() * 2.0).exp();
        let e = (2.0 * 0.3f64.sin()).exp();
        let c = 0.3f64.cos();
        let s = 0.3f64.sin();
        assert!((f.d1 - e * 2.0 * c).abs() < 1e-14);
        assert!((f.d2 - e * (4.0 * c * c - 2.0 * s)).abs() < 1e-13);
    }
}
