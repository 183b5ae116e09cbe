//! Smooth transition functions built from `exp(-rho / x^alpha)`.

use crate::jet::Jet;

/// The step `s(x) = E(x) / (E(x) + E(1 - x))` with `E(x) = exp(-rho x^{-alpha})`
/// for `x > 0` and `E = 0` otherwise. `s` is `0` on `(-inf, 0]`, `1` on
/// `[1, inf)`, strictly increasing in between and flat to infinite order at
/// both ends. `rho = alpha = 1` gives the classical `e^{-1/x}` gluing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothStep {
    pub rho: f64,
    pub alpha: f64,
}

impl Default for SmoothStep {
    fn default() -> Self {
        SmoothStep::STANDARD
    }
}

impl SmoothStep {
    pub const STANDARD: SmoothStep = SmoothStep { rho: 1.0, alpha: 1.0 };

    pub fn new(rho: f64, alpha: f64) -> Self {
        SmoothStep { rho, alpha }
    }

    /// Returns `(h, h', h'')` for `h(x) = -rho x^{-alpha}`, `x > 0`.
    #[inline]
    fn log_e(&self, x: f64) -> (f64, f64, f64) {
        let (r, a) = (self.rho, self.alpha);
        let p = x.powf(-a);
        let h = -r * p;
        let h1 = r * a * p / x;
        let h2 = -r * a * (a + 1.0) * p / (x * x);
        (h, h1, h2)
    }

    /// Value and derivatives at a scalar point.
    #[inline]
    pub fn eval(&self, x: f64) -> Jet {
        if x <= 0.0 {
            return Jet::ZERO;
        }
        if x >= 1.0 {
            return Jet::ONE;
        }
        let (ha, ha1, ha2) = self.log_e(x);
        let (hb, hb1, hb2) = self.log_e(1.0 - x);
        // s = 1 / (1 + e^z), z = hb - ha
        let z = hb - ha;
        let z1 = -hb1 - ha1;
        let z2 = hb2 - ha2;
        let (f, g) = logistic_pair(z);
        if f == 0.0 || g == 0.0 {
            return if f == 0.0 { Jet::ZERO } else { Jet::ONE };
        }
        let fp = -f * g;
        let fpp = -fp * (g - f);
        let d1 = fp * z1;
        let d2 = fpp * z1 * z1 + fp * z2;
        if !(d1.is_finite() && d2.is_finite()) {
            return if f < 0.5 { Jet::ZERO } else { Jet::ONE };
        }
        Jet::new(f, d1, d2)
    }

    /// Composition with an inner jet.
    #[inline]
    pub fn apply(&self, x: Jet) -> Jet {
        let s = self.eval(x.v);
        x.chain(s.v, s.d1, s.d2)
    }

    /// `1 - s(x)` computed without cancellation.
    #[inline]
    pub fn complement(&self, x: f64) -> Jet {
        let mirrored = self.eval(1.0 - x);
        Jet::new(mirrored.v, -mirrored.d1, mirrored.d2)
    }
}

/// Returns `(1/(1+e^z), 1/(1+e^{-z}))`, each to full relative precision.
#[inline]
fn logistic_pair(z: f64) -> (f64, f64) {
    if z >= 0.0 {
        let e = (-z).exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    } else {
        let e = z.exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(s: SmoothStep, x: f64) {
        let h = 1e-6;
        let j = s.eval(x);
        let fd1 = (s.eval(x + h).v - s.eval(x - h).v) / (2.0 * h);
        let fd2 = (s.eval(x + h).d1 - s.eval(x - h).d1) / (2.0 * h);
        assert!((j.d1 - fd1).abs() <= 1e-6 * (1.0 + j.d1.abs()), "d1 at {x}: {} vs {fd1}", j.d1);
        assert!((j.d2 - fd2).abs() <= 1e-5 * (1.0 + j.d2.abs()), "d2 at {x}: {} vs {fd2}", j.d2);
    }

    #[test]
    fn derivatives_match_differences() {
        for &(r, a) in &[(1.0, 1.0), (17.5, 0.1), (2.0, 0.5)] {
            let s = SmoothStep::new(r, a);
            for i in 1..40 {
                fd_check(s, i as f64 / 40.0);
            }
        }
    }

    #[test]
    fn endpoints_and_symmetry() {
        let s = SmoothStep::STANDARD;
        assert_eq!(s.eval(0.0), Jet::ZERO);
        assert_eq!(s.eval(1.0), Jet::ONE);
        assert!((s.eval(0.5).v - 0.5).abs() < 1e-15);
        for i in 1..20 {
            let x = i as f64 / 20.0;
            assert!((s.eval(x).v + s.eval(1.0 - x).v - 1.0).abs() < 1e-15);
            assert_eq!(s.complement(x).v, s.eval(1.0 - x).v);
        }
    }

    #[test]
    fn tiny_values_keep_relative_precision() {
        let s = SmoothStep::new(17.5, 0.1);
        let x = 4f64.powi(-6);
        let r = (-17.5 * (x.powf(-0.1) - (1.0 - x).powf(-0.1))).exp();
        let expected = r / (1.0 + r);
        let got = s.eval(x).v;
        assert!((got / expected - 1.0).abs() < 1e-6, "{got} vs {expected}");
    }
}
