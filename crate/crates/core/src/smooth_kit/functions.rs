//! The basic building blocks: the plateau bump `psi`, the periodic cutoff
//! `phi_t`, the flat-topped profile `q` and its lower comparison profile.

use serde::{Deserialize, Serialize};

use super::profile::{even_argument, unfold_even, Feature, Profile, ProfileFunction};
use super::ramp::SmoothStep;
use crate::error::{Error, Result};
use crate::jet::Jet;

/// `psi(x) = s(4|x| - 1) s(4 - 4|x|)`: even, supported in `1/4 < |x| < 1`,
/// equal to 1 on `1/2 <= |x| <= 3/4`.
#[inline]
pub fn psi_jet(x: f64) -> Jet {
    let (r, sign) = if x < 0.0 { (-x, -1.0) } else { (x, 1.0) };
    if r <= 0.25 || r >= 1.0 {
        return Jet::ZERO;
    }
    if (0.5..=0.75).contains(&r) {
        return Jet::ONE;
    }
    let s = SmoothStep::STANDARD;
    let j = if r < 0.5 {
        s.apply(Jet::new(4.0 * r - 1.0, 4.0, 0.0))
    } else {
        s.apply(Jet::new(4.0 - 4.0 * r, -4.0, 0.0))
    };
    unfold_even(j, sign)
}

/// `sum_n psi(4^t (x + 2n))`, i.e. `1 - phi_t(x)`.
#[inline]
pub fn psi_periodized(x: f64, scale: f64) -> Jet {
    let (r, sign) = even_argument(x);
    let y = scale * r;
    if y <= 0.25 || y >= 1.0 {
        return Jet::ZERO;
    }
    let j = psi_jet(y);
    unfold_even(Jet::new(j.v, j.d1 * scale, j.d2 * scale * scale), sign)
}

pub(crate) fn ramp_features(scale: f64) -> Vec<Feature> {
    let w = 0.25 / scale;
    let cap = w / 50.0;
    let mut out = Vec::with_capacity(4);
    for &(lo, hi) in &[(0.25, 0.5), (0.75, 1.0)] {
        out.push(Feature { lo: lo / scale, hi: hi / scale, scale: cap });
        out.push(Feature { lo: -hi / scale, hi: -lo / scale, scale: cap });
    }
    out
}

#[derive(Debug)]
struct Psi;

impl Profile for Psi {
    fn jet(&self, x: f64) -> Jet {
        psi_jet(x)
    }

    fn top(&self) -> Option<f64> {
        Some(1.0)
    }

    fn support_hint(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, -0.25), (0.25, 1.0)]
    }

    fn features(&self) -> Vec<Feature> {
        ramp_features(1.0)
    }
}

pub fn make_psi() -> ProfileFunction {
    ProfileFunction::new("psi", Psi)
}

/// `psi_t(x) = psi(4^t x)`.
pub fn make_psi_t(t: f64) -> ProfileFunction {
    let scale = 4f64.powf(t);
    ProfileFunction::from_fn(format!("psi_{t}"), None, move |x| {
        let j = psi_jet(scale * x);
        Jet::new(j.v, j.d1 * scale, j.d2 * scale * scale)
    })
}

#[derive(Debug)]
struct PhiT {
    scale: f64,
}

impl Profile for PhiT {
    fn jet(&self, x: f64) -> Jet {
        Jet::ONE - psi_periodized(x, self.scale)
    }

    fn top(&self) -> Option<f64> {
        Some(1.0)
    }

    fn deficit(&self, x: f64, top: f64) -> Jet {
        psi_periodized(x, self.scale) + Jet::constant(top - 1.0)
    }

    fn period(&self) -> Option<f64> {
        Some(2.0)
    }

    fn features(&self) -> Vec<Feature> {
        ramp_features(self.scale)
    }
}

/// `phi_t(x) = 1 - sum_n psi_t(x + 2n)`.
pub fn make_phi_t(t: f64) -> Result<ProfileFunction> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::SpecViolation(format!("phi_t needs t >= 0, got {t}")));
    }
    Ok(ProfileFunction::new(format!("phi_{t}"), PhiT { scale: 4f64.powf(t) }))
}

/// Parameters of the flat-topped profile `q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QParams {
    /// `q(1)`, the minimum.
    pub c0: f64,
    /// `q(0) - q(1)`.
    pub c1: f64,
    /// Exponent in `exp(-rho / x^alpha)`; smaller is less flat.
    pub alpha: f64,
    pub rho: f64,
}

impl Default for QParams {
    fn default() -> Self {
        QParams { c0: 1.0, c1: 1.0, alpha: 0.1, rho: 17.5 }
    }
}

impl QParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.c0) {
            return Err(Error::config("profile.c0", "must be positive"));
        }
        if !ok(self.c1) {
            return Err(Error::config("profile.c1", "must be positive"));
        }
        if !ok(self.alpha) {
            return Err(Error::config("profile.alpha", "must be positive"));
        }
        if !ok(self.rho) {
            return Err(Error::config("profile.rho", "must be positive"));
        }
        Ok(())
    }

    pub fn step(&self) -> SmoothStep {
        SmoothStep::new(self.rho, self.alpha)
    }

    pub fn top(&self) -> f64 {
        self.c0 + self.c1
    }
}

/// `q(x) = c0 + c1 (1 - g(|x̄|))` with `g` the `(rho, alpha)` step.
#[derive(Clone, Copy, Debug)]
pub struct FlatQ {
    pub params: QParams,
}

impl FlatQ {
    /// `q(0) - q(x)` to full relative precision.
    #[inline]
    pub fn deficit_at(&self, x: f64) -> Jet {
        let (r, sign) = even_argument(x);
        let g = self.params.step().eval(r);
        unfold_even(g.scale(self.params.c1), sign)
    }

    /// `q(0) - q(x)` as a plain number.
    pub fn deficit_value(&self, x: f64) -> f64 {
        self.deficit_at(x).v
    }
}

impl Profile for FlatQ {
    fn jet(&self, x: f64) -> Jet {
        Jet::constant(self.params.top()) - self.deficit_at(x)
    }

    fn top(&self) -> Option<f64> {
        Some(self.params.top())
    }

    fn deficit(&self, x: f64, top: f64) -> Jet {
        self.deficit_at(x) + Jet::constant(top - self.params.top())
    }

    fn period(&self) -> Option<f64> {
        Some(2.0)
    }
}

/// The profile `q` with the default constants and the given flatness exponent.
pub fn make_q(flatness_alpha: f64) -> Result<ProfileFunction> {
    make_q_with(QParams { alpha: flatness_alpha, ..QParams::default() })
}

pub fn make_q_with(params: QParams) -> Result<ProfileFunction> {
    params.validate()?;
    Ok(ProfileFunction::new("q", FlatQ { params }))
}

/// `q̃(x) = c0 + c1 (1 - g(min(5|x̄|, 1))) - beta s(45 (|x̄| - 1/5))`.
#[derive(Clone, Copy, Debug)]
struct QTilde {
    params: QParams,
    beta: f64,
}

impl QTilde {
    fn deficit_at(&self, x: f64) -> Jet {
        let (r, sign) = even_argument(x);
        let p = &self.params;
        let inner = if r < 0.2 {
            p.step().apply(Jet::new(5.0 * r, 5.0, 0.0))
        } else {
            Jet::ONE
        };
        let drop = if r > 0.2 {
            SmoothStep::STANDARD.apply(Jet::new((r - 0.2) * 45.0, 45.0, 0.0))
        } else {
            Jet::ZERO
        };
        unfold_even(inner.scale(p.c1) + drop.scale(self.beta), sign)
    }
}

impl Profile for QTilde {
    fn jet(&self, x: f64) -> Jet {
        Jet::constant(self.params.top()) - self.deficit_at(x)
    }

    fn top(&self) -> Option<f64> {
        Some(self.params.top())
    }

    fn deficit(&self, x: f64, top: f64) -> Jet {
        self.deficit_at(x) + Jet::constant(top - self.params.top())
    }

    fn period(&self) -> Option<f64> {
        Some(2.0)
    }

    fn features(&self) -> Vec<Feature> {
        vec![
            Feature { lo: 0.2, hi: 2.0 / 9.0, scale: 1.0 / 45.0 / 50.0 },
            Feature { lo: -2.0 / 9.0, hi: -0.2, scale: 1.0 / 45.0 / 50.0 },
        ]
    }
}

/// The lower comparison profile built from `q`'s parameters.
pub fn make_q_tilde(params: QParams) -> Result<ProfileFunction> {
    params.validate()?;
    Ok(ProfileFunction::new("q_tilde", QTilde { params, beta: 0.5 * params.c0 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_plateau_and_support() {
        let psi = make_psi();
        assert_eq!(psi.eval(0.6), 1.0);
        assert_eq!(psi.eval(0.0), 0.0);
        assert_eq!(psi.eval(-0.6), psi.eval(0.6));
        assert_eq!(psi.eval(0.25), 0.0);
        assert_eq!(psi.eval(1.0), 0.0);
        assert!(psi.eval(0.3) > 0.0 && psi.eval(0.3) < 1.0);
    }

    #[test]
    fn phi_values() {
        let phi0 = make_phi_t(0.0).unwrap();
        assert_eq!(phi0.eval(0.6), 0.0);
        for t in [0.0, 0.5, 1.0, 2.7] {
            assert_eq!(make_phi_t(t).unwrap().eval(1.0), 1.0);
        }
    }

    #[test]
    fn q_shape() {
        let q = make_q_with(QParams::default()).unwrap();
        assert_eq!(q.eval(0.37), q.eval(-0.37));
        assert!(q.eval(0.25) > q.eval(0.5));
        assert_eq!(q.eval(0.0), 2.0);
        assert_eq!(q.eval(1.0), 1.0);
    }

    #[test]
    fn q_tilde_cases() {
        let p = QParams::default();
        let q = make_q_with(p).unwrap();
        let qt = make_q_tilde(p).unwrap();
        assert_eq!(qt.eval(0.1), q.eval(0.5));
        assert!(qt.eval(0.21) < q.eval(0.84));
        assert!(qt.eval(0.9) < q.eval(1.0));
    }
}
