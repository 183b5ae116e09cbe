//! The oscillation skeleton and the sign-alternating bump profile `h`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::profile::{even_argument, unfold_even, Feature, Profile, ProfileFunction};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quad;

/// Points `x_1 > ... > x_N` accumulating at `x_inf`, and the integral
/// magnitudes `a_1 ... a_{N-1}` of `h` over `(x_{i+1}, x_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeSpec {
    pub x_inf: f64,
    pub points: Vec<f64>,
    pub dominance_c: f64,
    pub amplitudes: Vec<f64>,
    /// Exponent `p` of the reparametrization `1 - (1 - s)^p` applied to the
    /// local coordinate before the mollifier; `p > 1` moves each bump's mass
    /// toward `x_{i+1}`, `p = 1` gives a symmetric bump.
    pub skew: f64,
}

/// Parameters of the default geometric skeleton.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkeletonParams {
    pub x_inf: f64,
    pub delta: f64,
    pub depth: usize,
    pub dominance_c: f64,
    /// `a_i = amplitude_ratio^i`.
    pub amplitude_ratio: f64,
    pub skew: f64,
}

impl Default for SkeletonParams {
    fn default() -> Self {
        SkeletonParams {
            x_inf: 0.6,
            delta: 0.01,
            depth: 12,
            dominance_c: 2.0,
            amplitude_ratio: 0.25,
            skew: 4.0,
        }
    }
}

impl CascadeSpec {
    /// `x_i = x_inf + 2^{-i}(3/4 - x_inf - delta)`, `a_i = r^i`.
    pub fn geometric(p: &SkeletonParams) -> Result<CascadeSpec> {
        let span = 0.75 - p.x_inf - p.delta;
        let points = (1..=p.depth).map(|i| p.x_inf + span * 0.5f64.powi(i as i32)).collect();
        let amplitudes = (1..p.depth).map(|i| p.amplitude_ratio.powi(i as i32)).collect();
        let spec = CascadeSpec {
            x_inf: p.x_inf,
            points,
            dominance_c: p.dominance_c,
            amplitudes,
            skew: p.skew,
        };
        spec.validate_shape()?;
        Ok(spec)
    }

    pub fn depth(&self) -> usize {
        self.points.len()
    }

    /// `x_i` with the 1-based indexing of the construction.
    pub fn x(&self, i: usize) -> f64 {
        self.points[i - 1]
    }

    /// `a_i`, 1-based.
    pub fn a(&self, i: usize) -> f64 {
        self.amplitudes[i - 1]
    }

    /// `(-1)^{i+1}`: the sign of `h` on `(x_{i+1}, x_i)`.
    pub fn sign(i: usize) -> f64 {
        if i % 2 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// Every structural requirement except dominance.
    pub fn validate_shape(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SpecViolation(m));
        if !(self.x_inf > 0.5 && self.x_inf < 0.75) {
            return bad(format!("x_inf = {} must lie in (1/2, 3/4)", self.x_inf));
        }
        if self.points.len() < 2 {
            return bad("at least two cascade points are needed".into());
        }
        if self.amplitudes.len() + 1 != self.points.len() {
            return bad(format!(
                "{} amplitudes for {} points; expected one per interval",
                self.amplitudes.len(),
                self.points.len()
            ));
        }
        for w in self.points.windows(2) {
            if w[1] >= w[0] {
                return bad(format!("points must be strictly decreasing: {} then {}", w[0], w[1]));
            }
        }
        for (i, &x) in self.points.iter().enumerate() {
            if !(x > self.x_inf && x < 0.75) {
                return bad(format!("x_{} = {x} outside (x_inf, 3/4)", i + 1));
            }
        }
        if let Some(a) = self.amplitudes.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return bad(format!("amplitude {a} is not positive"));
        }
        if !(self.dominance_c > 1.0) {
            return bad(format!("dominance constant {} must exceed 1", self.dominance_c));
        }
        if !(self.skew >= 1.0 && self.skew.is_finite()) {
            return bad(format!("skew {} must be at least 1", self.skew));
        }
        Ok(())
    }

    /// `a_i - C sum_{j>i} a_j` for `i = 1 ..= N-2`.
    pub fn dominance_margins(&self) -> Vec<f64> {
        let n = self.depth();
        let mut tail = 0.0;
        let mut out = vec![0.0; n.saturating_sub(2)];
        for i in (1..n).rev() {
            if i <= n - 2 {
                out[i - 1] = self.a(i) - self.dominance_c * tail;
            }
            tail += self.a(i);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        if let Some((i, m)) =
            self.dominance_margins().iter().enumerate().find(|(_, m)| **m < 0.0)
        {
            return Err(Error::SpecViolation(format!(
                "amplitudes fail dominance at i = {} (margin {m:e})",
                i + 1
            )));
        }
        Ok(())
    }
}

/// Deliberate departures from the sign/shape rules, used to probe how the
/// downstream certificates react.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mutation {
    /// 1-based interval indices whose bump sign is reversed.
    pub flip_sign: Vec<usize>,
    /// Reflect every bump inside its interval, moving its mass toward `x_i`.
    pub mirror_all: bool,
}

impl Mutation {
    pub fn is_identity(&self) -> bool {
        self.flip_sign.is_empty() && !self.mirror_all
    }
}

#[derive(Clone, Debug)]
struct Bump {
    lo: f64,
    hi: f64,
    /// Signed amplitude divided by the width-normalized integral.
    coeff: f64,
    mirrored: bool,
}

/// The mollifier `exp(-1/(1 - z^2))` with `z = 2v - 1`, `v = 1 - (1 - s)^p`,
/// as a jet in `s`.
#[inline]
fn skewed_mollifier(s: Jet, skew: f64) -> Jet {
    if s.v <= 0.0 || s.v >= 1.0 {
        return Jet::ZERO;
    }
    let v = if skew == 1.0 {
        s
    } else {
        let c = 1.0 - s.v;
        let cp = c.powf(skew);
        s.chain(1.0 - cp, skew * cp / c, -skew * (skew - 1.0) * cp / (c * c))
    };
    let p = v * (Jet::ONE - v);
    let e = -0.25 / p.v;
    if e < -745.0 {
        return Jet::ZERO;
    }
    // d/dp (-1/(4p)) = 1/(4p^2), d2 = -1/(2p^3)
    let arg = p.chain(e, 0.25 / (p.v * p.v), -0.5 / (p.v * p.v * p.v));
    let out = arg.exp();
    if out.d1.is_finite() && out.d2.is_finite() {
        out
    } else {
        Jet::ZERO
    }
}

/// Shared evaluation data of `h`.
#[derive(Debug)]
pub struct CascadeProfile {
    spec: CascadeSpec,
    bumps: Vec<Bump>,
    lo: f64,
    hi: f64,
}

impl CascadeProfile {
    pub fn new(spec: &CascadeSpec, mutation: &Mutation) -> Result<CascadeProfile> {
        spec.validate_shape()?;
        let g = spec.skew;
        let (unit, ok) = quad::gauss_legendre_converged(
            |s| skewed_mollifier(Jet::constant(s), g).v,
            0.0,
            1.0,
            64,
            1e-12,
        );
        if !ok {
            return Err(Error::QuadratureUnderResolved { lo: 0.0, hi: 1.0 });
        }
        let n = spec.depth();
        let bumps = (1..n)
            .map(|i| {
                let (lo, hi) = (spec.x(i + 1), spec.x(i));
                let flip = if mutation.flip_sign.contains(&i) { -1.0 } else { 1.0 };
                let signed = flip * CascadeSpec::sign(i) * spec.a(i);
                Bump { lo, hi, coeff: signed / (unit * (hi - lo)), mirrored: mutation.mirror_all }
            })
            .collect();
        Ok(CascadeProfile { spec: spec.clone(), bumps, lo: spec.x(n), hi: spec.x(1) })
    }

    pub fn spec(&self) -> &CascadeSpec {
        &self.spec
    }

    /// `h` at a nonnegative argument.
    #[inline]
    pub fn eval_positive(&self, r: f64) -> Jet {
        if r <= self.lo || r >= self.hi {
            return Jet::ZERO;
        }
        // bumps are ordered by decreasing position
        let idx = self.bumps.partition_point(|b| b.lo >= r);
        let Some(b) = self.bumps.get(idx) else {
            return Jet::ZERO;
        };
        if !(r > b.lo && r < b.hi) {
            return Jet::ZERO;
        }
        let w = b.hi - b.lo;
        let s = if b.mirrored {
            Jet::new((b.hi - r) / w, -1.0 / w, 0.0)
        } else {
            Jet::new((r - b.lo) / w, 1.0 / w, 0.0)
        };
        skewed_mollifier(s, self.spec.skew).scale(b.coeff)
    }

    /// `h(x)`, extended evenly.
    #[inline]
    pub fn eval(&self, x: f64) -> Jet {
        let (r, sign) = if x < 0.0 { (-x, -1.0) } else { (x, 1.0) };
        unfold_even(self.eval_positive(r), sign)
    }

    /// `H_t(x) = sum_n h(4^t (x + 2n))` with `scale = 4^t`.
    #[inline]
    pub fn eval_periodized(&self, x: f64, scale: f64) -> Jet {
        let (r, sign) = even_argument(x);
        let y = scale * r;
        if y <= self.lo || y >= self.hi {
            return Jet::ZERO;
        }
        let j = self.eval_positive(y);
        unfold_even(Jet::new(j.v, j.d1 * scale, j.d2 * scale * scale), sign)
    }

    /// Bump windows of `H_t` inside `[-1, 1]`, scaled by `1/scale`.
    pub fn features(&self, scale: f64) -> Vec<Feature> {
        let mut out = Vec::with_capacity(2 * self.bumps.len());
        for b in &self.bumps {
            let (lo, hi) = (b.lo / scale, b.hi / scale);
            let cap = (hi - lo) / 50.0;
            out.push(Feature { lo, hi, scale: cap });
            out.push(Feature { lo: -hi, hi: -lo, scale: cap });
        }
        out
    }

    /// Maximum of `|h|` over its support, found by sampling each bump.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for b in &self.bumps {
            for k in 1..400 {
                let r = b.lo + (b.hi - b.lo) * k as f64 / 400.0;
                m = m.max(self.eval_positive(r).v.abs());
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
struct HProfile(Arc<CascadeProfile>);

impl Profile for HProfile {
    fn jet(&self, x: f64) -> Jet {
        self.0.eval(x)
    }

    fn support_hint(&self) -> Vec<(f64, f64)> {
        vec![(-0.75, -0.5), (0.5, 0.75)]
    }

    fn features(&self) -> Vec<Feature> {
        self.0.features(1.0)
    }
}

#[derive(Debug, Clone)]
struct HtProfile {
    h: Arc<CascadeProfile>,
    scale: f64,
}

impl Profile for HtProfile {
    fn jet(&self, x: f64) -> Jet {
        self.h.eval_periodized(x, self.scale)
    }

    fn period(&self) -> Option<f64> {
        Some(2.0)
    }

    fn features(&self) -> Vec<Feature> {
        self.h.features(self.scale)
    }
}

/// The even bump profile `h` for a validated skeleton.
pub fn make_h(spec: &CascadeSpec) -> Result<ProfileFunction> {
    spec.validate()?;
    Ok(ProfileFunction::new("h", HProfile(Arc::new(CascadeProfile::new(spec, &Mutation::default())?))))
}

/// `h` with deliberate rule violations. Dominance is not enforced.
pub fn make_h_mutated(spec: &CascadeSpec, mutation: &Mutation) -> Result<ProfileFunction> {
    Ok(ProfileFunction::new("h_mutated", HProfile(Arc::new(CascadeProfile::new(spec, mutation)?))))
}

/// `H_t(x) = sum_n h(4^t (x + 2n))`.
pub fn make_big_h_t(cascade: Arc<CascadeProfile>, t: f64) -> ProfileFunction {
    ProfileFunction::new(format!("H_{t}"), HtProfile { h: cascade, scale: 4f64.powf(t) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_spec() -> CascadeSpec {
        CascadeSpec::geometric(&SkeletonParams::default()).unwrap()
    }

    #[test]
    fn geometric_dominance_margins() {
        let spec = default_spec();
        spec.validate().unwrap();
        for (k, m) in spec.dominance_margins().iter().enumerate() {
            let i = k + 1;
            let tail: f64 = (i + 1..spec.depth()).map(|j| 0.25f64.powi(j as i32)).sum();
            assert!((m - (spec.a(i) - 2.0 * tail)).abs() < 1e-15);
            assert!(*m >= spec.a(i) / 6.0);
        }
    }

    #[test]
    fn equal_amplitudes_fail() {
        let mut spec = default_spec();
        spec.amplitudes.iter_mut().for_each(|a| *a = 1.0);
        assert!(matches!(make_h(&spec), Err(Error::SpecViolation(_))));
    }

    #[test]
    fn integrals_and_signs() {
        let spec = default_spec();
        let h = make_h(&spec).unwrap();
        assert_eq!(h.eval(0.2), 0.0);
        for i in 1..spec.depth() {
            let (lo, hi) = (spec.x(i + 1), spec.x(i));
            let (v, ok) = quad::gauss_legendre_converged(|x| h.eval(x), lo, hi, 64, 1e-13);
            assert!(ok);
            assert!((v - CascadeSpec::sign(i) * spec.a(i)).abs() < 1e-10 * spec.a(i), "i={i} {v}");
            let mid = h.eval(0.5 * (lo + hi));
            assert!(mid * CascadeSpec::sign(i) > 0.0);
        }
    }

    #[test]
    fn bump_derivatives() {
        let spec = default_spec();
        let cp = CascadeProfile::new(&spec, &Mutation::default()).unwrap();
        let (lo, hi) = (spec.x(3), spec.x(2));
        for k in 1..50 {
            let x = lo + (hi - lo) * k as f64 / 50.0;
            let e = 1e-7 * (hi - lo);
            let j = cp.eval(x);
            let fd1 = (cp.eval(x + e).v - cp.eval(x - e).v) / (2.0 * e);
            let fd2 = (cp.eval(x + e).d1 - cp.eval(x - e).d1) / (2.0 * e);
            assert!((j.d1 - fd1).abs() <= 1e-5 * (1.0 + j.d1.abs()));
            assert!((j.d2 - fd2).abs() <= 1e-4 * (1.0 + j.d2.abs()));
        }
    }
}
