use std::fmt;
use std::sync::Arc;

use crate::jet::Jet;

/// A window in which a profile varies on a length scale much shorter than
/// its period. ODE steppers use these to cap their step inside the window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Feature {
    pub lo: f64,
    pub hi: f64,
    pub scale: f64,
}

/// A real function of one variable evaluated together with its first two
/// derivatives.
pub trait Profile: Send + Sync {
    fn jet(&self, x: f64) -> Jet;

    /// Known supremum of the function, if the profile has one in closed form.
    fn top(&self) -> Option<f64> {
        None
    }

    /// `top - f(x)` evaluated without cancellation where possible. Profiles
    /// that are very flat near their maximum override this.
    fn deficit(&self, x: f64, top: f64) -> Jet {
        Jet::constant(top) - self.jet(x)
    }

    fn period(&self) -> Option<f64> {
        None
    }

    /// Open intervals outside of which the function vanishes, if known.
    fn support_hint(&self) -> Vec<(f64, f64)> {
        Vec::new()
    }

    /// Fine-scale windows. For periodic profiles they are given inside the
    /// fundamental domain `[-p/2, p/2]` and repeat with the period.
    fn features(&self) -> Vec<Feature> {
        Vec::new()
    }
}

/// Shared, immutable handle to a [`Profile`].
#[derive(Clone)]
pub struct ProfileFunction {
    name: String,
    top: f64,
    inner: Arc<dyn Profile>,
}

impl fmt::Debug for ProfileFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProfileFunction")
            .field("name", &self.name)
            .field("period", &self.period())
            .finish()
    }
}

impl ProfileFunction {
    pub fn new(name: impl Into<String>, profile: impl Profile + 'static) -> Self {
        let top = match profile.top() {
            Some(t) => t,
            None => {
                let half = profile.period().map_or(4.0, |p| p / 2.0);
                (0..=8192)
                    .map(|i| profile.jet(-half + 2.0 * half * i as f64 / 8192.0).v)
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        };
        ProfileFunction { name: name.into(), top, inner: Arc::new(profile) }
    }

    /// Wraps a jet-valued closure.
    pub fn from_fn<F>(name: impl Into<String>, period: Option<f64>, f: F) -> Self
    where
        F: Fn(f64) -> Jet + Send + Sync + 'static,
    {
        Self::new(name, FnProfile { f, period })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), Constant(c))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn jet(&self, x: f64) -> Jet {
        self.inner.jet(x)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.inner.jet(x).v
    }

    /// Reference value used by [`ProfileFunction::deficit`]; equals the
    /// supremum for the library profiles.
    pub fn top(&self) -> f64 {
        self.top
    }

    /// `top() - f(x)` with its derivatives.
    #[inline]
    pub fn deficit(&self, x: f64) -> Jet {
        self.inner.deficit(x, self.top)
    }

    pub fn derivative1(&self, x: f64) -> f64 {
        self.inner.jet(x).d1
    }

    pub fn derivative2(&self, x: f64) -> f64 {
        self.inner.jet(x).d2
    }

    pub fn period(&self) -> Option<f64> {
        self.inner.period()
    }

    pub fn support_hint(&self) -> Vec<(f64, f64)> {
        self.inner.support_hint()
    }

    pub fn features(&self) -> Vec<Feature> {
        self.inner.features()
    }

    /// Features that intersect `[a, b]`, with periodic copies unrolled.
    pub fn features_in(&self, a: f64, b: f64) -> Vec<Feature> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let base = self.features();
        let mut out = Vec::new();
        match self.period() {
            None => out.extend(base.into_iter().filter(|f| f.hi > lo && f.lo < hi)),
            Some(p) => {
                let n0 = ((lo - p) / p).floor() as i64;
                let n1 = ((hi + p) / p).ceil() as i64;
                for n in n0..=n1 {
                    let shift = n as f64 * p;
                    for f in &base {
                        let g = Feature { lo: f.lo + shift, hi: f.hi + shift, scale: f.scale };
                        if g.hi > lo && g.lo < hi {
                            out.push(g);
                        }
                    }
                }
            }
        }
        out
    }

    /// `c * self`.
    pub fn scaled(&self, c: f64) -> ProfileFunction {
        let inner = self.clone();
        ProfileFunction::new(format!("{c}*{}", self.name), Scaled { inner, c })
    }

    /// Minimum and maximum over `[a, b]` sampled on a uniform grid plus the
    /// interior of every feature window.
    pub fn sampled_range(&self, a: f64, b: f64, n: usize) -> (f64, f64, f64) {
        let mut min = f64::INFINITY;
        let mut argmin = a;
        let mut max = f64::NEG_INFINITY;
        let mut visit = |x: f64| {
            let v = self.eval(x);
            if v < min {
                min = v;
                argmin = x;
            }
            if v > max {
                max = v;
            }
        };
        for i in 0..=n {
            visit(a + (b - a) * i as f64 / n as f64);
        }
        for f in self.features_in(a, b) {
            let lo = f.lo.max(a);
            let hi = f.hi.min(b);
            let k = (((hi - lo) / f.scale).ceil() as usize * 8).clamp(8, 4096);
            for i in 0..=k {
                visit(lo + (hi - lo) * i as f64 / k as f64);
            }
        }
        (min, max, argmin)
    }
}

struct FnProfile<F> {
    f: F,
    period: Option<f64>,
}

impl<F> Profile for FnProfile<F>
where
    F: Fn(f64) -> Jet + Send + Sync,
{
    fn jet(&self, x: f64) -> Jet {
        (self.f)(x)
    }

    fn period(&self) -> Option<f64> {
        self.period
    }
}

struct Constant(f64);

impl Profile for Constant {
    fn jet(&self, _x: f64) -> Jet {
        Jet::constant(self.0)
    }

    fn top(&self) -> Option<f64> {
        Some(self.0)
    }

    fn deficit(&self, _x: f64, top: f64) -> Jet {
        Jet::constant(top - self.0)
    }
}

struct Scaled {
    inner: ProfileFunction,
    c: f64,
}

impl Profile for Scaled {
    fn jet(&self, x: f64) -> Jet {
        self.inner.jet(x).scale(self.c)
    }

    fn top(&self) -> Option<f64> {
        (self.c > 0.0).then(|| self.c * self.inner.top())
    }

    fn deficit(&self, x: f64, top: f64) -> Jet {
        if self.c > 0.0 {
            let own = self.inner.deficit(x).scale(self.c);
            own + Jet::constant(top - self.c * self.inner.top())
        } else {
            Jet::constant(top) - self.jet(x)
        }
    }

    fn period(&self) -> Option<f64> {
        self.inner.period()
    }

    fn support_hint(&self) -> Vec<(f64, f64)> {
        self.inner.support_hint()
    }

    fn features(&self) -> Vec<Feature> {
        self.inner.features()
    }
}

/// Reduces `x` into `[-p/2, p/2)` by subtracting an integer multiple of `p`.
/// For dyadic `x` and `p` every operation is exact, so `f(x + p) == f(x)`
/// holds bit for bit.
#[inline]
pub fn reduce_periodic(x: f64, p: f64) -> f64 {
    x - p * (x / p + 0.5).floor()
}

/// Jet of `|x̄|` where `x̄` is `x` reduced modulo 2, as used by every even
/// 2-periodic profile. Returns the jet and the sign that maps derivatives back.
#[inline]
pub(crate) fn even_argument(x: f64) -> (f64, f64) {
    let r = reduce_periodic(x, 2.0);
    if r < 0.0 {
        (-r, -1.0)
    } else {
        (r, 1.0)
    }
}

/// Maps a jet computed at `|x̄|` back to `x` for an even function.
#[inline]
pub(crate) fn unfold_even(j: Jet, sign: f64) -> Jet {
    Jet { v: j.v, d1: sign * j.d1, d2: j.d2 }
}

/// `a0 + Σ (a_k cos(π k x / L) + b_k sin(π k x / L))`, used for randomized
/// smooth coefficients in solver checks.
#[derive(Clone, Debug)]
pub struct TrigPolynomial {
    pub a0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    pub half_period: f64,
}

impl Profile for TrigPolynomial {
    fn jet(&self, x: f64) -> Jet {
        let w = std::f64::consts::PI / self.half_period;
        let mut out = Jet::constant(self.a0);
        for (k, (&a, &b)) in self.cos.iter().zip(self.sin.iter()).enumerate() {
            let kw = (k + 1) as f64 * w;
            let (s, c) = (kw * x).sin_cos();
            out = out + Jet::new(a * c + b * s, kw * (b * c - a * s), -kw * kw * (a * c + b * s));
        }
        out
    }

    fn period(&self) -> Option<f64> {
        Some(2.0 * self.half_period)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_is_exact_for_dyadic_shifts() {
        for k in -4000i64..4000 {
            let x = k as f64 / 1024.0;
            assert_eq!(reduce_periodic(x + 2.0, 2.0), reduce_periodic(x, 2.0));
        }
    }

    #[test]
    fn periodic_features_are_unrolled() {
        let f = ProfileFunction::new("bumps", Bumpy);
        let found = f.features_in(0.0, 4.0);
        // windows at ±0.1 repeat every 2
        let los: Vec<f64> = found.iter().map(|f| f.lo).collect();
        assert!(los.iter().any(|&l| (l - 0.05).abs() < 1e-12));
        assert!(los.iter().any(|&l| (l - 1.85).abs() < 1e-12));
        assert!(los.iter().any(|&l| (l - 3.85).abs() < 1e-12));
    }

    struct Bumpy;
    impl Profile for Bumpy {
        fn jet(&self, _x: f64) -> Jet {
            Jet::ONE
        }
        fn period(&self) -> Option<f64> {
            Some(2.0)
        }
        fn features(&self) -> Vec<Feature> {
            vec![
                Feature { lo: 0.05, hi: 0.15, scale: 0.01 },
                Feature { lo: -0.15, hi: -0.05, scale: 0.01 },
            ]
        }
    }

    #[test]
    fn trig_polynomial_derivatives() {
        let p = TrigPolynomial { a0: 2.0, cos: vec![0.3, 0.1], sin: vec![0.2, -0.05], half_period: 4.0 };
        let x = 1.3;
        let h = 1e-5;
        let j = p.jet(x);
        let fd1 = (p.jet(x + h).v - p.jet(x - h).v) / (2.0 * h);
        let fd2 = (p.jet(x + h).v - 2.0 * j.v + p.jet(x - h).v) / (h * h);
        assert!((j.d1 - fd1).abs() < 1e-8);
        assert!((j.d2 - fd2).abs() < 1e-4);
    }
}
