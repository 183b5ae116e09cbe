//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Result of a bracketed root search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    /// Final bracket `[lo, hi]` with a sign change (or an exact zero).
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

/// Brent's method on `[a, b]` with `f(a)` and `f(b)` of opposite signs.
/// Stops when the bracket is narrower than `xtol(x)` at the current best
/// point, or `f` vanishes exactly.
pub fn brent<F, T>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, xtol: T, max_iter: usize) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
    T: Fn(f64) -> f64,
{
    if fa == 0.0 {
        return Ok(Root { x: a, fx: 0.0, lo: a, hi: a, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: 0.0, lo: b, hi: b, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoConvergence { what: "root bracket", iterations: 0, residual: fa.min(fb) });
    }
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for it in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 0.5 * xtol(b).max(4.0 * f64::EPSILON * b.abs());
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            let (lo, hi) = if b < c { (b, c) } else { (c, b) };
            return Ok(Root { x: b, fx: fb, lo, hi, iterations: it });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::NoConvergence { what: "brent", iterations: max_iter, residual: fb })
}

/// Plain bisection for a monotone predicate: returns the boundary between
/// `lo` (where `pred` is false) and `hi` (where it is true).
pub fn bisect_predicate<P: FnMut(f64) -> bool>(mut pred: P, mut lo: f64, mut hi: f64, steps: usize) -> (f64, f64) {
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let r = brent(f, 0.0, 3.0, -2.0, 25.0, |_| 1e-15, 200).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn predicate_boundary() {
        let (lo, hi) = bisect_predicate(|x| x * x > 2.0, 0.0, 2.0, 80);
        assert!(lo < 2f64.sqrt() && hi >= 2f64.sqrt() && hi - lo < 1e-15);
    }
}
