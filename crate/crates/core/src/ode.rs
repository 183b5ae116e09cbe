//! Adaptive Dormand-Prince 5(4) integration and step-cap segmentation.

use crate::error::{Error, Result};
use crate::smooth_kit::Feature;

/// Pieces of an interval, each with its own maximal step.
#[derive(Clone, Debug, PartialEq)]
pub struct Segments {
    /// Boundaries in the direction of integration; `caps[k]` applies between
    /// `points[k]` and `points[k + 1]`.
    pub points: Vec<f64>,
    pub caps: Vec<f64>,
}

impl Segments {
    /// Splits `[a, b]` (either orientation) at every feature boundary. Each
    /// piece is capped by the finest feature covering it and by `default_cap`.
    pub fn new(a: f64, b: f64, features: &[Feature], default_cap: f64) -> Segments {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mut pts = vec![lo, hi];
        for f in features {
            for p in [f.lo, f.hi] {
                if p > lo && p < hi {
                    pts.push(p);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        // boundaries within a sliver of an endpoint or of each other would
        // force steps below the noise floor of the right-hand side
        let sliver = 1e-9 * (hi - lo);
        let mut kept = vec![lo];
        for &p in &pts[1..pts.len() - 1] {
            if p - kept[kept.len() - 1] > sliver && hi - p > sliver {
                kept.push(p);
            }
        }
        kept.push(hi);
        let mut pts = kept;
        let mut caps: Vec<f64> = pts
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                features
                    .iter()
                    .filter(|f| f.lo <= mid && mid <= f.hi)
                    .map(|f| f.scale)
                    .fold(default_cap, f64::min)
            })
            .collect();
        if a > b {
            pts.reverse();
            caps.reverse();
        }
        Segments { points: pts, caps }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.points.windows(2).zip(&self.caps).map(|(w, &c)| (w[0], w[1], c))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dp45Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Measure errors against the largest magnitude seen so far in each
    /// component rather than the current one.
    pub running_scale: bool,
}

impl Default for Dp45Options {
    fn default() -> Self {
        Dp45Options { rtol: 1e-11, atol: 1e-13, max_steps: 5_000_000, running_scale: false }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for &(c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(x, y)` from `x0` to `x1` across the given segments,
/// calling `observe(x, y)` after every accepted step (and once at the
/// start). Returns the state at `x1`.
pub fn integrate<const N: usize, F, O>(
    f: F,
    x0: f64,
    y0: [f64; N],
    segments: &Segments,
    opts: &Dp45Options,
    mut observe: O,
) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N]),
{
    let mut y = y0;
    let mut x = x0;
    let mut seen = y0.map(f64::abs);
    observe(x, &y);
    let mut steps = 0usize;
    let mut h_prev: Option<f64> = None;
    let mut err_prev: f64 = 1e-4;
    for (a, b, cap) in segments.iter() {
        debug_assert!((x - a).abs() <= 1e-12 * (1.0 + a.abs()));
        x = a;
        let dir = (b - a).signum();
        let len = (b - a).abs();
        if len == 0.0 {
            continue;
        }
        let mut h = h_prev.unwrap_or(len).min(cap).min(len);
        let mut k1 = f(x, &y);
        loop {
            let remaining = (b - x).abs();
            if remaining <= 0.0 {
                break;
            }
            let last = h >= remaining;
            let hs = if last { remaining } else { h } * dir;
            let k2 = f(x + C2 * hs, &axpy(&y, &[(A21, &k1)], hs));
            let k3 = f(x + C3 * hs, &axpy(&y, &[(A31, &k1), (A32, &k2)], hs));
            let k4 = f(x + C4 * hs, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs));
            let k5 = f(
                x + C5 * hs,
                &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs),
            );
            let k6 = f(
                x + hs,
                &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], hs),
            );
            let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], hs);
            let x_new = if last { b } else { x + hs };
            let k7 = f(x_new, &y_new);
            let mut err: f64 = 0.0;
            for i in 0..N {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let mut mag = y[i].abs().max(y_new[i].abs());
                if opts.running_scale {
                    mag = mag.max(seen[i]);
                }
                let sc = opts.atol + opts.rtol * mag;
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                return Err(Error::Integration { x, reason: "non-finite derivative" });
            }
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::Integration { x, reason: "step budget exhausted" });
            }
            if err <= 1.0 {
                x = x_new;
                y = y_new;
                for i in 0..N {
                    seen[i] = seen[i].max(y[i].abs());
                }
                k1 = k7;
                observe(x, &y);
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0)
                };
                err_prev = err.max(1e-4);
                if !last {
                    h_prev = Some(h);
                }
                h = (h * fac).min(cap);
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < 1e-15 * (1.0 + x.abs()) {
                    return Err(Error::Integration { x, reason: "step size underflow" });
                }
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let seg = Segments::new(0.0, 10.0, &[], 0.5);
        let y = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            &seg,
            &Dp45Options::default(),
            |_, _| {},
        )
        .unwrap();
        assert!((y[0] - 10f64.sin()).abs() < 1e-9);
        assert!((y[1] - 10f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn backward_and_segmented() {
        let feats = [Feature { lo: 0.3, hi: 0.4, scale: 1e-3 }];
        let seg = Segments::new(1.0, 0.0, &feats, 0.1);
        assert_eq!(seg.points, vec![1.0, 0.4, 0.3, 0.0]);
        assert_eq!(seg.caps, vec![0.1, 1e-3, 0.1]);
        let mut xs = Vec::new();
        let y = integrate(
            |x, _: &[f64; 1]| [x * x],
            1.0,
            [1.0 / 3.0],
            &seg,
            &Dp45Options::default(),
            |x, _| xs.push(x),
        )
        .unwrap();
        assert!(y[0].abs() < 1e-12);
        let inside = xs.windows(2).filter(|w| w[0] <= 0.4 && w[1] >= 0.3).count();
        assert!(inside >= 100);
    }
}
