//! Dominance of the interval integrals of `K` over their tails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::smooth_kit::{CascadeSpec, ProfileFunction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub strong: bool,
    pub c: f64,
    pub holds: bool,
    /// `int_{x_{i+1}}^{x_i} K` for `i = 1 ..= N-1`.
    pub integrals: Vec<f64>,
    /// `int_{x_{i+1}}^{x_i} (x_i - x) K / (x_i - x_{i+1})`.
    pub weighted: Vec<f64>,
    /// Margin for `i = 1 ..= N-2`: head minus `C` times the tail.
    pub margins: Vec<f64>,
    pub failing: Vec<usize>,
}

/// `int_a^b f` by Gauss-Legendre with panel doubling until successive
/// estimates agree to `rel` of `int_a^b |f|`.
pub(crate) fn resolved_integral<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel: f64) -> Result<f64> {
    let mut panels = 16;
    let mut prev = gauss_legendre(&f, a, b, panels);
    for _ in 0..14 {
        panels *= 2;
        let next = gauss_legendre(&f, a, b, panels);
        let scale = gauss_legendre(|x| f(x).abs(), a, b, panels);
        if (next - prev).abs() <= rel * scale || scale == 0.0 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureUnderResolved { lo: a, hi: b })
}

/// Checks `|int_{x_{i+1}}^{x_i} K| >= C sum_{j>i} |int_{x_{j+1}}^{x_j} K|`
/// for `i <= N-2`, or with `strong` the weighted form whose head is
/// `|int (x_i - x) K| / (x_i - x_{i+1})`. `nodes` holds `x_1 > ... > x_N`.
pub fn verify_dominance<K: Fn(f64) -> f64 + Sync>(k: &K, nodes: &[f64], c: f64, strong: bool) -> Result<DominanceReport> {
    let n = nodes.len();
    if n < 3 {
        return Err(Error::SpecViolation(format!("need at least three nodes, got {n}")));
    }
    let mut integrals = Vec::with_capacity(n - 1);
    let mut weighted = Vec::with_capacity(n - 1);
    for w in nodes.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        integrals.push(resolved_integral(k, lo, hi, 1e-10)?);
        let wt = resolved_integral(|x| (hi - x) * k(x), lo, hi, 1e-10)?;
        weighted.push(wt / (hi - lo));
    }
    let mut margins = Vec::with_capacity(n - 2);
    let mut failing = Vec::new();
    for i in 0..n - 2 {
        let tail: f64 = integrals[i + 1..].iter().map(|v| v.abs()).sum();
        let head = if strong { weighted[i].abs() } else { integrals[i].abs() };
        let m = head - c * tail;
        if !(m > 0.0) {
            failing.push(i + 1);
        }
        margins.push(m);
    }
    Ok(DominanceReport { strong, c, holds: failing.is_empty(), integrals, weighted, margins, failing })
}

/// [`verify_dominance`] for a profile on the nodes of a skeleton.
pub fn verify_dominance_spec(k: &ProfileFunction, spec: &CascadeSpec, strong: bool) -> Result<DominanceReport> {
    verify_dominance(&|x| k.eval(x), &spec.points, spec.dominance_c, strong)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth_kit::{make_h, make_h_mutated, Mutation, SkeletonParams};

    fn spec(depth: usize) -> CascadeSpec {
        CascadeSpec::geometric(&SkeletonParams { depth, ..SkeletonParams::default() }).unwrap()
    }

    #[test]
    fn default_h_dominates_with_sixth_margin() {
        let s = spec(12);
        let h = make_h(&s).unwrap();
        let weak = verify_dominance_spec(&h, &s, false).unwrap();
        assert!(weak.holds);
        for (i, m) in weak.margins.iter().enumerate() {
            assert!(*m >= s.a(i + 1) / 6.0, "i = {} margin {m}", i + 1);
            assert!((weak.integrals[i].abs() - s.a(i + 1)).abs() < 1e-9 * s.a(i + 1));
        }
        let strong = verify_dominance_spec(&h, &s, true).unwrap();
        assert!(strong.holds, "{:?}", strong.failing);
        for (a, b) in strong.margins.iter().zip(&weak.margins) {
            assert!(a < b);
        }
    }

    #[test]
    fn equal_amplitudes_fail_everywhere() {
        let mut s = spec(10);
        s.amplitudes = vec![1.0; 9];
        let h = make_h_mutated(&s, &Mutation::default()).unwrap();
        let r = verify_dominance_spec(&h, &s, false).unwrap();
        assert_eq!(r.failing, (1..=8).collect::<Vec<_>>());
    }

    #[test]
    fn mirrored_bumps_keep_weak_lose_strong() {
        let s = spec(12);
        let h = make_h_mutated(&s, &Mutation { mirror_all: true, ..Mutation::default() }).unwrap();
        assert!(verify_dominance_spec(&h, &s, false).unwrap().holds);
        assert!(!verify_dominance_spec(&h, &s, true).unwrap().holds);
    }
}
