//! Second-order finite-difference cross-check of the first Dirichlet
//! eigenvalue, by Sturm-sequence bisection on the symmetrized pencil.

use crate::smooth_kit::ProfileFunction;

/// Number of eigenvalues of the symmetric tridiagonal `(d, e)` below `x`.
fn count_below(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut p = d[0] - x;
    if p < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let denom = if p == 0.0 { f64::EPSILON * e[i - 1].abs().max(1.0) } else { p };
        p = d[i] - x - e[i - 1] * e[i - 1] / denom;
        if p < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest `lambda` of `-u'' + m^2 u = lambda Q u` on `(0, 4)` with
/// `u(0) = u(4) = 0`, discretized on `n` interior points. The pencil
/// `(A, diag Q)` is reduced to `diag(Q)^{-1/2} A diag(Q)^{-1/2}`.
pub fn fd_first_eigenvalue(q: &ProfileFunction, m: u64, n: usize) -> f64 {
    let h = 4.0 / (n + 1) as f64;
    let m2 = (m as f64).powi(2);
    let qs: Vec<f64> = (1..=n).map(|i| q.eval(i as f64 * h)).collect();
    let d: Vec<f64> = qs.iter().map(|&qi| (2.0 / (h * h) + m2) / qi).collect();
    let e: Vec<f64> = qs.windows(2).map(|w| -1.0 / (h * h * (w[0] * w[1]).sqrt())).collect();
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    lo = lo.min(0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(&d, &e, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficient_converges_at_second_order() {
        let q = ProfileFunction::constant(1.0);
        let exact = std::f64::consts::PI.powi(2) / 16.0 + 4.0;
        let e1 = (fd_first_eigenvalue(&q, 2, 255) - exact).abs();
        let e2 = (fd_first_eigenvalue(&q, 2, 511) - exact).abs();
        assert!(e1 / e2 > 3.5 && e1 / e2 < 4.5, "{e1} {e2}");
    }
}
