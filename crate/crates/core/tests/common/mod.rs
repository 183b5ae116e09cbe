//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use torus_cascade::smooth_kit::ProfileFunction;

/// Number of negative pivots of the tridiagonal `A - sigma B`, with `A` the
/// second-order discretization of `-u'' + m^2 u` on `n` interior points of
/// `(0, 4)` and `B = diag(Q)`. By Sylvester's law of inertia this counts the
/// generalized eigenvalues below `sigma`.
fn negative_pivots(q: &[f64], h: f64, m2: f64, sigma: f64) -> usize {
    let off = -1.0 / (h * h);
    let mut count = 0;
    let mut pivot = 0.0;
    for (i, &qi) in q.iter().enumerate() {
        let diag = 2.0 / (h * h) + m2 - sigma * qi;
        pivot = if i == 0 {
            diag
        } else {
            let p = if pivot == 0.0 { 1e-300 } else { pivot };
            diag - off * off / p
        };
        if pivot < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of the `points`-point finite-difference pencil, by
/// bisection on the inertia count.
pub fn fd_oracle(q: &ProfileFunction, m: u64, points: usize) -> f64 {
    let h = 4.0 / (points + 1) as f64;
    let m2 = (m * m) as f64;
    let qs: Vec<f64> = (1..=points).map(|i| q.eval(i as f64 * h)).collect();
    let qmin = qs.iter().copied().fold(f64::INFINITY, f64::min);
    // Rayleigh quotient of the discrete sine bounds the smallest eigenvalue
    let mut hi = (4.0 / (h * h) * (std::f64::consts::PI * h / 8.0).sin().powi(2) + m2) / qmin * 1.01 + 1.0;
    let mut lo = 0.0;
    while negative_pivots(&qs, h, m2, hi) == 0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if negative_pivots(&qs, h, m2, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
