//! The potential of an eigenfunction inside the window of one layer.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::smooth_kit::{CascadeProfile, ProfileFunction};
use crate::sturm_liouville::{EigenResult, Potential};

/// `K(x) = r + lambda tau H(4^t x)` on the plateau of the layer at `t`,
/// with `r = mu - lambda D(4^{-t})`. Forming `r` once avoids the
/// cancellation in `mu - lambda D(x)` when `r` is tiny.
#[derive(Clone, Debug)]
pub struct CascadeWindow {
    pub r: f64,
    pub lambda_tau: f64,
    pub scale: f64,
    pub h: Arc<CascadeProfile>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub r: f64,
    pub lambda_tau: f64,
    pub t: f64,
    /// `r / mu`.
    pub relative_r: f64,
}

impl CascadeWindow {
    /// `base` is the profile without layers; `t` and `tau` describe the layer.
    pub fn new(e: &EigenResult, base: &ProfileFunction, h: Arc<CascadeProfile>, t: f64, tau: f64) -> CascadeWindow {
        let scale = 4f64.powf(t);
        let d = base.deficit(1.0 / scale).v + (e.top - base.top());
        CascadeWindow { r: e.excess - e.lambda * d, lambda_tau: e.lambda * tau, scale, h }
    }

    #[inline]
    pub fn k(&self, x: f64) -> f64 {
        self.r + self.lambda_tau * self.h.eval_periodized(x, self.scale).v
    }

    /// Rescaled nodes `4^{-t} x_i`.
    pub fn nodes(&self) -> Vec<f64> {
        self.h.spec().points.iter().map(|x| x / self.scale).collect()
    }

    /// `4^{-t} x_inf`.
    pub fn x_star(&self) -> f64 {
        self.h.spec().x_inf / self.scale
    }

    /// Largest `|K_window - K_full| / mu` over `n + 1` points of `[a, b]`,
    /// with `K_full = mu - lambda D_Q` from the eigenpair itself.
    pub fn agreement(&self, e: &EigenResult, a: f64, b: f64, n: usize) -> f64 {
        (0..=n)
            .map(|k| {
                let x = a + (b - a) * k as f64 / n as f64;
                (self.k(x) - e.potential.k(x)).abs() / e.excess.abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn summary(&self, mu: f64) -> WindowSummary {
        WindowSummary { r: self.r, lambda_tau: self.lambda_tau, t: self.scale.log(4.0), relative_r: self.r / mu }
    }
}

impl Potential for CascadeWindow {
    #[inline]
    fn k(&self, x: f64) -> f64 {
        CascadeWindow::k(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth_kit::{make_q_s_tau, make_q_with, CascadeSpec, Mutation, QParams, SiteAssignment, SkeletonParams};
    use crate::sturm_liouville::{first_dirichlet_eigenvalue, EigenOptions};

    #[test]
    fn matches_full_potential_on_the_plateau() {
        let q = make_q_with(QParams::default()).unwrap();
        let spec = CascadeSpec::geometric(&SkeletonParams { depth: 10, ..SkeletonParams::default() }).unwrap();
        let h = Arc::new(CascadeProfile::new(&spec, &Mutation::default()).unwrap());
        let (t, tau) = (1.4, 2e-4);
        let qs = make_q_s_tau(&q, &h, &SiteAssignment::new(vec![t], vec![tau]).unwrap()).unwrap();
        let e = first_dirichlet_eigenvalue(&qs, 40, &EigenOptions::default()).unwrap();
        let w = CascadeWindow::new(&e, &q, h, t, tau);
        for k in 0..=100 {
            let x = 4f64.powf(-t) * (0.55 + 0.15 * k as f64 / 100.0);
            let full = e.excess - e.lambda * qs.deficit(x).v;
            assert!((w.k(x) - full).abs() < 1e-12 * e.excess, "{x}");
        }
        assert!((w.x_star() * 4f64.powf(t) - 0.6).abs() < 1e-15);
        let s = 4f64.powf(-t);
        assert!(w.agreement(&e, 0.5 * s, 0.75 * s, 1000) < 1e-12);
    }
}
