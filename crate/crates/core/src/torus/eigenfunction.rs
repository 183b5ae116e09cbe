//! `phi(x, y) = F(x) cos(my)` or `F(x) sin(my)` and its separated residual.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smooth_kit::ProfileFunction;
use crate::quad;
use crate::sturm_liouville::{Potential, Solution1D};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cos,
    Sin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Largest `|Delta_g phi + lambda phi|` on the sample grid.
    pub max_residual: f64,
    pub max_phi: f64,
    /// `max_residual / max_phi`.
    pub relative: f64,
    /// Largest deviation between the two-dimensional residual and the
    /// one-dimensional residual times `|cos(my)|` (or `|sin(my)|`).
    pub separation_defect: f64,
    pub points: usize,
    pub worst_x: f64,
}

/// A separated eigenfunction of the Laplace-Beltrami operator of
/// `Q(x)(dx^2 + dy^2)`, with `Delta_g = Q^{-1}(d_xx + d_yy)`.
#[derive(Clone)]
pub struct TorusEigenfunction {
    pub m: u64,
    pub lambda: f64,
    pub phase: Phase,
    /// `F(x_star)`, the level of interest.
    pub level: f64,
    pub x_star: f64,
    pub q: ProfileFunction,
    pub profile: Arc<dyn Solution1D + Send>,
    pub residual: ResidualReport,
}

impl std::fmt::Debug for TorusEigenfunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusEigenfunction")
            .field("m", &self.m)
            .field("lambda", &self.lambda)
            .field("phase", &self.phase)
            .field("level", &self.level)
            .field("x_star", &self.x_star)
            .field("residual", &self.residual)
            .finish()
    }
}

impl TorusEigenfunction {
    fn trig(&self, y: f64) -> (f64, f64) {
        let my = self.m as f64 * y;
        match self.phase {
            Phase::Cos => (my.cos(), -(self.m as f64) * my.sin()),
            Phase::Sin => (my.sin(), self.m as f64 * my.cos()),
        }
    }

    /// `phi(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.profile.eval(x)?[0] * self.trig(y).0)
    }

    /// `(phi, phi_x, phi_y)`.
    pub fn gradient(&self, x: f64, y: f64) -> Result<[f64; 3]> {
        let [f, fp, _] = self.profile.eval(x)?;
        let (g, gp) = self.trig(y);
        Ok([f * g, fp * g, f * gp])
    }

    /// `phi(x, y) - level`, formed without cancellation when `level` equals
    /// `F(x_star)` and the profile stores `F - level` directly.
    pub fn offset(&self, x: f64, y: f64, level: f64) -> Result<f64> {
        let (g, _) = self.trig(y);
        if self.phase == Phase::Cos {
            // F g - L = (F - L) g - L (1 - g), with 1 - cos(my) = 2 sin^2(my/2)
            let s = (0.5 * self.m as f64 * y).sin();
            let one_minus = 2.0 * s * s;
            return Ok(self.profile.offset(x, level)? * g - level * one_minus);
        }
        Ok(self.profile.eval(x)?[0] * g - level)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.profile.domain()
    }
}

/// Cell-averaged residual of `F'' + K F = 0` over `[x - h, x + h]`:
/// `([F']_{x-h}^{x+h} + int K F) / 2h`. The jump in `F'` comes from one
/// consistent pass of the solution; the integral uses Gauss-Legendre panels
/// no wider than the finest feature of `q` they touch.
pub fn cell_residual(
    f: &dyn Solution1D,
    q: &ProfileFunction,
    k: &dyn Potential,
    x: f64,
    h: f64,
) -> Result<f64> {
    let (a, b) = (x - h, x + h);
    let ends = f.states_along(&[a, b])?;
    let mut cuts = vec![a, b];
    for feat in q.features_in(a, b) {
        cuts.extend([feat.lo, feat.hi].into_iter().filter(|p| *p > a && *p < b));
    }
    cuts.sort_by(f64::total_cmp);
    let mut integral = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let scale = q.features_in(mid, mid).iter().map(|f| f.scale).fold(hi - lo, f64::min);
        let panels = ((hi - lo) / scale).ceil().clamp(2.0, 4096.0) as usize;
        let mut err = None;
        let v = quad::gauss_legendre(
            |t| match f.eval(t) {
                Ok([u, _, _]) => k.k(t) * u,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            lo,
            hi,
            panels,
        );
        if let Some(e) = err {
            return Err(e);
        }
        integral += v;
    }
    Ok((ends[1][1] - ends[0][1] + integral) / (2.0 * h))
}

/// Lifts `F` to `phi = F(x) cos(my)` (or `sin`) with eigenvalue `lambda` and
/// checks `Delta_g phi + lambda phi = 0` on a `nx x ny` grid over
/// `[x_lo, x_hi] x [0, 2 pi)`, in cell-averaged form with half-width `h` in
/// `x`; the `y` part is exact. `potential` is `K = lambda Q - m^2` in any
/// better conditioned form; `None` forms it from `q`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_eigenfunction(
    q: &ProfileFunction,
    m: u64,
    lambda: f64,
    profile: Arc<dyn Solution1D + Send>,
    x_star: f64,
    phase: Phase,
    x_range: (f64, f64),
    nx: usize,
    ny: usize,
    h: f64,
    potential: Option<&dyn Potential>,
) -> Result<TorusEigenfunction> {
    if !(x_range.1 > x_range.0 && nx >= 1 && ny >= 1 && h > 0.0) {
        return Err(Error::SpecViolation("bad residual grid".into()));
    }
    let level = profile.eval(x_star)?[0];
    let m2 = (m as f64).powi(2);
    let top = q.top();
    let from_q = |x: f64| lambda * top - m2 - lambda * q.deficit(x).v;
    let k: &dyn Potential = match potential {
        Some(p) => p,
        None => &from_q,
    };
    let xs: Vec<f64> = (0..=nx).map(|i| x_range.0 + (x_range.1 - x_range.0) * i as f64 / nx as f64).collect();
    let rows = xs
        .par_iter()
        .map(|&x| {
            let f = profile.eval(x)?[0];
            let r = cell_residual(profile.as_ref(), q, k, x, h)?;
            Ok((x, f, r / q.eval(x)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = TorusEigenfunction {
        m,
        lambda,
        phase,
        level,
        x_star,
        q: q.clone(),
        profile,
        residual: ResidualReport {
            max_residual: 0.0,
            max_phi: 0.0,
            relative: 0.0,
            separation_defect: 0.0,
            points: 0,
            worst_x: f64::NAN,
        },
    };
    let mut max_res: f64 = 0.0;
    let mut max_phi: f64 = 0.0;
    let mut defect: f64 = 0.0;
    let mut worst_x = f64::NAN;
    for j in 0..ny {
        let y = 2.0 * PI * j as f64 / ny as f64;
        let (g, _) = out.trig(y);
        for &(x, f, r1) in &rows {
            // Q^{-1}(phi_xx + phi_yy + lambda Q phi) with phi_yy = -m^2 phi
            // exact, so the cell average factors through g
            let phi = f * g;
            let r2 = r1 * g;
            if r2.abs() > max_res {
                max_res = r2.abs();
                worst_x = x;
            }
            max_phi = max_phi.max(phi.abs());
            defect = defect.max((r2.abs() - (r1 * g).abs()).abs());
        }
    }
    out.residual = ResidualReport {
        max_residual: max_res,
        max_phi,
        relative: if max_phi > 0.0 { max_res / max_phi } else { 0.0 },
        separation_defect: defect,
        points: rows.len() * ny,
        worst_x,
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sturm_liouville::{first_dirichlet_eigenvalue, EigenOptions};

    #[test]
    fn constant_metric_m0_is_sine() {
        let q = ProfileFunction::constant(1.0);
        let e = first_dirichlet_eigenvalue(&q, 0, &EigenOptions::default()).unwrap();
        let lambda = e.lambda;
        assert!((lambda - PI * PI / 16.0).abs() < 1e-10);
        let phi = assemble_eigenfunction(&q, 0, lambda, Arc::new(e), 2.0, Phase::Cos, (0.0, 8.0), 64, 8, 1e-3, None).unwrap();
        for (x, y) in [(0.5, 0.0), (3.0, 1.0), (6.5, 4.0)] {
            assert!((phi.eval(x, y).unwrap() - (PI * x / 4.0).sin()).abs() < 1e-8, "{x}");
        }
        assert!(phi.residual.relative < 1e-5, "{:?}", phi.residual);
    }

    #[test]
    fn cos_phase_is_flat_across_y_zero() {
        let q = ProfileFunction::constant(1.0);
        let e = first_dirichlet_eigenvalue(&q, 3, &EigenOptions::default()).unwrap();
        let lambda = e.lambda;
        let phi = assemble_eigenfunction(&q, 3, lambda, Arc::new(e), 2.0, Phase::Cos, (0.0, 4.0), 32, 16, 1e-3, None).unwrap();
        for x in [0.3, 1.1, 2.9] {
            assert_eq!(phi.gradient(x, 0.0).unwrap()[2], 0.0);
        }
        assert!(phi.residual.relative < 1e-5);
        assert!(phi.residual.separation_defect < 1e-8);
    }
}
