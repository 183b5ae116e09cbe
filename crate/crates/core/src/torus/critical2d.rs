//! Critical points of `phi = F(x) cos(my)` lifted from those of `F`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::eigenfunction::{Phase, TorusEigenfunction};
use crate::error::Result;
use crate::oscillation::{locate_critical_points, locate_level_crossings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalType {
    Max,
    Min,
    Saddle,
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint2D {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    pub phi_xx: f64,
    pub phi_yy: f64,
    pub phi_xy: f64,
    pub hessian_det: f64,
    pub kind: CriticalType,
    /// Lifted from a critical point of `F` (rather than a zero of `F`).
    pub from_profile_critical: bool,
}

fn classify(xx: f64, yy: f64, xy: f64) -> (f64, CriticalType) {
    let det = xx * yy - xy * xy;
    let kind = if det > 0.0 {
        if xx < 0.0 {
            CriticalType::Max
        } else {
            CriticalType::Min
        }
    } else if det < 0.0 {
        CriticalType::Saddle
    } else {
        CriticalType::Degenerate
    };
    (det, kind)
}

/// Critical points of `phi` in `[x_lo, x_hi] x [y_lo, y_hi]`: the grid of
/// `F' = 0` against `sin(my) = 0` (cos phase) or `cos(my) = 0` (sin
/// phase), and the zeros of `F` against the other family. `tol` and `floor`
/// are passed to the one-dimensional search.
pub fn locate_2d_critical_points(
    phi: &TorusEigenfunction,
    x_range: (f64, f64),
    y_range: (f64, f64),
    tol: f64,
    floor: f64,
) -> Result<Vec<CriticalPoint2D>> {
    let f = phi.profile.as_ref();
    let m = phi.m as f64;
    let lines = |offset: f64| -> Vec<f64> {
        if phi.m == 0 {
            return if offset == 0.0 { vec![y_range.0.max(0.0).min(y_range.1)] } else { vec![] };
        }
        let step = PI / m;
        let k0 = ((y_range.0 - offset) / step).ceil() as i64;
        let k1 = ((y_range.1 - offset) / step).floor() as i64;
        (k0..=k1).map(|k| offset + k as f64 * step).collect()
    };
    // y-lines where the trig factor has zero derivative, and where it vanishes
    let (flat_lines, zero_lines) = match phi.phase {
        Phase::Cos => (lines(0.0), lines(0.5 * PI / m.max(1.0))),
        Phase::Sin => (lines(0.5 * PI / m.max(1.0)), lines(0.0)),
    };
    let mut out = Vec::new();
    let crit = locate_critical_points(f, x_range, phi.level, tol, floor)?;
    for c in crit.iter().filter(|c| c.isolated) {
        for &y in &flat_lines {
            let [p, _, _] = phi.gradient(c.x, y)?;
            let g = p / c.u;
            let (det, kind) = classify(c.u_second * g, -m * m * p, 0.0);
            out.push(CriticalPoint2D {
                x: c.x,
                y,
                phi: p,
                phi_xx: c.u_second * g,
                phi_yy: -m * m * p,
                phi_xy: 0.0,
                hessian_det: det,
                kind,
                from_profile_critical: true,
            });
        }
    }
    if phi.m > 0 {
        for z in locate_level_crossings(f, 0.0, x_range, 0.0)? {
            for &y in &zero_lines {
                let my = m * y;
                let gp = match phi.phase {
                    Phase::Cos => -m * my.sin(),
                    Phase::Sin => m * my.cos(),
                };
                let xy = z.u_prime * gp;
                let (det, kind) = classify(0.0, 0.0, xy);
                out.push(CriticalPoint2D {
                    x: z.x,
                    y,
                    phi: 0.0,
                    phi_xx: 0.0,
                    phi_yy: 0.0,
                    phi_xy: xy,
                    hessian_det: det,
                    kind,
                    from_profile_critical: false,
                });
            }
        }
    }
    out.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::smooth_kit::ProfileFunction;
    use crate::sturm_liouville::AnalyticSolution;
    use crate::torus::eigenfunction::ResidualReport;

    fn sine_cos_y() -> TorusEigenfunction {
        let f = AnalyticSolution {
            f: |x: f64| {
                let a = PI / 4.0;
                [(a * x).sin(), a * (a * x).cos(), -a * a * (a * x).sin()]
            },
            lo: 0.0,
            hi: 8.0,
            samples: 800,
        };
        TorusEigenfunction {
            m: 1,
            lambda: 1.0 + PI * PI / 16.0,
            phase: Phase::Cos,
            level: 1.0,
            x_star: 2.0,
            q: ProfileFunction::constant(1.0),
            profile: Arc::new(f),
            residual: ResidualReport { max_residual: 0.0, max_phi: 1.0, relative: 0.0, separation_defect: 0.0, points: 0, worst_x: 0.0 },
        }
    }

    #[test]
    fn sine_times_cosine_extrema() {
        let phi = sine_cos_y();
        let cps = locate_2d_critical_points(&phi, (0.5, 3.5), (-0.1, 2.0 * PI - 0.1), 1e-10, 1e-8).unwrap();
        let lifted: Vec<_> = cps.iter().filter(|c| c.from_profile_critical).collect();
        assert_eq!(lifted.len(), 2);
        assert!((lifted[0].x - 2.0).abs() < 1e-12);
        assert_eq!(lifted[0].y, 0.0);
        assert_eq!(lifted[0].kind, CriticalType::Max);
        assert!((lifted[1].y - PI).abs() < 1e-15);
        assert_eq!(lifted[1].kind, CriticalType::Min);
        assert!(lifted.iter().all(|c| c.hessian_det > 0.0));
        for c in &cps {
            let g = phi.gradient(c.x, c.y).unwrap();
            assert!(g[1].abs() < 1e-10 && g[2].abs() < 1e-10);
        }
    }

    #[test]
    fn zeros_of_profile_give_saddles() {
        let phi = sine_cos_y();
        let cps = locate_2d_critical_points(&phi, (3.5, 4.5), (0.0, 2.0 * PI), 1e-10, 1e-8).unwrap();
        assert_eq!(cps.len(), 2);
        assert!(cps.iter().all(|c| c.kind == CriticalType::Saddle && (c.x - 4.0).abs() < 1e-12));
    }
}
