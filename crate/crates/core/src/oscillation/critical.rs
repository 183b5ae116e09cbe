//! Critical points and level crossings of a one-dimensional solution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sturm_liouville::Solution1D;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    Max,
    Min,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub x: f64,
    pub u: f64,
    /// `u(x) - level` for the level the analysis is anchored at.
    pub offset: f64,
    pub u_prime: f64,
    pub u_second: f64,
    pub kind: CriticalKind,
    /// `|u'| < tol` and `|u''|` above the isolation floor.
    pub isolated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCrossing {
    pub x: f64,
    pub u_prime: f64,
    /// `|u'|` above the floor; tangential crossings are reported but not
    /// counted.
    pub transversal: bool,
}

const BISECTIONS: usize = 60;

/// Sign changes of `g` between consecutive points, refined by bisection.
/// Exact zeros at interior sample points are returned as they are.
fn sign_changes<G>(g: G, xs: &[f64]) -> Result<Vec<f64>>
where
    G: Fn(f64) -> Result<f64> + Sync,
{
    let vals = xs.par_iter().map(|&x| g(x)).collect::<Result<Vec<f64>>>()?;
    let mut brackets = Vec::new();
    let mut exact = Vec::new();
    let last = xs.len().saturating_sub(1);
    let mut prev: Option<usize> = None;
    for (k, v) in vals.iter().enumerate() {
        if *v == 0.0 {
            if k != 0 && k != last {
                exact.push(xs[k]);
            }
            prev = None;
            continue;
        }
        if let Some(p) = prev {
            if vals[p].signum() != v.signum() {
                brackets.push((xs[p], xs[k], vals[p]));
            }
        }
        prev = Some(k);
    }
    let mut roots = brackets
        .par_iter()
        .map(|&(mut lo, mut hi, flo)| {
            for _ in 0..BISECTIONS {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                let gm = g(mid)?;
                if gm == 0.0 {
                    return Ok(mid);
                }
                if gm.signum() == flo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        })
        .collect::<Result<Vec<f64>>>()?;
    roots.extend(exact);
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// All sign changes of `u'` on `(a, b)`, refined by 60 bisection steps.
/// A point counts as isolated when `|u'| < tol` and `|u''| >= floor`.
pub fn locate_critical_points(
    u: &dyn Solution1D,
    interval: (f64, f64),
    level: f64,
    tol: f64,
    floor: f64,
) -> Result<Vec<CriticalPoint>> {
    let xs = u.sample_points(interval.0, interval.1);
    let roots = sign_changes(|x| Ok(u.eval(x)?[1]), &xs)?;
    roots
        .into_iter()
        .map(|x| {
            let [v, vp, vpp] = u.eval(x)?;
            Ok(CriticalPoint {
                x,
                u: v,
                offset: u.offset(x, level)?,
                u_prime: vp,
                u_second: vpp,
                kind: if vpp < 0.0 { CriticalKind::Max } else { CriticalKind::Min },
                isolated: vp.abs() < tol && vpp.abs() >= floor,
            })
        })
        .collect()
}

/// All crossings of `u` with `level` on `(a, b)`.
pub fn locate_level_crossings(
    u: &dyn Solution1D,
    level: f64,
    interval: (f64, f64),
    floor: f64,
) -> Result<Vec<LevelCrossing>> {
    let xs = u.sample_points(interval.0, interval.1);
    let roots = sign_changes(|x| u.offset(x, level), &xs)?;
    roots
        .into_iter()
        .map(|x| {
            let up = u.eval(x)?[1];
            Ok(LevelCrossing { x, u_prime: up, transversal: up.abs() >= floor })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sturm_liouville::AnalyticSolution;
    use std::f64::consts::PI;

    fn cosine() -> AnalyticSolution<impl Fn(f64) -> [f64; 3]> {
        AnalyticSolution { f: |x: f64| [x.cos(), -x.sin(), -x.cos()], lo: 0.0, hi: 7.0, samples: 1000 }
    }

    #[test]
    fn cosine_critical_points() {
        let u = cosine();
        let cps = locate_critical_points(&u, (0.0, 2.0 * PI + 0.1), 0.0, 1e-12, 1e-8).unwrap();
        assert_eq!(cps.len(), 2);
        assert!((cps[0].x - PI).abs() < 1e-13);
        assert!((cps[1].x - 2.0 * PI).abs() < 1e-13);
        assert_eq!(cps[0].kind, CriticalKind::Min);
        assert_eq!(cps[1].kind, CriticalKind::Max);
        assert!(cps.iter().all(|c| c.isolated));
    }

    #[test]
    fn cosine_zero_crossings() {
        let u = cosine();
        let cr = locate_level_crossings(&u, 0.0, (0.0, 7.0), 1e-8).unwrap();
        let want = [0.5 * PI, 1.5 * PI];
        assert_eq!(cr.len(), 2);
        for (c, w) in cr.iter().zip(want) {
            assert!((c.x - w).abs() < 1e-13);
            assert!(c.transversal);
        }
    }

    #[test]
    fn tangential_crossing_is_flagged() {
        let u = AnalyticSolution { f: |x: f64| [x * x * x, 3.0 * x * x, 6.0 * x], lo: -1.0, hi: 1.0, samples: 101 };
        let cr = locate_level_crossings(&u, 0.0, (-1.0, 1.0), 1e-6).unwrap();
        assert_eq!(cr.len(), 1);
        assert!(!cr[0].transversal);
    }
}
