//! Pointwise check of `q̃ <= q_{S,tau} <= q`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::profile::ProfileFunction;

/// Sample points for the sandwich check: a uniform grid on `(0, 1]` plus a
/// dense block inside every fine-scale window of the middle profile. By
/// evenness and 2-periodicity `(0, 1]` covers the whole line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichGrid {
    pub uniform: usize,
    pub per_feature: usize,
}

impl Default for SandwichGrid {
    fn default() -> Self {
        SandwichGrid { uniform: 1_000_000, per_feature: 2_000 }
    }
}

impl SandwichGrid {
    pub fn points(&self, middle: &ProfileFunction) -> Vec<f64> {
        let mut xs: Vec<f64> =
            (1..=self.uniform).map(|i| i as f64 / self.uniform as f64).collect();
        for f in middle.features_in(0.0, 1.0) {
            let lo = f.lo.max(0.0);
            let hi = f.hi.min(1.0);
            if hi <= lo {
                continue;
            }
            let n = self.per_feature.max(2);
            xs.extend((0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).filter(|x| *x > 0.0));
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichCase {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Minimum of `q_{S,tau} - q̃` in this range.
    pub min_lower_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub holds: bool,
    /// Minimum of `q_{S,tau} - q̃` over the grid.
    pub min_lower_slack: f64,
    /// Minimum of `q - q_{S,tau}` over the grid.
    pub min_upper_slack: f64,
    /// Minimum of `q - q_{S,tau}` over points where the two differ; `None`
    /// when they agree everywhere on the grid.
    pub min_upper_slack_active: Option<f64>,
    /// Smallest of the strict slacks: lower slack everywhere on `(0, 1]`,
    /// upper slack where the middle profile departs from `q`.
    pub min_slack: f64,
    pub worst_x: f64,
    pub violation_x: Option<f64>,
    pub points: usize,
    pub cases: Vec<SandwichCase>,
}

/// Checks `q_tilde <= q_s_tau <= q` on the grid. Differences are formed from
/// the deficit representations so they keep full relative precision.
pub fn verify_sandwich(
    q_tilde: &ProfileFunction,
    q_s_tau: &ProfileFunction,
    q: &ProfileFunction,
    grid: &SandwichGrid,
) -> SandwichReport {
    verify_sandwich_at(q_tilde, q_s_tau, q, &grid.points(q_s_tau))
}

/// `n + 1` equally spaced points of `[lo, hi]` together with the feature
/// blocks of `middle` inside it; used to probe a single layer.
pub fn window_points(middle: &ProfileFunction, lo: f64, hi: f64, n: usize, per_feature: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    for f in middle.features_in(lo, hi) {
        let (a, b) = (f.lo.max(lo), f.hi.min(hi));
        if b > a {
            xs.extend((0..=per_feature).map(|k| a + (b - a) * k as f64 / per_feature as f64));
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// [`verify_sandwich`] on explicit sample points.
pub fn verify_sandwich_at(
    q_tilde: &ProfileFunction,
    q_s_tau: &ProfileFunction,
    q: &ProfileFunction,
    xs: &[f64],
) -> SandwichReport {
    let shift_lower = q_s_tau.top() - q_tilde.top();
    let shift_upper = q.top() - q_s_tau.top();
    let samples: Vec<(f64, f64, f64)> = xs
        .par_iter()
        .map(|&x| {
            let ds = q_s_tau.deficit(x).v;
            let lower = (q_tilde.deficit(x).v - ds) + shift_lower;
            let upper = (ds - q.deficit(x).v) + shift_upper;
            (x, lower, upper)
        })
        .collect();

    let bounds = [(0.0, 0.2), (0.2, 2.0 / 9.0), (2.0 / 9.0, 1.0)];
    let mut cases: Vec<SandwichCase> = bounds
        .iter()
        .map(|&(lo, hi)| SandwichCase { lo, hi, points: 0, min_lower_slack: f64::INFINITY })
        .collect();
    let mut report = SandwichReport {
        holds: true,
        min_lower_slack: f64::INFINITY,
        min_upper_slack: f64::INFINITY,
        min_upper_slack_active: None,
        min_slack: f64::INFINITY,
        worst_x: f64::NAN,
        violation_x: None,
        points: samples.len(),
        cases: Vec::new(),
    };
    for &(x, lower, upper) in &samples {
        let c = if x <= 0.2 { 0 } else if x <= 2.0 / 9.0 { 1 } else { 2 };
        cases[c].points += 1;
        cases[c].min_lower_slack = cases[c].min_lower_slack.min(lower);
        report.min_lower_slack = report.min_lower_slack.min(lower);
        report.min_upper_slack = report.min_upper_slack.min(upper);
        let active = q_s_tau.eval(x) != q.eval(x) || upper != 0.0;
        if active {
            let m = report.min_upper_slack_active.map_or(upper, |m| m.min(upper));
            report.min_upper_slack_active = Some(m);
        }
        let strict = if active { lower.min(upper) } else { lower };
        if strict < report.min_slack {
            report.min_slack = strict;
            report.worst_x = x;
        }
        if (lower < 0.0 || upper < 0.0) && report.violation_x.is_none() {
            report.holds = false;
            report.violation_x = Some(x);
        }
    }
    report.cases = cases;
    report
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::smooth_kit::cascade::{CascadeProfile, CascadeSpec, Mutation, SkeletonParams};
    use crate::smooth_kit::composite::{make_q_s_tau, SiteAssignment};
    use crate::smooth_kit::functions::{make_q_tilde, make_q_with, QParams};

    fn profiles(sites: Vec<f64>, taus: Vec<f64>) -> (ProfileFunction, ProfileFunction, ProfileFunction) {
        let p = QParams::default();
        let q = make_q_with(p).unwrap();
        let qt = make_q_tilde(p).unwrap();
        let spec = CascadeSpec::geometric(&SkeletonParams { depth: 8, ..Default::default() }).unwrap();
        let h = Arc::new(CascadeProfile::new(&spec, &Mutation::default()).unwrap());
        let qs = make_q_s_tau(&q, &h, &SiteAssignment::new(sites, taus).unwrap()).unwrap();
        (qt, qs, q)
    }

    #[test]
    fn zero_intensity_holds() {
        let (qt, qs, q) = profiles(vec![1.0, 2.0, 3.5], vec![0.0; 3]);
        let r = verify_sandwich(&qt, &qs, &q, &SandwichGrid { uniform: 20_000, per_feature: 200 });
        assert!(r.holds, "{r:?}");
        assert!(r.min_slack > 0.0);
    }

    #[test]
    fn huge_intensity_breaks_upper_bound() {
        let (qt, qs, q) = profiles(vec![2.0], vec![20.0]);
        let r = verify_sandwich(&qt, &qs, &q, &SandwichGrid { uniform: 20_000, per_feature: 200 });
        assert!(!r.holds);
        assert!(r.min_upper_slack < 0.0);
    }
}
