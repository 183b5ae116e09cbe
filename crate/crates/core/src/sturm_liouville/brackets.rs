//! The variational brackets `m^2/Q(0) < Lambda_{Q,m} < m^2/(Q(0) - eps)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eigen::{first_dirichlet_eigenvalue, EigenOptions};
use crate::error::{Error, Result};
use crate::smooth_kit::ProfileFunction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketRow {
    pub m: u64,
    pub lambda: f64,
    /// `(Lambda Q(0) - m^2) / m^2`, or the excess itself for `m = 0`.
    pub lower_margin: f64,
    /// `(m^2 - Lambda (Q(0) - eps)) / m^2`; `None` for `m = 0`.
    pub upper_margin: Option<f64>,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub eps: f64,
    pub rows: Vec<BracketRow>,
    pub lower_violations: Vec<u64>,
    /// Smallest `m0` such that the upper bracket holds for every tested
    /// `m >= m0`; `None` if it fails at the last tested `m`.
    pub m0: Option<u64>,
}

impl BracketReport {
    pub fn lower_holds(&self) -> bool {
        self.lower_violations.is_empty()
    }
}

/// Evaluates both brackets for every `m` in `ms`. Requires `Q(0)` to be a
/// strict maximum away from `2Z`.
pub fn check_variational_brackets(
    q: &ProfileFunction,
    ms: impl IntoIterator<Item = u64>,
    eps: f64,
    opts: &EigenOptions,
) -> Result<BracketReport> {
    if !(eps > 0.0) {
        return Err(Error::SpecViolation(format!("eps must be positive, got {eps}")));
    }
    let d0 = q.deficit(0.0).v;
    if d0 != 0.0 {
        return Err(Error::SpecViolation("Q(0) is not the maximum of Q".into()));
    }
    if let Some(x) = (1..2000).map(|k| k as f64 / 1000.0).find(|&x| !(q.deficit(x).v > 0.0)) {
        return Err(Error::SpecViolation(format!("Q(0) is not a strict maximum: Q({x}) = Q(0)")));
    }
    let ms: Vec<u64> = ms.into_iter().collect();
    let rows = ms
        .par_iter()
        .map(|&m| {
            let e = first_dirichlet_eigenvalue(q, m, opts)?;
            let m2 = (m as f64) * (m as f64);
            // Lambda Q(0) - m^2 = mu - lambda D(0) with D(0) = 0
            let lower = e.excess;
            let lower_margin = if m == 0 { lower } else { lower / m2 };
            let upper_margin = (m > 0).then(|| (e.lambda * eps - e.excess) / m2);
            Ok(BracketRow {
                m,
                lambda: e.lambda,
                lower_margin,
                upper_margin,
                lower_ok: lower > 0.0,
                upper_ok: upper_margin.is_some_and(|u| u > 0.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lower_violations = rows.iter().filter(|r| !r.lower_ok).map(|r| r.m).collect();
    let m0 = match rows.iter().rposition(|r| !r.upper_ok) {
        None => rows.first().map(|r| r.m),
        Some(k) => rows.get(k + 1).map(|r| r.m),
    };
    Ok(BracketReport { eps, rows, lower_violations, m0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth_kit::{make_q_with, QParams};

    #[test]
    fn constant_profile_fails_precondition() {
        let q = ProfileFunction::constant(1.0);
        assert!(check_variational_brackets(&q, 1..=3, 0.05, &EigenOptions::default()).is_err());
    }

    #[test]
    fn default_profile_small_range() {
        let q = make_q_with(QParams::default()).unwrap();
        let r = check_variational_brackets(&q, [1, 5, 20, 40], 0.05, &EigenOptions::default()).unwrap();
        assert!(r.lower_holds());
        assert!(r.m0.is_some());
    }
}
