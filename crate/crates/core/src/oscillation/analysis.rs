//! Sign pattern of `u'` at the cascade nodes, the telescoping identity and
//! the finer properties of the critical values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::critical::{locate_critical_points, locate_level_crossings, CriticalKind, CriticalPoint, LevelCrossing};
use super::dominance::{resolved_integral, verify_dominance};
use crate::error::{Error, Result};
use crate::sturm_liouville::Solution1D;

/// One node of the telescoping identity `u'(x_i) = -int_{x*}^{x_i} K u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TelescopeRow {
    pub i: usize,
    pub x: f64,
    pub u_prime: f64,
    /// `int_{x_{i+1}}^{x_i} K u` (for the last node, over `(x*, x_N)`).
    pub integral: f64,
    /// `-sum_{j >= i} int K u`, including the gap `(x*, x_N)`.
    pub telescoped: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignCertificate {
    pub j0: usize,
    pub c_prime: f64,
    /// `max u / min u` on `[x*, x_{j0}]`.
    pub ratio: f64,
    /// Sign of `u'(x_i)` for `i = 1 ..= N`.
    pub derivative_signs: Vec<i8>,
    pub telescoping: Vec<TelescopeRow>,
    /// Nodes `i >= j0` whose interval integral outweighs everything below
    /// it, so that the sign of `u'(x_i)` is fixed by the identity.
    pub certified: Vec<usize>,
    /// Certified nodes where `sign u'(x_i) != (-1)^i`.
    pub violations: Vec<usize>,
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn alternating(i: usize) -> i8 {
    if i % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `max u / min u` on `[a, b]` over the solution's sample points; infinite
/// if `u` is not positive there.
fn value_ratio(u: &dyn Solution1D, a: f64, b: f64) -> Result<f64> {
    let vals = u.sample_points(a, b).par_iter().map(|&x| Ok(u.eval(x)?[0])).collect::<Result<Vec<f64>>>()?;
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(if lo > 0.0 { hi / lo } else { f64::INFINITY })
}

/// Computes the sign pattern and its telescoping diagnostics without
/// failing on violations. `nodes` holds `x_1 > ... > x_N > x_star`.
pub fn sign_pattern<K>(u: &dyn Solution1D, k: &K, nodes: &[f64], x_star: f64, c_prime: f64) -> Result<SignCertificate>
where
    K: Fn(f64) -> f64 + Sync,
{
    let n = nodes.len();
    let mut j0 = None;
    let mut ratio = f64::INFINITY;
    for j in 1..=n {
        let xj = nodes[j - 1];
        if xj - x_star >= 1.0 {
            continue;
        }
        let r = value_ratio(u, x_star, xj)?;
        ratio = r;
        if r <= c_prime {
            j0 = Some(j);
            break;
        }
    }
    let Some(j0) = j0 else {
        return Err(Error::ComparabilityViolation { ratio, bound: c_prime });
    };
    let derivative_signs =
        nodes.par_iter().map(|&x| Ok(sign_of(u.eval(x)?[1]))).collect::<Result<Vec<i8>>>()?;
    // interval integrals for i = j0 ..= N, the last over the gap (x*, x_N)
    let idx: Vec<usize> = (j0..=n).collect();
    let integrals = idx
        .par_iter()
        .map(|&i| {
            let hi = nodes[i - 1];
            let lo = if i == n { x_star } else { nodes[i] };
            resolved_integral(
                |x| match u.eval(x) {
                    Ok(v) => k(x) * v[0],
                    Err(_) => f64::NAN,
                },
                lo,
                hi,
                1e-12,
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    if integrals.iter().any(|v| !v.is_finite()) {
        return Err(Error::QuadratureUnderResolved { lo: x_star, hi: nodes[j0 - 1] });
    }
    let mut telescoping = Vec::with_capacity(idx.len());
    let mut certified = Vec::new();
    let mut violations = Vec::new();
    for (pos, &i) in idx.iter().enumerate() {
        let x = nodes[i - 1];
        let up = u.eval(x)?[1];
        let telescoped = -integrals[pos..].iter().sum::<f64>();
        let rel_error = if up == telescoped { 0.0 } else { (up - telescoped).abs() / up.abs() };
        telescoping.push(TelescopeRow { i, x, u_prime: up, integral: integrals[pos], telescoped, rel_error });
        let tail: f64 = integrals[pos + 1..].iter().map(|v| v.abs()).sum();
        if i < n && integrals[pos].abs() > tail {
            certified.push(i);
            if derivative_signs[i - 1] != alternating(i) {
                violations.push(i);
            }
        }
    }
    Ok(SignCertificate { j0, c_prime, ratio, derivative_signs, telescoping, certified, violations })
}

/// [`sign_pattern`], failing with the first node that breaks
/// `sign u'(x_i) = (-1)^i`.
pub fn certify_sign_pattern<K>(u: &dyn Solution1D, k: &K, nodes: &[f64], x_star: f64, c_prime: f64) -> Result<SignCertificate>
where
    K: Fn(f64) -> f64 + Sync,
{
    let cert = sign_pattern(u, k, nodes, x_star, c_prime)?;
    if let Some(&index) = cert.violations.first() {
        return Err(Error::SignViolation { index });
    }
    Ok(cert)
}

/// Settings of [`analyze_oscillation`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillationOptions {
    pub c: f64,
    pub c_prime: f64,
    /// Isolation floor relative to `max |K| max |u|` on the window.
    pub isolation_rel: f64,
    /// `|u'(xi)|` bound relative to `max |u'|` on the window.
    pub critical_rel: f64,
    /// Transversality floor for level crossings relative to `max |u'|`.
    pub crossing_rel: f64,
}

impl Default for OscillationOptions {
    fn default() -> Self {
        OscillationOptions { c: 2.0, c_prime: 1.5, isolation_rel: 1e-8, critical_rel: 1e-10, crossing_rel: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub x_star: f64,
    pub level: f64,
    pub window: (f64, f64),
    /// `x_1 > ... > x_N`.
    pub nodes: Vec<f64>,
    pub j0: usize,
    pub c_prime: f64,
    pub comparability_ratio: f64,
    pub derivative_signs: Vec<i8>,
    pub certified_nodes: Vec<usize>,
    pub sign_violations: Vec<usize>,
    pub telescoping: Vec<TelescopeRow>,
    pub critical_points: Vec<CriticalPoint>,
    pub level_crossings: Vec<LevelCrossing>,
    pub n_critical: usize,
    pub n_crossings: usize,
    pub dominance_ok: bool,
    pub strong_dominance_ok: bool,
    pub dominance_margins: Vec<f64>,
    pub strong_dominance_margins: Vec<f64>,
    pub isolation_floor: f64,
    pub critical_tol: f64,
}

impl OscillationReport {
    pub fn max_telescoping_error(&self) -> f64 {
        self.telescoping.iter().map(|r| r.rel_error).fold(0.0, f64::max)
    }

    /// Isolated critical points strictly inside `(lo, hi)`.
    pub fn criticals_in(&self, lo: f64, hi: f64) -> Vec<&CriticalPoint> {
        self.critical_points.iter().filter(|c| c.isolated && c.x > lo && c.x < hi).collect()
    }
}

/// Full analysis of a flat solution `u` (`u'(x*) = 0`) of `u'' + K u = 0`
/// on `(x*, window_end)`, with `level = u(x*)`.
pub fn analyze_oscillation<K>(
    u: &dyn Solution1D,
    k: &K,
    nodes: &[f64],
    x_star: f64,
    window_end: f64,
    opts: &OscillationOptions,
) -> Result<OscillationReport>
where
    K: Fn(f64) -> f64 + Sync,
{
    let level = u.eval(x_star)?[0];
    let weak = verify_dominance(k, nodes, opts.c, false)?;
    let strong = verify_dominance(k, nodes, opts.c, true)?;
    let cert = sign_pattern(u, k, nodes, x_star, opts.c_prime)?;
    let xs = u.sample_points(x_star, window_end);
    let vals = xs.par_iter().map(|&x| Ok((u.eval(x)?, k(x)))).collect::<Result<Vec<_>>>()?;
    let max_u = vals.iter().map(|(v, _)| v[0].abs()).fold(0.0, f64::max);
    let max_up = vals.iter().map(|(v, _)| v[1].abs()).fold(0.0, f64::max);
    let max_k = vals.iter().map(|(_, kk)| kk.abs()).fold(0.0, f64::max);
    let isolation_floor = opts.isolation_rel * max_k * max_u;
    let critical_tol = opts.critical_rel * max_up;
    let critical_points = locate_critical_points(u, (x_star, window_end), level, critical_tol, isolation_floor)?;
    let x_j0 = nodes[cert.j0 - 1];
    let level_crossings = locate_level_crossings(u, level, (x_star, x_j0), opts.crossing_rel * max_up)?;
    Ok(OscillationReport {
        x_star,
        level,
        window: (x_star, window_end),
        nodes: nodes.to_vec(),
        j0: cert.j0,
        c_prime: opts.c_prime,
        comparability_ratio: cert.ratio,
        derivative_signs: cert.derivative_signs,
        certified_nodes: cert.certified,
        sign_violations: cert.violations,
        telescoping: cert.telescoping,
        n_critical: critical_points.iter().filter(|c| c.isolated).count(),
        n_crossings: level_crossings.iter().filter(|c| c.transversal).count(),
        critical_points,
        level_crossings,
        dominance_ok: weak.holds,
        strong_dominance_ok: strong.holds,
        dominance_margins: weak.margins,
        strong_dominance_margins: strong.margins,
        isolation_floor,
        critical_tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub j: usize,
    pub holds: bool,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub j0: usize,
    pub last: usize,
    /// `sign u'(x_j) = (-1)^j`; value is `u'(x_j)`.
    pub derivative_sign: Vec<PropertyCheck>,
    /// One isolated critical point in `(x_{j+1}, x_j)`, a maximum for odd
    /// `j`; value is the number found.
    pub unique_critical: Vec<PropertyCheck>,
    /// `sign(u(x_j) - u(x_{j+1})) = (-1)^j`; value is the difference.
    pub node_values: Vec<PropertyCheck>,
    /// `sign(u(xi_j) - u(x*)) = (-1)^{j-1}`; value is the difference.
    pub critical_values: Vec<PropertyCheck>,
    /// `eta_j > xi_j > eta_{j+1}`: exactly one crossing above each `xi_j`
    /// and below the previous one.
    pub interlacing: Vec<PropertyCheck>,
    pub failures: Vec<(String, usize)>,
}

impl PropertyReport {
    fn all(v: &[PropertyCheck]) -> bool {
        v.iter().all(|c| c.holds)
    }

    pub fn property_holds(&self) -> [bool; 5] {
        [
            Self::all(&self.derivative_sign),
            Self::all(&self.unique_critical),
            Self::all(&self.node_values),
            Self::all(&self.critical_values),
            Self::all(&self.interlacing),
        ]
    }

    pub fn all_hold(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks the four cascade properties and interlacing for `j = j0 ..= N-2`.
pub fn verify_cascade_properties(report: &OscillationReport, u: &dyn Solution1D, j0: usize) -> Result<PropertyReport> {
    let nodes = &report.nodes;
    let n = nodes.len();
    let last = n.saturating_sub(2);
    let x = |j: usize| nodes[j - 1];
    let mut out = PropertyReport {
        j0,
        last,
        derivative_sign: vec![],
        unique_critical: vec![],
        node_values: vec![],
        critical_values: vec![],
        interlacing: vec![],
        failures: vec![],
    };
    let mut xis: Vec<Option<f64>> = Vec::new();
    for j in j0..=last {
        let up = u.eval(x(j))?[1];
        out.derivative_sign.push(PropertyCheck { j, holds: sign_of(up) == alternating(j), value: up });

        let cps = report.criticals_in(x(j + 1), x(j));
        let want = if j % 2 == 1 { CriticalKind::Max } else { CriticalKind::Min };
        let unique = cps.len() == 1 && cps[0].kind == want;
        out.unique_critical.push(PropertyCheck { j, holds: unique, value: cps.len() as f64 });
        xis.push(if cps.len() == 1 { Some(cps[0].x) } else { None });

        let diff = u.offset(x(j), report.level)? - u.offset(x(j + 1), report.level)?;
        out.node_values.push(PropertyCheck { j, holds: sign_of(diff) == alternating(j), value: diff });

        let (holds, value) = match cps.first().filter(|_| cps.len() == 1) {
            Some(c) => (sign_of(c.offset) == -alternating(j), c.offset),
            None => (false, f64::NAN),
        };
        out.critical_values.push(PropertyCheck { j, holds, value });
    }
    let etas: Vec<f64> = report.level_crossings.iter().filter(|c| c.transversal).map(|c| c.x).collect();
    let mut upper = x(j0);
    for (pos, j) in (j0..=last).enumerate() {
        let check = match xis[pos] {
            Some(xi) => {
                let count = etas.iter().filter(|&&e| e > xi && e <= upper).count();
                upper = xi;
                PropertyCheck { j, holds: count == 1, value: count as f64 }
            }
            None => PropertyCheck { j, holds: false, value: f64::NAN },
        };
        out.interlacing.push(check);
    }
    let names = ["derivative_sign", "unique_critical", "node_values", "critical_values", "interlacing"];
    let lists = [&out.derivative_sign, &out.unique_critical, &out.node_values, &out.critical_values, &out.interlacing];
    let mut failures = Vec::new();
    for (name, list) in names.iter().zip(lists) {
        failures.extend(list.iter().filter(|c| !c.holds).map(|c| (name.to_string(), c.j)));
    }
    out.failures = failures;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::smooth_kit::{make_h_mutated, CascadeSpec, Mutation, ProfileFunction, SkeletonParams};
    use crate::sturm_liouville::{AnalyticSolution, FlatSolution};

    fn spec() -> CascadeSpec {
        CascadeSpec::geometric(&SkeletonParams { depth: 12, ..SkeletonParams::default() }).unwrap()
    }

    fn window(h: &ProfileFunction, s: &CascadeSpec, amp: f64) -> (FlatSolution, f64) {
        let hh = h.clone();
        let pot = Arc::new(move |x: f64| amp * hh.eval(x));
        let half = 1.1 * (s.x(1) - s.x_inf);
        let u = FlatSolution::integrate(pot, s.x_inf, half, h.features()).unwrap();
        (u, s.x_inf + half)
    }

    #[test]
    fn default_cascade_has_full_pattern() {
        let s = spec();
        let h = make_h_mutated(&s, &Mutation::default()).unwrap();
        let (u, end) = window(&h, &s, 1.0);
        let k = |x: f64| h.eval(x);
        let r = analyze_oscillation(&u, &k, &s.points, s.x_inf, end, &OscillationOptions::default()).unwrap();
        assert_eq!(r.j0, 1);
        for i in 1..=11 {
            assert_eq!(r.derivative_signs[i - 1], if i % 2 == 0 { 1 } else { -1 }, "node {i}");
        }
        assert!(r.sign_violations.is_empty());
        assert!(r.n_critical >= 10, "{}", r.n_critical);
        assert!(r.max_telescoping_error() < 1e-5, "{}", r.max_telescoping_error());
        let p = verify_cascade_properties(&r, &u, r.j0).unwrap();
        assert!(p.all_hold(), "{:?}", p.failures);
    }

    #[test]
    fn flipped_bump_breaks_sign_at_its_index() {
        let s = spec();
        let h = make_h_mutated(&s, &Mutation { flip_sign: vec![5], ..Mutation::default() }).unwrap();
        let (u, _) = window(&h, &s, 1.0);
        let k = |x: f64| h.eval(x);
        let cert = sign_pattern(&u, &k, &s.points, s.x_inf, 1.5).unwrap();
        assert_eq!(cert.violations, vec![5]);
        assert!(matches!(certify_sign_pattern(&u, &k, &s.points, s.x_inf, 1.5), Err(Error::SignViolation { index: 5 })));
    }

    #[test]
    fn mirrored_bumps_keep_derivative_signs() {
        let s = spec();
        let h = make_h_mutated(&s, &Mutation { mirror_all: true, ..Mutation::default() }).unwrap();
        let (u, end) = window(&h, &s, 1.0);
        let k = |x: f64| h.eval(x);
        let r = analyze_oscillation(&u, &k, &s.points, s.x_inf, end, &OscillationOptions::default()).unwrap();
        assert!(!r.strong_dominance_ok);
        let p = verify_cascade_properties(&r, &u, r.j0).unwrap();
        let holds = p.property_holds();
        assert!(holds[0]);
        assert!(!holds[2]);
        assert!(p.failures.iter().all(|(name, _)| name == "node_values"), "{:?}", p.failures);
    }

    #[test]
    fn constant_potential_is_vacuous() {
        let xs = 0.5;
        let u = AnalyticSolution {
            f: move |x: f64| {
                let (s, c) = (x - xs).sin_cos();
                [c, -s, -c]
            },
            lo: 0.0,
            hi: 1.0,
            samples: 400,
        };
        let nodes = [0.8, 0.7, 0.6];
        let cert = certify_sign_pattern(&u, &|_| 1.0, &nodes, xs, 1.5).unwrap();
        assert!(cert.certified.is_empty());
    }

    #[test]
    fn large_values_ratio_is_rejected() {
        let s = spec();
        let h = make_h_mutated(&s, &Mutation::default()).unwrap();
        let (u, _) = window(&h, &s, 400.0);
        let k = |x: f64| 400.0 * h.eval(x);
        let r = sign_pattern(&u, &k, &s.points, s.x_inf, 1.5).unwrap();
        assert!(r.j0 > 1);
    }
}
