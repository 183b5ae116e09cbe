//! Inductive choice of `(m_i, M_i, eps_i)` and the search for sites
//! `t_1 < ... < t_k` with `Lambda_{Q,m_i} q(4^{-t_i}) = m_i^2`.
//!
//! With `D = top - q`, `mu = lambda top - m^2` the identity reads
//! `mu_i = lambda_i D(4^{-t_i})`, which is how every residual below is
//! formed: no quantity close to `m^2` is ever subtracted.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;
use crate::smooth_kit::{
    make_q_s_tau, verify_sandwich_at, window_points, CascadeProfile, ProfileFunction, SiteAssignment,
};
use crate::sturm_liouville::{first_dirichlet_eigenvalue, EigenOptions, EigenResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunerOptions {
    pub k: usize,
    /// Bound on `|Lambda q(4^{-t}) - m^2| / m^2`.
    pub residual_tol: f64,
    /// Bound on the same numerator relative to the excess `mu`.
    pub excess_tol: f64,
    pub max_iter: usize,
    pub m_cap: u64,
    /// `tau_i = tau_fraction * eps_i`.
    pub tau_fraction: f64,
    pub eps_probes: usize,
    pub eps_window_points: usize,
    pub seed: u64,
    pub eigen: EigenOptions,
}

impl Default for TunerOptions {
    fn default() -> Self {
        TunerOptions {
            k: 3,
            residual_tol: 1e-6,
            excess_tol: 1e-9,
            max_iter: 200,
            m_cap: 10_000_000_000,
            tau_fraction: 0.5,
            eps_probes: 5,
            eps_window_points: 20_000,
            seed: 7,
            eigen: EigenOptions { tol: 1e-13, ..EigenOptions::default() },
        }
    }
}

/// Result of the inductive choice of `m_i` and `M_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub m: Vec<u64>,
    /// `M_0 = 0, M_1, ..., M_k`.
    pub big_m: Vec<f64>,
    pub lambda_q: Vec<f64>,
    pub excess_q: Vec<f64>,
    pub lambda_q_tilde: Vec<f64>,
    /// `(Lambda_{q̃} q(0) - m^2, m^2 - Lambda_{q̃} q(4^{-1-M_{i-1}}))`, both
    /// relative to `m^2` and positive when the bracket holds.
    pub bracket_margins: Vec<(f64, f64)>,
    /// `|q(4^{-M_i}) - m_i^2/Lambda_{q,m_i}|` relative to the deficit.
    pub big_m_residuals: Vec<f64>,
    pub eigen_solves: usize,
}

/// Excess of `Lambda` measured against `q(0)` and the upper bracket margin
/// against `q(y)`, both over `m^2`, for an eigenpair of a profile that may
/// have its own reference top.
fn bracket_margins(e: &EigenResult, q: &ProfileFunction, y: f64) -> (f64, f64) {
    let m2 = (e.m as f64).powi(2);
    // Lambda q(0) - m^2 = mu + Lambda (top_q - top_e) - Lambda D_q(0)
    let shift = e.lambda * (q.top() - e.top);
    let lower = e.excess + shift - e.lambda * q.deficit(0.0).v;
    let upper = -(e.excess + shift - e.lambda * q.deficit(y).v);
    (lower / m2, upper / m2)
}

/// Solves `D(4^{-s}) = target` for `s`; `D(4^{-s})` is strictly decreasing.
fn solve_site(q: &ProfileFunction, target: f64, lo: f64, hi: f64) -> Result<f64> {
    let g = |s: f64| Ok(q.deficit(4f64.powf(-s)).v.ln() - target.ln());
    let (mut a, mut b) = (lo, hi);
    let (mut ga, mut gb) = (g(a)?, g(b)?);
    let mut widen = 0;
    while ga.signum() == gb.signum() {
        if widen > 60 {
            return Err(Error::NoConvergence { what: "site bracket", iterations: widen, residual: ga.min(gb) });
        }
        if ga < 0.0 {
            a -= 1.0;
            ga = g(a)?;
        } else {
            b += 1.0;
            gb = g(b)?;
        }
        widen += 1;
    }
    let root = roots::brent(g, a, b, ga, gb, |s| 4.0 * f64::EPSILON * s.abs().max(1.0), 400)?;
    Ok(root.x)
}

/// Smallest `m > m_prev` (by exponential and binary search on the upper
/// bracket, which tightens monotonically in `m`) with
/// `m^2/q(0) < Lambda_{q̃,m} < m^2/q(y)`.
fn select_m(q: &ProfileFunction, q_tilde: &ProfileFunction, m_prev: u64, y: f64, opts: &TunerOptions, solves: &mut usize) -> Result<(u64, EigenResult)> {
    let mut test = |m: u64| -> Result<(bool, EigenResult)> {
        *solves += 1;
        let e = first_dirichlet_eigenvalue(q_tilde, m, &opts.eigen)?;
        let (lo, hi) = bracket_margins(&e, q, y);
        Ok((lo > 0.0 && hi > 0.0, e))
    };
    let mut lo = m_prev;
    let mut hi = m_prev + 1;
    let mut step = 1u64;
    let mut found = loop {
        if hi > opts.m_cap {
            return Err(Error::SearchExhausted { cap: opts.m_cap });
        }
        let (ok, e) = test(hi)?;
        if ok {
            break e;
        }
        lo = hi;
        hi = hi.saturating_add(step);
        step = step.saturating_mul(2);
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let (ok, e) = test(mid)?;
        if ok {
            hi = mid;
            found = e;
        } else {
            lo = mid;
        }
    }
    Ok((hi, found))
}

/// Chooses `m_1 < ... < m_k` and `M_1 < ... < M_k` inductively.
pub fn select_m_and_big_m(k: usize, q: &ProfileFunction, q_tilde: &ProfileFunction, opts: &TunerOptions) -> Result<Selection> {
    let mut sel = Selection {
        m: vec![],
        big_m: vec![0.0],
        lambda_q: vec![],
        excess_q: vec![],
        lambda_q_tilde: vec![],
        bracket_margins: vec![],
        big_m_residuals: vec![],
        eigen_solves: 0,
    };
    let mut solves = 0;
    for i in 1..=k {
        let m_prev = sel.m.last().copied().unwrap_or(0);
        let y = 4f64.powf(-1.0 - sel.big_m[i - 1]);
        let (m, et) = select_m(q, q_tilde, m_prev, y, opts, &mut solves)?;
        let e = first_dirichlet_eigenvalue(q, m, &opts.eigen)?;
        solves += 1;
        let target = e.excess / e.lambda;
        let big_m = solve_site(q, target, sel.big_m[i - 1] + 1.0, sel.big_m[i - 1] + 2.0)?;
        let d = q.deficit(4f64.powf(-big_m)).v;
        if !(big_m > sel.big_m[i - 1] + 1.0) {
            return Err(Error::SpecViolation(format!(
                "M_{i} = {big_m} does not exceed M_{} + 1 = {}",
                i - 1,
                sel.big_m[i - 1] + 1.0
            )));
        }
        sel.bracket_margins.push(bracket_margins(&et, q, y));
        sel.big_m_residuals.push((d - target).abs() / target);
        sel.m.push(m);
        sel.big_m.push(big_m);
        sel.lambda_q.push(e.lambda);
        sel.excess_q.push(e.excess);
        sel.lambda_q_tilde.push(et.lambda);
    }
    sel.eigen_solves = solves;
    Ok(sel)
}

/// The box `[M_{i-1} + 1, M_i]`, 1-based.
pub fn box_bounds(big_m: &[f64], i: usize) -> (f64, f64) {
    (big_m[i - 1] + 1.0, big_m[i])
}

/// Probe sites for the sandwich search on box `i`: endpoints, midpoint and
/// seeded random points.
pub fn eps_probe_sites(big_m: &[f64], i: usize, count: usize, seed: u64) -> Vec<f64> {
    let (lo, hi) = box_bounds(big_m, i);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut out = vec![lo, hi, 0.5 * (lo + hi)];
    out.extend((0..count).map(|_| rng.gen_range(lo..=hi)));
    out
}

/// Whether a single layer at each probe site with intensity `+-eps` stays
/// inside the sandwich on its window.
pub fn eps_admissible(
    q: &ProfileFunction,
    q_tilde: &ProfileFunction,
    h: &Arc<CascadeProfile>,
    sites: &[f64],
    eps: f64,
    points: usize,
) -> Result<bool> {
    for &t in sites {
        for tau in [eps, -eps] {
            let qs = make_q_s_tau(q, h, &SiteAssignment::new(vec![t], vec![tau])?)?;
            let (lo, hi) = (4f64.powf(-t - 1.0), 4f64.powf(-t));
            let xs = window_points(&qs, lo, hi, points, 2000);
            let r = verify_sandwich_at(q_tilde, &qs, q, &xs);
            if !r.holds {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Largest `eps = top 2^{-j}` passing [`eps_admissible`] on the probe set of
/// box `i`. Layers live on disjoint windows, so single-site probes decide
/// the sandwich for any assignment with one site per box.
pub fn select_eps(
    q: &ProfileFunction,
    q_tilde: &ProfileFunction,
    h: &Arc<CascadeProfile>,
    big_m: &[f64],
    i: usize,
    opts: &TunerOptions,
) -> Result<f64> {
    let sites = eps_probe_sites(big_m, i, opts.eps_probes, opts.seed);
    let mut eps = q.top();
    for _ in 0..1100 {
        if eps_admissible(q, q_tilde, h, &sites, eps, opts.eps_window_points)? {
            return Ok(eps);
        }
        eps *= 0.5;
    }
    Ok(0.0)
}

/// One evaluation of the map `F`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FEval {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub lambda: Vec<f64>,
    pub excess: Vec<f64>,
    /// `(Lambda_{Q,m_i} q(4^{-t_i}) - m_i^2) / m_i^2`.
    pub residuals: Vec<f64>,
    /// The same numerator over `mu_i`.
    pub excess_residuals: Vec<f64>,
    /// `Lambda_{q,m_i} <= Lambda_{Q,m_i} <= Lambda_{q̃,m_i}` up to the solver
    /// tolerance.
    pub bracket_ok: Vec<bool>,
}

impl FEval {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }

    pub fn max_excess_residual(&self) -> f64 {
        self.excess_residuals.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub max_residual: f64,
    pub max_excess_residual: f64,
    pub theta: f64,
}

/// Everything the fixed-point search knows; serializable as a checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunerState {
    pub k: usize,
    pub m: Vec<u64>,
    pub big_m: Vec<f64>,
    pub eps: Vec<f64>,
    pub tau: Vec<f64>,
    pub lambda_q: Vec<f64>,
    pub lambda_q_tilde: Vec<f64>,
    pub t: Vec<f64>,
    pub last: Option<FEval>,
    pub iterations: usize,
    pub theta: f64,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
}

impl TunerState {
    pub fn new(sel: &Selection, eps: Vec<f64>, tau_fraction: f64) -> TunerState {
        let k = sel.m.len();
        let tau = eps.iter().map(|e| tau_fraction * e).collect();
        let t = (1..=k).map(|i| {
            let (lo, hi) = box_bounds(&sel.big_m, i);
            0.5 * (lo + hi)
        });
        TunerState {
            k,
            m: sel.m.clone(),
            big_m: sel.big_m.clone(),
            eps,
            tau,
            lambda_q: sel.lambda_q.clone(),
            lambda_q_tilde: sel.lambda_q_tilde.clone(),
            t: t.collect(),
            last: None,
            iterations: 0,
            theta: 1.0,
            converged: false,
            history: vec![],
        }
    }

    pub fn box_bounds(&self, i: usize) -> (f64, f64) {
        box_bounds(&self.big_m, i)
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        t.len() == self.k && (1..=self.k).all(|i| {
            let (lo, hi) = self.box_bounds(i);
            t[i - 1] >= lo && t[i - 1] <= hi
        })
    }

    pub fn assignment(&self, t: &[f64]) -> Result<SiteAssignment> {
        SiteAssignment::new(t.to_vec(), self.tau.clone())
    }

    pub fn profile(&self, q: &ProfileFunction, h: &Arc<CascadeProfile>, t: &[f64]) -> Result<ProfileFunction> {
        make_q_s_tau(q, h, &self.assignment(t)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<TunerState> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Slack allowed when checking `s in P`, in units of `t`.
const BOX_TOL: f64 = 1e-9;

/// `F(t) = s` with `q(4^{-s_i}) = m_i^2 / Lambda_{Q,m_i}` and `Q = q_{S,tau}`.
pub fn evaluate_f(
    state: &TunerState,
    t: &[f64],
    q: &ProfileFunction,
    h: &Arc<CascadeProfile>,
    eigen: &EigenOptions,
) -> Result<FEval> {
    if !state.contains(t) {
        return Err(Error::SpecViolation(format!("t = {t:?} is outside the box")));
    }
    let qs = state.profile(q, h, t)?;
    let rows = (1..=state.k)
        .into_par_iter()
        .map(|i| {
            let m = state.m[i - 1];
            let e = first_dirichlet_eigenvalue(&qs, m, eigen)?;
            let m2 = (m as f64).powi(2);
            let num = e.excess - e.lambda * q.deficit(4f64.powf(-t[i - 1])).v;
            let (lo, hi) = state.box_bounds(i);
            let s = solve_site(q, e.excess / e.lambda, lo, hi)?;
            if s < lo - BOX_TOL || s > hi + BOX_TOL {
                return Err(Error::BoxEscape { index: i, target: s, lo, hi });
            }
            let slack = 1e3 * eigen.tol.max(1e-15);
            let ok = e.lambda >= state.lambda_q[i - 1] * (1.0 - slack)
                && e.lambda <= state.lambda_q_tilde[i - 1] * (1.0 + slack);
            Ok((s.clamp(lo, hi), e.lambda, e.excess, num / m2, num / e.excess, ok))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FEval {
        t: t.to_vec(),
        s: rows.iter().map(|r| r.0).collect(),
        lambda: rows.iter().map(|r| r.1).collect(),
        excess: rows.iter().map(|r| r.2).collect(),
        residuals: rows.iter().map(|r| r.3).collect(),
        excess_residuals: rows.iter().map(|r| r.4).collect(),
        bracket_ok: rows.iter().map(|r| r.5).collect(),
    })
}

fn converged(ev: &FEval, opts: &TunerOptions) -> bool {
    ev.max_residual() <= opts.residual_tol && ev.max_excess_residual() <= opts.excess_tol
}

/// Damped iteration `t <- (1 - theta) t + theta F(t)`, halving `theta`
/// whenever the residual grows, with coordinatewise bisection on the
/// residual signs once the iteration stalls. Writes a checkpoint after every
/// evaluation when `checkpoint` is given.
pub fn find_fixed_point(
    mut state: TunerState,
    q: &ProfileFunction,
    h: &Arc<CascadeProfile>,
    opts: &TunerOptions,
    checkpoint: Option<&Path>,
) -> Result<TunerState> {
    let mut best: Option<FEval> = None;
    let mut stalls = 0;
    while state.iterations < opts.max_iter {
        let ev = evaluate_f(&state, &state.t, q, h, &opts.eigen)?;
        state.iterations += 1;
        state.history.push(IterationRecord {
            iteration: state.iterations,
            t: ev.t.clone(),
            s: ev.s.clone(),
            max_residual: ev.max_residual(),
            max_excess_residual: ev.max_excess_residual(),
            theta: state.theta,
        });
        let improved = best.as_ref().is_none_or(|b| ev.max_excess_residual() < b.max_excess_residual());
        if improved {
            best = Some(ev.clone());
            stalls = 0;
        } else {
            state.theta *= 0.5;
            stalls += 1;
        }
        state.last = Some(ev.clone());
        if converged(&ev, opts) {
            state.converged = true;
            if let Some(p) = checkpoint {
                state.save(p)?;
            }
            return Ok(state);
        }
        if stalls >= 4 || state.theta < 1e-3 {
            let t = bisect_sites(&state, q, h, opts, &mut best)?;
            state.t = t;
            state.theta = 1.0;
            stalls = 0;
        } else {
            let base = best.as_ref().expect("at least one evaluation");
            state.t = base
                .t
                .iter()
                .zip(&base.s)
                .map(|(t, s)| (1.0 - state.theta) * t + state.theta * s)
                .collect();
        }
        if let Some(p) = checkpoint {
            state.save(p)?;
        }
    }
    if let Some(b) = best {
        state.t = b.t.clone();
        state.last = Some(b.clone());
    }
    if let Some(p) = checkpoint {
        state.save(p)?;
    }
    let residual = state.last.as_ref().map_or(f64::INFINITY, |e| e.max_excess_residual());
    Err(Error::NoConvergence { what: "fixed-point search", iterations: state.iterations, residual })
}

/// One Gauss-Seidel sweep of bisection: `r_i` increases with `t_i`, so each
/// coordinate is bisected on the sign of its own residual.
fn bisect_sites(
    state: &TunerState,
    q: &ProfileFunction,
    h: &Arc<CascadeProfile>,
    opts: &TunerOptions,
    best: &mut Option<FEval>,
) -> Result<Vec<f64>> {
    let mut t = state.t.clone();
    for i in 1..=state.k {
        let (mut lo, mut hi) = state.box_bounds(i);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            t[i - 1] = mid;
            let ev = evaluate_f(state, &t, q, h, &opts.eigen)?;
            if best.as_ref().is_none_or(|b| ev.max_excess_residual() < b.max_excess_residual()) {
                *best = Some(ev.clone());
            }
            let r = ev.excess_residuals[i - 1];
            if r.abs() <= 0.1 * opts.excess_tol {
                break;
            }
            if r > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    Ok(t)
}

/// Outcome of evaluating `F` at random points of the box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfMapReport {
    pub points: usize,
    pub inside: usize,
    /// Smallest distance from `F(t)` to the box boundary over all points,
    /// negative when some image escapes.
    pub min_margin: f64,
    pub escapes: Vec<Vec<f64>>,
}

impl SelfMapReport {
    pub fn holds(&self) -> bool {
        self.inside == self.points
    }
}

/// Evaluates `F` at `n` seeded uniform points of `P` and records whether each
/// image stays in `P`.
pub fn self_map_probe(
    state: &TunerState,
    q: &ProfileFunction,
    h: &Arc<CascadeProfile>,
    n: usize,
    seed: u64,
    eigen: &EigenOptions,
) -> Result<SelfMapReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (1..=state.k)
                .map(|i| {
                    let (lo, hi) = state.box_bounds(i);
                    rng.gen_range(lo..=hi)
                })
                .collect()
        })
        .collect();
    let margins = points
        .par_iter()
        .map(|t| match evaluate_f(state, t, q, h, eigen) {
            Ok(ev) => Ok((1..=state.k)
                .map(|i| {
                    let (lo, hi) = state.box_bounds(i);
                    let s = ev.s[i - 1];
                    (s - lo).min(hi - s)
                })
                .fold(f64::INFINITY, f64::min)),
            Err(Error::BoxEscape { target, lo, hi, .. }) => Ok((target - lo).min(hi - target)),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<f64>>>()?;
    let escapes: Vec<Vec<f64>> =
        points.iter().zip(&margins).filter(|(_, m)| **m < -BOX_TOL).map(|(t, _)| t.clone()).collect();
    Ok(SelfMapReport {
        points: n,
        inside: n - escapes.len(),
        min_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
        escapes,
    })
}

/// Selection, sandwich bounds and fixed point in one call.
pub fn tune(
    q: &ProfileFunction,
    q_tilde: &ProfileFunction,
    h: &Arc<CascadeProfile>,
    opts: &TunerOptions,
    checkpoint: Option<&Path>,
) -> Result<(Selection, TunerState)> {
    let sel = select_m_and_big_m(opts.k, q, q_tilde, opts)?;
    let eps = (1..=opts.k)
        .into_par_iter()
        .map(|i| select_eps(q, q_tilde, h, &sel.big_m, i, opts))
        .collect::<Result<Vec<f64>>>()?;
    let state = TunerState::new(&sel, eps, opts.tau_fraction);
    let state = find_fixed_point(state, q, h, opts, checkpoint)?;
    Ok((sel, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth_kit::{make_q_tilde, make_q_with, CascadeSpec, Mutation, QParams, SkeletonParams};

    fn setup() -> (ProfileFunction, ProfileFunction, Arc<CascadeProfile>) {
        let p = QParams::default();
        let spec = CascadeSpec::geometric(&SkeletonParams { depth: 12, ..SkeletonParams::default() }).unwrap();
        (
            make_q_with(p).unwrap(),
            make_q_tilde(p).unwrap(),
            Arc::new(CascadeProfile::new(&spec, &Mutation::default()).unwrap()),
        )
    }

    #[test]
    fn site_solve_inverts_the_deficit() {
        let (q, _, _) = setup();
        let d = q.deficit(4f64.powf(-2.3)).v;
        let s = solve_site(&q, d, 1.0, 2.0).unwrap();
        assert!((s - 2.3).abs() < 1e-12);
    }

    #[test]
    fn first_selection_brackets() {
        let (q, qt, _) = setup();
        let opts = TunerOptions { k: 1, ..TunerOptions::default() };
        let sel = select_m_and_big_m(1, &q, &qt, &opts).unwrap();
        let (lo, hi) = sel.bracket_margins[0];
        assert!(lo > 0.0 && hi > 0.0);
        assert!(sel.big_m[1] > 1.0);
        assert!(sel.big_m_residuals[0] < 1e-10);
        // one below fails the upper bracket
        let e = first_dirichlet_eigenvalue(&qt, sel.m[0] - 1, &opts.eigen).unwrap();
        assert!(bracket_margins(&e, &q, 0.25).1 <= 0.0);
    }
}
