//! The acceptance checks, each turned into a [`CheckRecord`].

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::PipelineConfig;
use super::report::CheckRecord;
use super::stages::{Analysis, Assembly, Instance, Profiles};
use crate::error::Result;
use crate::oscillation::{analyze_oscillation, sign_pattern, verify_cascade_properties, CascadeWindow};
use crate::smooth_kit::{verify_sandwich, CascadeProfile, Mutation, ProfileFunction, SandwichGrid, TrigPolynomial};
use crate::sturm_liouville::{check_variational_brackets, fd_first_eigenvalue, first_dirichlet_eigenvalue, FlatSolution};
use crate::tuner::{self_map_probe, TunerState};

pub const NAMES: [&str; 11] = [
    "01_constant_oracle",
    "02_fd_oracle",
    "03_variational_brackets",
    "04_symmetry_wronskian",
    "05_sandwich",
    "06_fixed_point",
    "07_critical_points",
    "08_telescoping",
    "09_cascade_properties",
    "10_level_components",
    "11_determinism",
];

pub const ANCHORS: [&str; 11] = [
    "Lambda_{1,m} = pi^2/16 + m^2 for m = 0..10",
    "shooting eigenvalue equals the finite-difference eigenvalue for random smooth Q",
    "m^2/Q(0) < Lambda_{Q,m} < m^2/(Q(0) - eps) for m beyond a threshold",
    "U'(2) = 0 and the Wronskian of (U, V) is a nonzero constant",
    "q_tilde <= q_{S,tau} <= q",
    "F maps P into P and has a fixed point with Lambda q(4^{-t_i}) = m_i^2",
    "at least N - 2 isolated critical points in the cascade window",
    "u'(x_i) = -sum_{j >= i} int K u",
    "cascade properties and interlacing of (eta_j) and (xi_j)",
    "one topological circle per certified odd j, disjoint",
    "verify is deterministic",
];

/// `(pass, margin, detail)` of one check.
pub type Verdict = (bool, f64, String);

pub fn record(index: usize, f: impl FnOnce() -> Result<Verdict>) -> CheckRecord {
    let start = Instant::now();
    let (pass, margin, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, -1.0, format!("error: {e}")),
    };
    CheckRecord {
        name: NAMES[index].to_string(),
        anchor: ANCHORS[index].to_string(),
        pass,
        margin,
        detail,
        runtime: start.elapsed().as_secs_f64(),
    }
}

pub fn failed(index: usize, reason: &str) -> CheckRecord {
    record(index, || Ok((false, -1.0, reason.to_string())))
}

pub fn constant_oracle(cfg: &PipelineConfig) -> Result<Verdict> {
    let q = ProfileFunction::constant(1.0);
    let mut worst: f64 = 0.0;
    for m in 0..=cfg.checks.oracle_max_m {
        let e = first_dirichlet_eigenvalue(&q, m, &cfg.solver.eigen)?;
        let exact = PI * PI / 16.0 + (m * m) as f64;
        worst = worst.max((e.lambda - exact).abs() / exact);
    }
    let tol = cfg.checks.oracle_tol;
    Ok((worst <= tol, 1.0 - worst / tol, format!("max relative error {worst:.3e} (tol {tol:.0e})")))
}

/// A random positive trigonometric polynomial and a random `m`.
pub fn random_coefficient(rng: &mut ChaCha8Rng) -> (ProfileFunction, u64) {
    let terms = rng.gen_range(1..=4);
    let cos: Vec<f64> = (0..terms).map(|_| rng.gen_range(-0.3..0.3)).collect();
    let sin: Vec<f64> = (0..terms).map(|_| rng.gen_range(-0.3..0.3)).collect();
    let bound: f64 = cos.iter().chain(&sin).map(|c| c.abs()).sum();
    let a0 = bound + rng.gen_range(0.5..2.0);
    let half_period = [1.0, 2.0, 4.0][rng.gen_range(0..3)];
    let p = TrigPolynomial { a0, cos, sin, half_period };
    (ProfileFunction::new("random_trig", p), rng.gen_range(0..=6))
}

pub fn fd_oracle(cfg: &PipelineConfig) -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.checks.fd_trials {
        let (q, m) = random_coefficient(&mut rng);
        let e = first_dirichlet_eigenvalue(&q, m, &cfg.solver.eigen)?;
        let fd = fd_first_eigenvalue(&q, m, cfg.checks.fd_points);
        worst = worst.max((e.lambda - fd).abs() / fd);
    }
    let tol = cfg.checks.fd_tol;
    Ok((
        worst <= tol,
        1.0 - worst / tol,
        format!("{} trials, max relative difference {worst:.3e} (tol {tol:.0e})", cfg.checks.fd_trials),
    ))
}

pub fn brackets(cfg: &PipelineConfig, q: &ProfileFunction) -> Result<Verdict> {
    let c = &cfg.checks;
    let mut ms: Vec<u64> = (0..=c.bracket_max_m).collect();
    let mut m = c.bracket_max_m as f64;
    while m < c.bracket_upper_max_m as f64 {
        m = (m * 1.25).ceil();
        ms.push((m as u64).min(c.bracket_upper_max_m));
    }
    ms.dedup();
    let r = check_variational_brackets(q, ms.iter().copied(), c.bracket_eps, &cfg.solver.eigen)?;
    let low: Vec<&_> = r.rows.iter().filter(|row| row.m <= c.bracket_max_m).collect();
    let lower_ok = low.iter().all(|row| row.lower_ok);
    let margin = low.iter().filter(|row| row.m > 0).map(|row| row.lower_margin).fold(f64::INFINITY, f64::min);
    let pass = lower_ok && r.m0.is_some();
    let m0 = r.m0.map_or("none".to_string(), |m| m.to_string());
    Ok((
        pass,
        if lower_ok { margin } else { -margin.abs() },
        format!(
            "lower bracket for m <= {}: {}; upper bracket (eps {}) holds for all tested m >= {m0} up to {}",
            c.bracket_max_m,
            if lower_ok { "holds" } else { "violated" },
            c.bracket_eps,
            c.bracket_upper_max_m
        ),
    ))
}

pub fn symmetry(cfg: &PipelineConfig, instances: &[Instance]) -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for inst in instances {
        let b = &inst.basis.report;
        let r = (b.u_prime_at_2 / cfg.solver.symmetry_tol).max(b.wronskian_spread / cfg.solver.wronskian_tol);
        worst = worst.max(r);
        parts.push(format!("i={}: |U'(2)|/max|U'| {:.2e}, W spread {:.2e}", inst.i, b.u_prime_at_2, b.wronskian_spread));
    }
    let nonzero = instances.iter().all(|i| i.basis.report.ln_wronskian.is_finite());
    Ok((worst <= 1.0 && nonzero && !instances.is_empty(), 1.0 - worst, parts.join("; ")))
}

pub fn sandwich(cfg: &PipelineConfig, profiles: &Profiles, instances: &[Instance]) -> Result<Verdict> {
    let Some(inst) = instances.first() else {
        return Ok((false, -1.0, "no tuned instance".into()));
    };
    let grid = SandwichGrid { uniform: cfg.grid.sandwich_uniform, per_feature: cfg.grid.sandwich_per_feature };
    let r = verify_sandwich(&profiles.q_tilde, &inst.q_s_tau, &profiles.q, &grid);
    Ok((
        r.holds && r.min_slack > 0.0,
        r.min_slack,
        format!("{} points, min lower slack {:.3e}, min active upper slack {:?}", r.points, r.min_lower_slack, r.min_upper_slack_active),
    ))
}

pub struct FixedPointRuns<'a> {
    pub main: &'a TunerState,
    pub small: Option<&'a TunerState>,
    pub small_error: Option<String>,
}

pub fn fixed_point(cfg: &PipelineConfig, profiles: &Profiles, runs: &FixedPointRuns) -> Result<Verdict> {
    let tol = cfg.tuner.residual_tol;
    let probe = self_map_probe(runs.main, &profiles.q, &profiles.h, cfg.checks.self_map_points, cfg.seed, &cfg.tuner.eigen)?;
    let mut states = vec![runs.main];
    states.extend(runs.small);
    let mut worst: f64 = 0.0;
    let mut parts = vec![format!("self-map {}/{} inside (min margin {:.3e})", probe.inside, probe.points, probe.min_margin)];
    let mut converged = runs.small_error.is_none();
    for s in &states {
        let last = s.last.as_ref();
        let r = last.map_or(f64::INFINITY, |e| e.max_residual());
        worst = worst.max(r);
        converged &= s.converged && r <= tol;
        parts.push(format!(
            "k={}: {} in {} iterations, residual {r:.2e}, excess residual {:.2e}, t = {:?}",
            s.k,
            if s.converged { "converged" } else { "not converged" },
            s.iterations,
            last.map_or(f64::INFINITY, |e| e.max_excess_residual()),
            s.t
        ));
    }
    if let Some(e) = &runs.small_error {
        parts.push(format!("k={}: {e}", cfg.checks.small_k));
    }
    Ok((probe.holds() && converged, (1.0 - worst / tol).min(probe.min_margin), parts.join("; ")))
}

pub fn critical_points(cfg: &PipelineConfig, analyses: &[Analysis]) -> Result<Verdict> {
    let need = cfg.profile.cascade.depth - 2;
    let mut margin = f64::INFINITY;
    let mut pass = !analyses.is_empty();
    let mut parts = Vec::new();
    for a in analyses {
        let o = &a.oscillation;
        let isolated_in_window = o.critical_points.iter().filter(|c| c.isolated && c.u_second.abs() > o.isolation_floor).count();
        let signs_ok = o.sign_violations.is_empty()
            && o.certified_nodes.iter().all(|&j| o.derivative_signs[j - 1] == if j % 2 == 0 { 1 } else { -1 });
        pass &= isolated_in_window >= need && signs_ok;
        margin = margin.min(isolated_in_window as f64 - need as f64);
        parts.push(format!(
            "i={}: {isolated_in_window} isolated, {} certified nodes, sign violations {:?}",
            a.i,
            o.certified_nodes.len(),
            o.sign_violations
        ));
    }
    Ok((pass, margin, parts.join("; ")))
}

pub fn telescoping(cfg: &PipelineConfig, analyses: &[Analysis]) -> Result<Verdict> {
    let tol = cfg.analysis.telescoping_tol;
    let worst = analyses.iter().map(|a| a.oscillation.max_telescoping_error()).fold(0.0, f64::max);
    let rows: usize = analyses.iter().map(|a| a.oscillation.telescoping.len()).sum();
    Ok((
        !analyses.is_empty() && rows > 0 && worst <= tol,
        1.0 - worst / tol,
        format!("{rows} nodes, max relative error {worst:.3e} (tol {tol:.0e})"),
    ))
}

/// Integrates the flat solution for the layer's window potential with a
/// mutated cascade.
fn mutated_window(inst: &Instance, mutation: &Mutation) -> Result<(FlatSolution, CascadeWindow)> {
    let h = Arc::new(CascadeProfile::new(inst.window.h.spec(), mutation)?);
    let win = CascadeWindow { h, ..inst.window.clone() };
    let caps = inst.q_s_tau.features_in(inst.x_star - inst.half_width, inst.x_star + inst.half_width);
    let flat = FlatSolution::integrate(Arc::new(win.clone()), inst.x_star, inst.half_width, caps)?;
    Ok((flat, win))
}

pub fn cascade_properties(cfg: &PipelineConfig, instances: &[Instance], analyses: &[Analysis]) -> Result<Verdict> {
    let mut pass = !analyses.is_empty();
    let mut parts = Vec::new();
    let mut failures = 0usize;
    for a in analyses {
        let p = &a.properties;
        pass &= p.all_hold() && p.j0 <= p.last;
        failures += p.failures.len();
        parts.push(format!("i={}: j = {}..={}, failures {:?}", a.i, p.j0, p.last, p.failures));
    }
    // a reversed bump at k must break the derivative sign exactly there, and
    // mirrored bumps must keep signs while losing the node ordering
    let n = cfg.profile.cascade.depth;
    let flip = n / 2;
    let opts = cfg.oscillation_options();
    for inst in instances {
        let (flat, win) = mutated_window(inst, &Mutation { flip_sign: vec![flip], ..Mutation::default() })?;
        let k = |x: f64| win.k(x);
        let cert = sign_pattern(&flat, &k, &inst.nodes, inst.x_star, opts.c_prime)?;
        let flip_ok = cert.violations == vec![flip];
        let (flat, win) = mutated_window(inst, &Mutation { mirror_all: true, ..Mutation::default() })?;
        let k = |x: f64| win.k(x);
        let rep = analyze_oscillation(&flat, &k, &inst.nodes, inst.x_star, inst.x_star + inst.half_width, &opts)?;
        let props = verify_cascade_properties(&rep, &flat, rep.j0)?;
        let holds = props.property_holds();
        let mirror_ok = holds[0] && !holds[2] && props.failures.iter().all(|(name, _)| name == "node_values");
        pass &= flip_ok && mirror_ok;
        parts.push(format!(
            "i={} mutations: flip {flip} -> sign violations {:?}; mirror -> failures {:?}",
            inst.i, cert.violations, props.failures
        ));
    }
    Ok((pass, if pass { 1.0 } else { -(failures as f64).max(1.0) }, parts.join("; ")))
}

pub fn level_components(cfg: &PipelineConfig, assemblies: &[Assembly]) -> Result<Verdict> {
    let mut pass = !assemblies.is_empty();
    let mut margin = f64::INFINITY;
    let mut parts = Vec::new();
    for a in assemblies {
        let l = &a.levelset;
        let need = a.rectangles.len();
        let stable = a.refined.n_components == l.n_components && a.refined.n_circles == l.n_circles;
        let residual = a.phi.residual.relative;
        pass &= need > 0 && l.n_components >= need && l.n_circles == need && stable && l.disjoint;
        pass &= residual <= cfg.analysis.residual_tol;
        margin = margin.min(l.n_components as f64 - need as f64);
        parts.push(format!(
            "i={}: {} components ({} circles) for {need} odd j, refined {}/{}, disjoint {}, {} on the torus, residual {residual:.2e}",
            a.i, l.n_components, l.n_circles, a.refined.n_components, a.refined.n_circles, l.disjoint, l.torus_count
        ));
    }
    Ok((pass, margin, parts.join("; ")))
}
