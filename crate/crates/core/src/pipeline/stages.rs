//! The pipeline stages: build -> tune -> solve -> analyze -> assemble.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::oscillation::{
    analyze_oscillation, verify_cascade_properties, CascadeWindow, OscillationReport, PropertyReport, WindowSummary,
};
use crate::smooth_kit::{make_q_tilde, make_q_with, CascadeProfile, CascadeSpec, Mutation, ProfileFunction};
use crate::sturm_liouville::{
    build_solution_basis, first_dirichlet_eigenvalue, solve_with_flat_point_using, BasisReport, EigenSummary,
    FlatSolution, FlatSummary, SolutionBasis,
};
use crate::torus::{
    assemble_eigenfunction, circle_rectangles, count_level_components, locate_2d_critical_points, CriticalPoint2D,
    GridSpec, LevelSetComponents, Phase, Rectangle, ResidualReport, TorusEigenfunction,
};
use crate::tuner::{find_fixed_point, tune, Selection, TunerOptions, TunerState};

/// `q`, `q̃` and the cascade `h`.
#[derive(Clone, Debug)]
pub struct Profiles {
    pub q: ProfileFunction,
    pub q_tilde: ProfileFunction,
    pub spec: CascadeSpec,
    pub h: Arc<CascadeProfile>,
}

pub fn build_profiles(cfg: &PipelineConfig, mutation: &Mutation) -> Result<Profiles> {
    let spec = CascadeSpec::geometric(&cfg.profile.cascade)?;
    spec.validate()?;
    Ok(Profiles {
        q: make_q_with(cfg.profile.q)?,
        q_tilde: make_q_tilde(cfg.profile.q)?,
        h: Arc::new(CascadeProfile::new(&spec, mutation)?),
        spec,
    })
}

/// Runs the selection and the fixed-point search, or continues from a
/// checkpoint. Returns the selection only when it was computed here.
pub fn run_tuner(
    profiles: &Profiles,
    opts: &TunerOptions,
    resume: Option<&Path>,
    checkpoint: Option<&Path>,
) -> Result<(Option<Selection>, TunerState)> {
    if let Some(path) = resume {
        let state = TunerState::load(path)?;
        if state.k != opts.k {
            return Err(Error::config("tuner.k", format!("checkpoint has k = {}, config has {}", state.k, opts.k)));
        }
        if state.converged {
            return Ok((None, state));
        }
        return Ok((None, find_fixed_point(state, &profiles.q, &profiles.h, opts, checkpoint)?));
    }
    let (sel, state) = tune(&profiles.q, &profiles.q_tilde, &profiles.h, opts, checkpoint)?;
    Ok((Some(sel), state))
}

/// One tuned layer: the eigenpair of `Q = q_{S,tau}` for `m_i` and the flat
/// solution at its cascade center.
pub struct Instance {
    pub i: usize,
    pub m: u64,
    pub t: f64,
    pub tau: f64,
    pub x_star: f64,
    pub half_width: f64,
    pub nodes: Vec<f64>,
    pub q_s_tau: ProfileFunction,
    pub basis: SolutionBasis,
    pub window: CascadeWindow,
    pub flat: Arc<FlatSolution>,
    pub window_agreement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub i: usize,
    pub m: u64,
    pub t: f64,
    pub tau: f64,
    pub x_star: f64,
    pub half_width: f64,
    pub eigen: EigenSummary,
    pub basis: BasisReport,
    pub window: WindowSummary,
    /// Largest `|K_window - K| / mu` across the window.
    pub window_agreement: f64,
    pub flat: FlatSummary,
}

impl Instance {
    pub fn summary(&self) -> InstanceSummary {
        InstanceSummary {
            i: self.i,
            m: self.m,
            t: self.t,
            tau: self.tau,
            x_star: self.x_star,
            half_width: self.half_width,
            eigen: self.basis.u.summary(),
            basis: self.basis.report.clone(),
            window: self.window.summary(self.basis.u.excess),
            window_agreement: self.window_agreement,
            flat: self.flat.summary(),
        }
    }
}

/// Solves layer `i` (1-based) of a tuned state. The basis is built without
/// a symmetry cutoff; the verdict on `U'(2)` is left to the checks.
pub fn solve_instance(cfg: &PipelineConfig, profiles: &Profiles, state: &TunerState, i: usize) -> Result<Instance> {
    let q_s_tau = state.profile(&profiles.q, &profiles.h, &state.t)?;
    let m = state.m[i - 1];
    let t = state.t[i - 1];
    let tau = state.tau[i - 1];
    let e = first_dirichlet_eigenvalue(&q_s_tau, m, &cfg.solver.eigen)?;
    let basis = build_solution_basis(e, f64::INFINITY)?;
    let sc = 4f64.powf(-t);
    let spec = &profiles.spec;
    let x_star = sc * spec.x_inf;
    let half_width = 1.1 * sc * (spec.x(1) - spec.x_inf);
    let window = CascadeWindow::new(&basis.u, &profiles.q, profiles.h.clone(), t, tau);
    let window_agreement = window.agreement(&basis.u, x_star - half_width, x_star + half_width, 20_000);
    let flat = solve_with_flat_point_using(&basis, x_star, half_width, Arc::new(window.clone()))?;
    Ok(Instance {
        i,
        m,
        t,
        tau,
        x_star,
        half_width,
        nodes: spec.points.iter().map(|x| sc * x).collect(),
        q_s_tau,
        basis,
        window,
        flat: Arc::new(flat),
        window_agreement,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub i: usize,
    pub oscillation: OscillationReport,
    pub properties: PropertyReport,
}

pub fn analyze_instance(cfg: &PipelineConfig, inst: &Instance) -> Result<Analysis> {
    let win = &inst.window;
    let k = |x: f64| win.k(x);
    let oscillation = analyze_oscillation(
        inst.flat.as_ref(),
        &k,
        &inst.nodes,
        inst.x_star,
        inst.x_star + inst.half_width,
        &cfg.oscillation_options(),
    )?;
    let properties = verify_cascade_properties(&oscillation, inst.flat.as_ref(), oscillation.j0)?;
    Ok(Analysis { i: inst.i, oscillation, properties })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetSummary {
    pub grid: GridSpec,
    pub level: f64,
    pub marked_cells: usize,
    pub n_components: usize,
    pub n_circles: usize,
    pub torus_count: u64,
    pub disjoint: bool,
    pub crowded_rectangles: Vec<usize>,
    pub circle_flags: Vec<bool>,
}

impl From<&LevelSetComponents> for LevelSetSummary {
    fn from(l: &LevelSetComponents) -> Self {
        LevelSetSummary {
            grid: l.grid,
            level: l.level,
            marked_cells: l.marked_cells,
            n_components: l.n_components,
            n_circles: l.n_circles,
            torus_count: l.torus_count,
            disjoint: l.disjoint,
            crowded_rectangles: l.crowded_rectangles.clone(),
            circle_flags: l.circle_flags.clone(),
        }
    }
}

pub struct Assembly {
    pub i: usize,
    pub phi: TorusEigenfunction,
    pub rectangles: Vec<Rectangle>,
    pub levelset: LevelSetComponents,
    pub refined: LevelSetSummary,
    pub criticals: Vec<CriticalPoint2D>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblySummary {
    pub i: usize,
    pub m: u64,
    pub level: f64,
    pub residual: ResidualReport,
    pub rectangles: Vec<Rectangle>,
    pub levelset: LevelSetSummary,
    pub refined: LevelSetSummary,
    pub criticals: Vec<CriticalPoint2D>,
}

impl Assembly {
    pub fn summary(&self) -> AssemblySummary {
        AssemblySummary {
            i: self.i,
            m: self.phi.m,
            level: self.phi.level,
            residual: self.phi.residual.clone(),
            rectangles: self.rectangles.clone(),
            levelset: (&self.levelset).into(),
            refined: self.refined.clone(),
            criticals: self.criticals.clone(),
        }
    }
}

/// Lifts the flat solution to the torus, checks its residual and counts the
/// components of `{phi = F(x*)}` over the certified part of the window.
pub fn assemble_instance(cfg: &PipelineConfig, inst: &Instance, analysis: &Analysis) -> Result<Assembly> {
    let rep = &analysis.oscillation;
    let n = inst.nodes.len();
    let g = &cfg.grid;
    let dx = (inst.nodes[n - 2] - inst.nodes[n - 1]) / g.levelset_cells_per_gap as f64;
    let x_hi = inst.nodes[rep.j0 - 1];
    let phi = assemble_eigenfunction(
        &inst.q_s_tau,
        inst.m,
        inst.flat.lambda,
        inst.flat.clone(),
        inst.x_star,
        Phase::Cos,
        (inst.x_star, x_hi),
        g.residual_nx,
        g.residual_ny,
        0.25 * dx,
        Some(&inst.window),
    )?;
    let rectangles = circle_rectangles(rep, &analysis.properties, inst.m);
    let nx = ((x_hi - inst.x_star) / dx).ceil() as usize;
    let grid = GridSpec::window(inst.x_star, x_hi, nx, inst.m, g.levelset_rows);
    let levelset = count_level_components(&phi, phi.level, &grid, &rectangles)?;
    let refined = (&count_level_components(&phi, phi.level, &grid.refined(), &rectangles)?).into();
    let m = inst.m.max(1) as f64;
    let criticals = locate_2d_critical_points(
        &phi,
        (inst.x_star, inst.x_star + inst.half_width),
        (-0.1 / m, 0.1 / m),
        rep.critical_tol,
        rep.isolation_floor,
    )?;
    Ok(Assembly { i: inst.i, phi, rectangles, levelset, refined, criticals })
}
