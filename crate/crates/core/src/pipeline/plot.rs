//! CSV data behind the figures: profiles, eigenfunctions near the cascade
//! center, level-set cells and critical points.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::stages::{analyze_instance, assemble_instance, build_profiles, solve_instance};
use super::Layout;
use crate::error::Result;
use crate::io::CsvTable;
use crate::oscillation::critical_table;
use crate::smooth_kit::Mutation;
use crate::torus::levelset_table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    Profiles,
    Eigenfunction,
    Levelset,
    Criticals,
}

/// Writes `plot_<kind>[_<i>].csv` for each requested kind and returns the
/// paths. Needs the tuned state; level sets and critical points also need
/// the `assemble` and `analyze` artifacts.
pub fn emit_plot_data(cfg: &PipelineConfig, which: &[PlotKind]) -> Result<Vec<PathBuf>> {
    let layout = Layout::new(cfg)?;
    let state = layout.load_state()?;
    for kind in which {
        match kind {
            PlotKind::Levelset => {
                for i in 1..=state.k {
                    layout.require(&format!("assembly_{i}.json"), "assemble")?;
                }
            }
            PlotKind::Criticals => {
                for i in 1..=state.k {
                    layout.require(&format!("analysis_{i}.json"), "analyze")?;
                }
            }
            _ => {}
        }
    }
    let profiles = build_profiles(cfg, &Mutation::default())?;
    let mut written = Vec::new();
    if which.contains(&PlotKind::Profiles) {
        let qs = state.profile(&profiles.q, &profiles.h, &state.t)?;
        let n = cfg.grid.profile_samples;
        let mut xs: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
        // geometric refinement toward 0 resolves every layer
        let deepest = state.t.iter().copied().fold(0.0, f64::max) + 2.0;
        xs.extend((0..n).map(|k| 4f64.powf(-deepest * k as f64 / (n - 1) as f64)));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut t = CsvTable::new(&["x", "q", "q_tilde", "q_S_tau"]);
        for x in xs {
            t.push(vec![x, profiles.q.eval(x), profiles.q_tilde.eval(x), qs.eval(x)]);
        }
        let p = layout.path("plot_profiles.csv");
        t.save(&p)?;
        written.push(p);
    }
    let per_instance = [PlotKind::Eigenfunction, PlotKind::Levelset, PlotKind::Criticals];
    if per_instance.iter().any(|k| which.contains(k)) {
        for i in 1..=state.k {
            let inst = solve_instance(cfg, &profiles, &state, i)?;
            if which.contains(&PlotKind::Eigenfunction) {
                let n = cfg.grid.eigenfunction_samples;
                let (a, b) = (inst.x_star - inst.half_width, inst.x_star + inst.half_width);
                let mut t = CsvTable::new(&["x", "F", "F_prime", "F_minus_level"]);
                for k in 0..n {
                    let x = a + (b - a) * k as f64 / (n - 1) as f64;
                    let [w, wp] = inst.flat.dense_w(x)?;
                    t.push(vec![x, 1.0 + w, wp, w]);
                }
                let p = layout.path(&format!("plot_eigenfunction_{i}.csv"));
                t.save(&p)?;
                written.push(p);
            }
            if which.contains(&PlotKind::Levelset) || which.contains(&PlotKind::Criticals) {
                let analysis = analyze_instance(cfg, &inst)?;
                if which.contains(&PlotKind::Criticals) {
                    let p = layout.path(&format!("plot_criticals_{i}.csv"));
                    critical_table(&analysis.oscillation).save(&p)?;
                    written.push(p);
                }
                if which.contains(&PlotKind::Levelset) {
                    let asm = assemble_instance(cfg, &inst, &analysis)?;
                    let p = layout.path(&format!("plot_levelset_{i}.csv"));
                    levelset_table(&asm.levelset).save(&p)?;
                    written.push(p);
                }
            }
        }
    }
    Ok(written)
}
