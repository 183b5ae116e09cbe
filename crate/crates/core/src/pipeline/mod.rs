//! Configuration, orchestration of the stages, the verification report and
//! plot-data export.

pub mod checks;
pub mod config;
pub mod plot;
pub mod report;
pub mod stages;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{AnalysisConfig, CheckConfig, GridConfig, PipelineConfig, ProfileConfig, SolverConfig};
pub use plot::{emit_plot_data, PlotKind};
pub use report::{CheckRecord, Summary, VerificationReport};
pub use stages::{
    analyze_instance, assemble_instance, build_profiles, run_tuner, solve_instance, Analysis, Assembly,
    AssemblySummary, Instance, InstanceSummary, LevelSetSummary, Profiles,
};

use crate::error::{Error, Result};
use crate::io::{to_json, write_json};
use crate::oscillation::critical_table;
use crate::smooth_kit::{export_profile_csv, Mutation};
use crate::torus::export_metric;
use crate::tuner::{TunerOptions, TunerState};

pub const STATE_FILE: &str = "tuner_state.json";

/// File names inside the output directory.
pub struct Layout {
    pub dir: PathBuf,
}

impl Layout {
    pub fn new(cfg: &PipelineConfig) -> Result<Layout> {
        fs::create_dir_all(&cfg.output)?;
        Ok(Layout { dir: cfg.output.clone() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn state(&self) -> PathBuf {
        self.path(STATE_FILE)
    }

    /// Loads the tuned state, or names the stage that produces it.
    pub fn load_state(&self) -> Result<TunerState> {
        let p = self.state();
        if !p.exists() {
            return Err(Error::MissingArtifact { artifact: p.display().to_string(), stage: "tune".into() });
        }
        TunerState::load(&p)
    }

    pub fn require(&self, name: &str, stage: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact { artifact: p.display().to_string(), stage: stage.into() })
        }
    }
}

/// Writes the dense samples of `q`, `q̃` and `h` on `[0, 1]`.
pub fn write_profiles(cfg: &PipelineConfig, layout: &Layout, profiles: &Profiles) -> Result<()> {
    let n = cfg.grid.profile_samples;
    let xs: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    let h = crate::smooth_kit::make_h(&profiles.spec)?;
    for (name, f) in [("q", &profiles.q), ("q_tilde", &profiles.q_tilde), ("h", &h)] {
        export_profile_csv(f, &xs, fs::File::create(layout.path(&format!("profile_{name}.csv")))?)?;
    }
    write_json(&layout.path("cascade.json"), &profiles.spec)
}

pub fn tune_stage(cfg: &PipelineConfig, layout: &Layout, profiles: &Profiles, resume: Option<&Path>) -> Result<TunerState> {
    let (sel, state) = run_tuner(profiles, &cfg.tuner, resume, Some(&layout.state()))?;
    state.save(&layout.state())?;
    if let Some(sel) = sel {
        write_json(&layout.path("selection.json"), &sel)?;
    }
    let residuals = state.last.as_ref().map(|e| e.residuals.clone()).unwrap_or_default();
    let qs = state.profile(&profiles.q, &profiles.h, &state.t)?;
    export_metric(&qs, cfg.grid.metric_samples, &state.t, &state.tau, &residuals, &layout.path("metric.csv"))?;
    Ok(state)
}

pub fn solve_stage(cfg: &PipelineConfig, layout: &Layout, profiles: &Profiles, state: &TunerState) -> Result<Vec<Instance>> {
    let instances = (1..=state.k).map(|i| solve_instance(cfg, profiles, state, i)).collect::<Result<Vec<_>>>()?;
    let summaries: Vec<InstanceSummary> = instances.iter().map(Instance::summary).collect();
    write_json(&layout.path("solve.json"), &summaries)?;
    Ok(instances)
}

pub fn analyze_stage(cfg: &PipelineConfig, layout: &Layout, instances: &[Instance]) -> Result<Vec<Analysis>> {
    let mut out = Vec::new();
    for inst in instances {
        let a = analyze_instance(cfg, inst)?;
        write_json(&layout.path(&format!("analysis_{}.json", inst.i)), &a)?;
        critical_table(&a.oscillation).save(&layout.path(&format!("critical_points_{}.csv", inst.i)))?;
        out.push(a);
    }
    Ok(out)
}

pub fn assemble_stage(
    cfg: &PipelineConfig,
    layout: &Layout,
    instances: &[Instance],
    analyses: &[Analysis],
) -> Result<Vec<Assembly>> {
    let mut out = Vec::new();
    for (inst, a) in instances.iter().zip(analyses) {
        let asm = assemble_instance(cfg, inst, a)?;
        write_json(&layout.path(&format!("assembly_{}.json", inst.i)), &asm.summary())?;
        out.push(asm);
    }
    Ok(out)
}

/// Serialized downstream results of one pass, for the determinism check.
fn fingerprint(instances: &[Instance], analyses: &[Analysis], assemblies: &[Assembly]) -> Result<String> {
    let s: Vec<InstanceSummary> = instances.iter().map(Instance::summary).collect();
    let a: Vec<AssemblySummary> = assemblies.iter().map(Assembly::summary).collect();
    Ok(to_json(&s)? + &to_json(&analyses)? + &to_json(&a)?)
}

fn downstream(cfg: &PipelineConfig, profiles: &Profiles, state: &TunerState) -> Result<(Vec<Instance>, Vec<Analysis>, Vec<Assembly>)> {
    let instances = (1..=state.k).map(|i| solve_instance(cfg, profiles, state, i)).collect::<Result<Vec<_>>>()?;
    let analyses = instances.iter().map(|i| analyze_instance(cfg, i)).collect::<Result<Vec<_>>>()?;
    let assemblies =
        instances.iter().zip(&analyses).map(|(i, a)| assemble_instance(cfg, i, a)).collect::<Result<Vec<_>>>()?;
    Ok((instances, analyses, assemblies))
}

/// Runs every stage and every check, writing artifacts, a checkpoint and the
/// report into `cfg.output`. Stage errors are recorded in the checks that
/// depend on them; independent checks still run.
pub fn run_pipeline(cfg: &PipelineConfig, resume: Option<&Path>) -> Result<VerificationReport> {
    cfg.validate()?;
    let layout = Layout::new(cfg)?;
    fs::write(layout.path("config.toml"), cfg.to_toml()?)?;
    let mut records = vec![checks::record(0, || checks::constant_oracle(cfg)), checks::record(1, || checks::fd_oracle(cfg))];

    let profiles = match build_profiles(cfg, &Mutation::default()).and_then(|p| write_profiles(cfg, &layout, &p).map(|_| p)) {
        Ok(p) => p,
        Err(e) => {
            let reason = format!("build-profiles failed: {e}");
            records.extend((2..11).map(|k| checks::failed(k, &reason)));
            return finish(cfg, &layout, records);
        }
    };
    records.push(checks::record(2, || checks::brackets(cfg, &profiles.q)));

    let state = match tune_stage(cfg, &layout, &profiles, resume) {
        Ok(s) => s,
        Err(e) => {
            let reason = format!("tune failed: {e}");
            records.extend((3..11).map(|k| checks::failed(k, &reason)));
            return finish(cfg, &layout, records);
        }
    };
    let small_k = cfg.checks.small_k;
    let (small, small_error) = if small_k == state.k {
        (None, None)
    } else {
        let opts = TunerOptions { k: small_k, ..cfg.tuner };
        match run_tuner(&profiles, &opts, None, None) {
            Ok((_, s)) => {
                write_json(&layout.path(&format!("tuner_state_k{small_k}.json")), &s)?;
                (Some(s), None)
            }
            Err(e) => (None, Some(e.to_string())),
        }
    };

    let solved = solve_stage(cfg, &layout, &profiles, &state);
    let analyzed = solved.as_ref().map_err(|e| e.to_string()).and_then(|inst| analyze_stage(cfg, &layout, inst).map_err(|e| e.to_string()));
    let assembled = match (&solved, &analyzed) {
        (Ok(inst), Ok(an)) => assemble_stage(cfg, &layout, inst, an).map_err(|e| e.to_string()),
        (Err(e), _) => Err(e.to_string()),
        (_, Err(e)) => Err(e.clone()),
    };

    let stage_err = |what: &str, e: &str| format!("{what} failed: {e}");
    match &solved {
        Ok(inst) => {
            records.push(checks::record(3, || checks::symmetry(cfg, inst)));
            records.push(checks::record(4, || checks::sandwich(cfg, &profiles, inst)));
        }
        Err(e) => {
            records.push(checks::failed(3, &stage_err("solve", &e.to_string())));
            records.push(checks::failed(4, &stage_err("solve", &e.to_string())));
        }
    }
    let runs = checks::FixedPointRuns { main: &state, small: small.as_ref(), small_error };
    records.push(checks::record(5, || checks::fixed_point(cfg, &profiles, &runs)));
    match (&solved, &analyzed) {
        (Ok(inst), Ok(an)) => {
            records.push(checks::record(6, || checks::critical_points(cfg, an)));
            records.push(checks::record(7, || checks::telescoping(cfg, an)));
            records.push(checks::record(8, || checks::cascade_properties(cfg, inst, an)));
        }
        (_, Err(e)) => records.extend((6..9).map(|k| checks::failed(k, &stage_err("analyze", e)))),
        (Err(e), _) => records.extend((6..9).map(|k| checks::failed(k, &stage_err("solve", &e.to_string())))),
    }
    match &assembled {
        Ok(asm) => records.push(checks::record(9, || checks::level_components(cfg, asm))),
        Err(e) => records.push(checks::failed(9, &stage_err("assemble", e))),
    }
    records.push(checks::record(10, || {
        let (Ok(inst), Ok(an), Ok(asm)) = (&solved, &analyzed, &assembled) else {
            return Ok((false, -1.0, "earlier stages failed".into()));
        };
        let first = fingerprint(inst, an, asm)?;
        let (i2, a2, s2) = downstream(cfg, &profiles, &state)?;
        let second = fingerprint(&i2, &a2, &s2)?;
        let same = first == second;
        Ok((
            same,
            if same { 1.0 } else { -1.0 },
            format!("solve/analyze/assemble rerun from the tuned state: {} bytes, {}", first.len(), if same { "identical" } else { "different" }),
        ))
    }));
    finish(cfg, &layout, records)
}

fn finish(cfg: &PipelineConfig, layout: &Layout, records: Vec<CheckRecord>) -> Result<VerificationReport> {
    let report = VerificationReport::new(cfg.hash()?, records);
    report.save(&layout.dir)?;
    Ok(report)
}
