use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use torus_cascade::io::write_json;
use torus_cascade::pipeline::{
    analyze_stage, assemble_stage, build_profiles, emit_plot_data, run_pipeline, solve_stage, tune_stage,
    write_profiles, Layout, PipelineConfig, PlotKind,
};
use torus_cascade::smooth_kit::Mutation;
use torus_cascade::Error;

#[derive(Parser)]
#[command(name = "torus-cascade", version, about = "Liouville metrics on T^2 with cascades of critical points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration; defaults are used for anything missing.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tuner checkpoint to continue from.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Number of tuned layers (overrides `tuner.k`).
    #[arg(long)]
    k: Option<usize>,
    /// Cascade depth N (overrides `profile.cascade.depth`).
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample q, q_tilde and the cascade h.
    BuildProfiles(Common),
    /// Select (m_i, M_i, eps_i) and find the fixed point of the sites.
    Tune(Common),
    /// Solve the tuned eigenproblems and the flat solutions.
    Solve(Common),
    /// Certify the oscillation pattern of every tuned layer.
    Analyze(Common),
    /// Lift to the torus and count level-set components.
    Assemble(Common),
    /// Run every stage and every check; writes report.json.
    Verify(Common),
    /// Export CSV data for plots.
    PlotData {
        #[command(flatten)]
        common: Common,
        /// Which data sets to write (all when omitted).
        #[arg(long, value_enum, value_delimiter = ',')]
        which: Vec<PlotKind>,
    },
}

fn load_config(c: &Common) -> torus_cascade::Result<PipelineConfig> {
    let mut cfg = match &c.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(o) = &c.out {
        cfg.output = o.clone();
    }
    if let Some(k) = c.k {
        cfg.tuner.k = k;
    }
    if let Some(d) = c.depth {
        cfg.profile.cascade.depth = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Exit code 0 when every check passes, 1 when one fails or a stage errors.
fn run(command: Command) -> anyhow::Result<bool> {
    let common = match &command {
        Command::PlotData { common, .. } => common.clone(),
        Command::BuildProfiles(c)
        | Command::Tune(c)
        | Command::Solve(c)
        | Command::Analyze(c)
        | Command::Assemble(c)
        | Command::Verify(c) => c.clone(),
    };
    let cfg = load_config(&common)?;
    let layout = Layout::new(&cfg)?;
    let profiles = || build_profiles(&cfg, &Mutation::default());
    match command {
        Command::BuildProfiles(_) => {
            write_profiles(&cfg, &layout, &profiles()?)?;
            println!("profiles written to {}", layout.dir.display());
        }
        Command::Tune(c) => {
            let state = tune_stage(&cfg, &layout, &profiles()?, c.resume.as_deref())?;
            println!("k = {}, m = {:?}, t = {:?}, converged {}", state.k, state.m, state.t, state.converged);
            return Ok(state.converged);
        }
        Command::Solve(_) => {
            let state = layout.load_state()?;
            for inst in solve_stage(&cfg, &layout, &profiles()?, &state)? {
                println!("i = {}: m = {}, lambda = {:.17e}", inst.i, inst.m, inst.basis.u.lambda);
            }
        }
        Command::Analyze(_) | Command::Assemble(_) => {
            let assemble = matches!(command, Command::Assemble(_));
            let state = layout.load_state()?;
            let instances = solve_stage(&cfg, &layout, &profiles()?, &state)?;
            let analyses = analyze_stage(&cfg, &layout, &instances)?;
            for a in &analyses {
                let o = &a.oscillation;
                println!("i = {}: j0 = {}, {} isolated critical points, {} crossings", a.i, o.j0, o.n_critical, o.n_crossings);
            }
            if assemble {
                for asm in assemble_stage(&cfg, &layout, &instances, &analyses)? {
                    let l = &asm.levelset;
                    println!(
                        "i = {}: residual {:.2e}, {} components ({} circles), {} on the torus",
                        asm.i, asm.phi.residual.relative, l.n_components, l.n_circles, l.torus_count
                    );
                }
            }
        }
        Command::Verify(c) => {
            let report = run_pipeline(&cfg, c.resume.as_deref())?;
            for line in report.lines() {
                println!("{line}");
            }
            println!("{}/{} checks passed; config {}", report.summary.passed, report.summary.total, report.config_hash);
            return Ok(report.all_pass());
        }
        Command::PlotData { which, .. } => {
            let which = if which.is_empty() {
                vec![PlotKind::Profiles, PlotKind::Eigenfunction, PlotKind::Levelset, PlotKind::Criticals]
            } else {
                which
            };
            let written = emit_plot_data(&cfg, &which)?;
            write_json(&layout.path("plot_index.json"), &written).context("writing the plot index")?;
            for p in written {
                println!("{}", p.display());
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Config { .. }) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
