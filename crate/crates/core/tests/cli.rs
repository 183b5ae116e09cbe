use std::path::Path;
use std::process::{Command, Output};

use torus_cascade::io::CsvTable;
use torus_cascade::pipeline::{AssemblySummary, InstanceSummary, Analysis};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torus-cascade")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn shallow_depth_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--depth", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("N >= 4"), "{}", stderr(&out));
}

#[test]
fn bad_config_file_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[analysis]\nc_prime = 0.5\n").unwrap();
    let out = run(&["tune", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("analysis.c_prime"), "{}", stderr(&out));
}

#[test]
fn plot_data_needs_the_tuned_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["plot-data", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("run the `tune` stage"), "{}", stderr(&out));
}

#[test]
fn staged_run_with_one_layer() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = d.to_str().unwrap();

    let out = run(&["build-profiles", "--out", o]);
    assert!(out.status.success(), "{}", stderr(&out));
    let q = CsvTable::load(&d.join("profile_q.csv")).unwrap();
    assert_eq!(q.header, ["x", "f", "f_prime", "f_double_prime"]);

    let out = run(&["plot-data", "--out", o, "--k", "1", "--which", "levelset"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["tune", "--out", o, "--k", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let state_path = d.join("tuner_state.json");
    let before = std::fs::read(&state_path).unwrap();
    let out = run(&["tune", "--out", o, "--k", "1", "--resume", state_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(std::fs::read(&state_path).unwrap(), before);

    let out = run(&["plot-data", "--out", o, "--k", "1", "--which", "criticals"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("run the `analyze` stage"), "{}", stderr(&out));

    for stage in ["solve", "analyze", "assemble"] {
        let out = run(&[stage, "--out", o, "--k", "1"]);
        assert!(out.status.success(), "{stage}: {}", stderr(&out));
    }
    let out = run(&["plot-data", "--out", o, "--k", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));

    let profiles = CsvTable::load(&d.join("plot_profiles.csv")).unwrap();
    assert_eq!(profiles.header, ["x", "q", "q_tilde", "q_S_tau"]);
    for row in &profiles.rows {
        assert!(row[2] <= row[3] && row[3] <= row[1], "{row:?}");
    }

    let solve: Vec<InstanceSummary> = read(&d.join("solve.json"));
    let analysis: Analysis = read(&d.join("analysis_1.json"));
    let eig = CsvTable::load(&d.join("plot_eigenfunction_1.csv")).unwrap();
    let xs = eig.column("x").unwrap();
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let x_star = solve[0].x_star;
    let reach = analysis
        .oscillation
        .critical_points
        .iter()
        .filter(|c| c.isolated)
        .map(|c| (c.x - x_star).abs())
        .fold(0.0, f64::max);
    assert!(reach > 0.0);
    assert!(lo <= x_star - reach && hi >= x_star + reach);

    let assembly: AssemblySummary = read(&d.join("assembly_1.json"));
    let cells = CsvTable::load(&d.join("plot_levelset_1.csv")).unwrap();
    assert_eq!(cells.len(), assembly.levelset.marked_cells);
    let crit = CsvTable::load(&d.join("plot_criticals_1.csv")).unwrap();
    assert_eq!(crit.header, ["j", "xi", "u_xi", "u_second_xi", "eta"]);
}
