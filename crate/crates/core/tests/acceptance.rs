//! End-to-end acceptance: runs `verify` twice with the default
//! configuration and prints one line per criterion.

use std::time::{Duration, Instant};

use torus_cascade::pipeline::{run_pipeline, PipelineConfig, VerificationReport};

const CRITERIA: [&str; 11] = [
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

fn verify(dir: &std::path::Path) -> (VerificationReport, Duration, Vec<u8>) {
    let mut cfg = PipelineConfig::default();
    cfg.output = dir.to_path_buf();
    let start = Instant::now();
    let report = run_pipeline(&cfg, None).expect("pipeline runs");
    let elapsed = start.elapsed();
    let bytes = std::fs::read(dir.join("report.json")).expect("report.json written");
    (report, elapsed, bytes)
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let (report, elapsed, first) = verify(dir.path());
    let (_, _, second) = verify(dir.path());

    let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, CRITERIA);

    let budgets = [("01_constant_oracle", 1.0), ("02_fd_oracle", 60.0), ("06_fixed_point", 1800.0)];
    let mut failures = Vec::new();
    for (line, check) in report.lines().iter().zip(&report.checks) {
        println!("{line}  [{:.2} s]", check.runtime);
        if !check.pass {
            failures.push(check.name.clone());
        }
        if let Some((_, limit)) = budgets.iter().find(|(n, _)| *n == check.name) {
            if check.runtime >= *limit {
                println!("FAIL {} runtime {:.2} s exceeds {limit} s", check.name, check.runtime);
                failures.push(format!("{} runtime", check.name));
            }
        }
    }
    let identical = first == second;
    println!("{} repeated verify gives byte-identical report.json", if identical { "PASS" } else { "FAIL" });
    println!("verify wall time {:.1} s (budget 1800 s)", elapsed.as_secs_f64());
    if !identical {
        failures.push("report.json differs between runs".into());
    }
    if elapsed >= Duration::from_secs(1800) {
        failures.push("verify exceeded 30 minutes".into());
    }
    assert!(failures.is_empty(), "failed: {failures:?}");
}
