//! Samples of the conformal factor `Q` of `Q(x)(dx^2 + dy^2)` over one
//! period, as CSV with a JSON sidecar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{write_json, CsvTable};
use crate::smooth_kit::ProfileFunction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricMetadata {
    pub profile: String,
    pub samples: usize,
    pub period: f64,
    pub top: f64,
    pub sites: Vec<f64>,
    pub tau: Vec<f64>,
    /// Fixed-point residuals relative to `m_i^2`.
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricFile {
    pub metadata: MetricMetadata,
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub deficit: Vec<f64>,
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `x, Q, top - Q` at `n` uniform points of `[0, 2)` to `path` and
/// the metadata next to it with extension `json`.
pub fn export_metric(
    q: &ProfileFunction,
    n: usize,
    sites: &[f64],
    tau: &[f64],
    residuals: &[f64],
    path: &Path,
) -> Result<MetricFile> {
    if n == 0 {
        return Err(Error::config("grid.metric_samples", "must be positive"));
    }
    let period = q.period().unwrap_or(2.0);
    let mut table = CsvTable::new(&["x", "q", "deficit"]);
    let mut out = MetricFile {
        metadata: MetricMetadata {
            profile: q.name().to_string(),
            samples: n,
            period,
            top: q.top(),
            sites: sites.to_vec(),
            tau: tau.to_vec(),
            residuals: residuals.to_vec(),
        },
        x: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        deficit: Vec::with_capacity(n),
    };
    for k in 0..n {
        let x = period * k as f64 / n as f64;
        let (v, d) = (q.eval(x), q.deficit(x).v);
        table.push(vec![x, v, d]);
        out.x.push(x);
        out.q.push(v);
        out.deficit.push(d);
    }
    table.save(path)?;
    write_json(&sidecar(path), &out.metadata)?;
    Ok(out)
}

/// Reads a file written by [`export_metric`].
pub fn read_metric(path: &Path) -> Result<MetricFile> {
    let t = CsvTable::load(path)?;
    let col = |name: &str| t.column(name).ok_or_else(|| Error::config("metric", format!("missing column {name}")));
    let text = std::fs::read_to_string(sidecar(path))?;
    Ok(MetricFile { metadata: serde_json::from_str(&text)?, x: col("x")?, q: col("q")?, deficit: col("deficit")? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth_kit::{make_q_with, QParams};

    #[test]
    fn flat_metric_is_all_ones() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("flat.csv");
        let m = export_metric(&ProfileFunction::constant(1.0), 100, &[], &[], &[], &p).unwrap();
        assert!(m.q.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.csv");
        let q = make_q_with(QParams::default()).unwrap();
        let m = export_metric(&q, 1000, &[1.5], &[1e-4], &[3e-12], &p).unwrap();
        let r = read_metric(&p).unwrap();
        assert_eq!(m, r);
        for (a, b) in m.q.iter().zip(&r.q) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
