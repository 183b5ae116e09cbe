//! The verification report: one record per acceptance check.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::write_json;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    /// Stable identifier, `01_constant_oracle` and so on.
    pub name: String,
    /// The statement being checked.
    pub anchor: String,
    pub pass: bool,
    /// Normalized slack: positive when the check passes, in the check's own
    /// units (described in `detail`).
    pub margin: f64,
    pub detail: String,
    /// Wall time in seconds; kept out of the report file so that reruns are
    /// byte-identical, and written to `runtimes.json` instead.
    #[serde(skip)]
    pub runtime: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub config_hash: String,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn new(config_hash: String, checks: Vec<CheckRecord>) -> VerificationReport {
        let passed = checks.iter().filter(|c| c.pass).count();
        let summary = Summary { total: checks.len(), passed, failed: checks.len() - passed };
        VerificationReport { config_hash, checks, summary }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Writes `report.json` and `runtimes.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("report.json"), self)?;
        let times: BTreeMap<&str, f64> = self.checks.iter().map(|c| (c.name.as_str(), c.runtime)).collect();
        write_json(&dir.join("runtimes.json"), &times)
    }

    pub fn load(dir: &Path) -> Result<VerificationReport> {
        Ok(serde_json::from_str(&std::fs::read_to_string(dir.join("report.json"))?)?)
    }

    /// One line per check.
    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| format!("{} {:<28} margin {:+.3e}  {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.margin, c.detail))
            .collect()
    }
}
