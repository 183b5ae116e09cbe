//! Oscillation of solutions near a flat point: dominance of the cascade
//! integrals, the sign pattern of `u'` at the nodes, critical points, level
//! crossings and their interlacing.

pub mod analysis;
pub mod critical;
pub mod dominance;
pub mod window;

pub use analysis::{
    analyze_oscillation, certify_sign_pattern, sign_pattern, verify_cascade_properties, OscillationOptions,
    OscillationReport, PropertyCheck, PropertyReport, SignCertificate, TelescopeRow,
};
pub use critical::{locate_critical_points, locate_level_crossings, CriticalKind, CriticalPoint, LevelCrossing};
pub use dominance::{verify_dominance, verify_dominance_spec, DominanceReport};
pub use window::{CascadeWindow, WindowSummary};

use crate::io::CsvTable;

/// Critical points and crossings as rows `j, xi, u(xi), u''(xi), eta`,
/// paired in decreasing order of position.
pub fn critical_table(report: &OscillationReport) -> CsvTable {
    let mut t = CsvTable::new(&["j", "xi", "u_xi", "u_second_xi", "eta"]);
    let mut xis: Vec<_> = report.critical_points.iter().filter(|c| c.isolated).collect();
    xis.sort_by(|a, b| b.x.total_cmp(&a.x));
    let mut etas: Vec<f64> = report.level_crossings.iter().filter(|c| c.transversal).map(|c| c.x).collect();
    etas.sort_by(|a, b| b.total_cmp(a));
    let n = xis.len().max(etas.len());
    for j in 0..n {
        let (x, u, upp) = xis.get(j).map_or((f64::NAN, f64::NAN, f64::NAN), |c| (c.x, c.u, c.u_second));
        let eta = etas.get(j).copied().unwrap_or(f64::NAN);
        t.push(vec![(report.j0 + j) as f64, x, u, upp, eta]);
    }
    t
}
