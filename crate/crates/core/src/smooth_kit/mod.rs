//! Smooth auxiliary profiles: bumps, cutoffs, the flat-topped `q`, its lower
//! comparison profile, the cascade `h` and the layered `q_{S,tau}`.

pub mod cascade;
pub mod composite;
pub mod functions;
pub mod profile;
pub mod ramp;
pub mod sandwich;

use std::io::Write;

pub use cascade::{make_big_h_t, make_h, make_h_mutated, CascadeProfile, CascadeSpec, Mutation, SkeletonParams};
pub use composite::{make_q_s_tau, make_q_t, SiteAssignment};
pub use functions::{make_phi_t, make_psi, make_psi_t, make_q, make_q_tilde, make_q_with, FlatQ, QParams};
pub use profile::{reduce_periodic, Feature, Profile, ProfileFunction, TrigPolynomial};
pub use ramp::SmoothStep;
pub use sandwich::{verify_sandwich, verify_sandwich_at, window_points, SandwichGrid, SandwichReport};

use crate::error::Result;
use crate::io::CsvTable;

/// Dense samples `x, f, f', f''` of a profile.
pub fn profile_table(f: &ProfileFunction, xs: &[f64]) -> CsvTable {
    let mut t = CsvTable::new(&["x", "f", "f_prime", "f_double_prime"]);
    for &x in xs {
        let j = f.jet(x);
        t.push(vec![x, j.v, j.d1, j.d2]);
    }
    t
}

pub fn export_profile_csv<W: Write>(f: &ProfileFunction, xs: &[f64], out: W) -> Result<()> {
    profile_table(f, xs).write(out)
}
