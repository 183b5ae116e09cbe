//! Liouville metrics `Q(x)(dx^2 + dy^2)` on the torus whose Laplace
//! eigenfunctions have long cascades of isolated critical points.
//!
//! The crate builds the smooth profiles, solves the one-dimensional
//! Dirichlet eigenproblem, tunes cascade positions by a fixed-point search,
//! certifies the oscillation pattern and assembles the two-dimensional
//! eigenfunctions and their level sets.

pub mod error;
pub mod io;
pub mod jet;
pub mod ode;
pub mod pipeline;
pub mod oscillation;
pub mod quad;
pub mod roots;
pub mod smooth_kit;
pub mod sturm_liouville;
pub mod torus;
pub mod tuner;

pub use error::{Error, Result};
pub use jet::Jet;
