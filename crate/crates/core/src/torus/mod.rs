//! Lifting one-dimensional solutions to the torus with metric
//! `Q(x)(dx^2 + dy^2)`: separated eigenfunctions `F(x) cos(my)`, their
//! critical points and the components of their level sets.

pub mod critical2d;
pub mod eigenfunction;
pub mod levelset;
pub mod metric;

pub use critical2d::{locate_2d_critical_points, CriticalPoint2D, CriticalType};
pub use eigenfunction::{assemble_eigenfunction, cell_residual, Phase, ResidualReport, TorusEigenfunction};
pub use levelset::{
    circle_rectangles, count_level_components, count_with_refinement, levelset_table, Component, GridSpec,
    LevelSetComponents, Rectangle,
};
pub use metric::{export_metric, read_metric, MetricFile, MetricMetadata};
