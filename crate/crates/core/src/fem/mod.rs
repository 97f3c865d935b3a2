//! Piecewise-linear finite elements on planar triangulations.

mod field;
mod generate;
mod io;
mod laplacian;
mod locate;
mod mesh;
mod quadrature;
mod sparse;

pub use field::Field;
pub use generate::{build_disk_mesh, build_rect_mesh, refine};
pub use io::{load_mesh, read_mesh, save_mesh, write_mesh};
pub use laplacian::{
    assemble_stiffness, h1_seminorm, solve_dirichlet, Density, Laplacian, SolverOptions,
};
pub use locate::Locator;
pub use mesh::{BoundaryShape, Mesh, Point};
pub use quadrature::{integrate, QuadratureRule};
pub use sparse::{SolveStats, SparseOperator};

pub(crate) use locate::barycentric;
pub(crate) use mesh::{dist, point_segment_distance};
pub(crate) use quadrature::bary_point;

/// Formats a float with 17 significant digits, the text precision used for
/// every persisted number.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
