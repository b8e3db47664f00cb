//! Nitsche finite elements for the Laplace-Beltrami Dirichlet problem on
//! curved, isoparametric triangulations of surfaces with boundary.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod frame;
pub mod geometry;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod reference;
pub mod solver;
pub mod sparse;
pub mod vtk;

pub use assembly::{assemble, SparseSystem};
pub use error::{Error, Result};
pub use geometry::Vec3;
pub use mesh::{build_mesh, geometric_report, GeometricReport, ParametricMesh};
pub use problem::{BoundaryTag, Problem};
pub use solver::{solve_spd, SolveReport};
