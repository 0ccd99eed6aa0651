//! P1 finite-element kernel.

pub mod assembly;
pub mod cg;
pub mod constraints;
pub mod field;
pub mod quadrature;
pub mod sparse;

pub use assembly::{
    assemble_boundary_load, assemble_load, assemble_mass, assemble_stiffness, DiffusionTensor, LineMeasure,
};
pub use cg::{solve_cg, CgOptions, CgSolution, Preconditioner, SolveReport};
pub use constraints::{apply_dirichlet, apply_periodic, DofMap, LinearSystem, ReducedSystem};
pub use field::{energy, gradient_norms, integrate, l2_error, l2_norm, Field};
pub use sparse::CsrMatrix;
