//! Boundary-element solution of the exterior Laplace transmission problem
//! on a closed triangulated inclusion surface.

pub mod density;
pub mod mesh;
pub mod off;
pub mod operator;

pub use density::{
    chi_for_direction, polarizability_tensor, solve_reduced_density, PolarizabilityTensor,
    ReducedDensity, TensorSource, TransmissionSolver,
};
pub use mesh::{ellipsoid, icosphere, MeshStats, SurfaceMesh};
pub use off::{load_mesh, read_off, write_off};
pub use operator::{
    adjoint_double_layer_kernel, assemble_adjoint_double_layer, assemble_adjoint_double_layer_with,
    AssemblyOptions, MAX_DENSE_PANELS,
};
