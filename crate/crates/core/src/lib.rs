//! Discrete exterior calculus for steady heat conduction on tetrahedral
//! meshes.
//!
//! Temperatures live on tets (dual vertices) and integrated fluxes on
//! triangles. The pipeline is
//!
//! ```text
//! RawMesh -> SimplicialComplex -> DualGeometry -> SaddleSystem -> Solution
//! ```
//!
//! with [`partition`] providing a thread-parallel solve of the same system
//! and [`crack_sim`] driving repeated solves while faces are insulated one
//! at a time.

pub mod assembly;
pub mod complex;
pub mod crack_sim;
pub mod error;
pub mod geometry;
pub mod mesh_io;
pub mod partition;
pub mod solver;

pub use assembly::{apply_boundary_conditions, assemble, Conductivity, SaddleSystem};
pub use complex::{build_complex, non_boundary_faces, SimplicialComplex};
pub use error::{DecError, Result};
pub use geometry::{hodge_star, rms_error, whitney_vector, DualGeometry, HodgeStar, DEFAULT_LIMITER};
pub use solver::{solve, SchurPrecond, Solution, SolverConfig};
