#![allow(dead_code)]

use std::path::PathBuf;

use dec_core::mesh_io::{generate_cube, read_tetgen, BoundaryTags, CubeSide};
use dec_core::{
    apply_boundary_conditions, assemble, build_complex, hodge_star, Conductivity, DualGeometry, HodgeStar,
    SaddleSystem, SchurPrecond, SimplicialComplex, SolverConfig, DEFAULT_LIMITER,
};

pub fn mesh_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../meshes").join(name)
}

pub fn tetgen(name: &str) -> SimplicialComplex {
    build_complex(&read_tetgen(mesh_path(name)).unwrap()).unwrap()
}

pub fn kuhn(n: usize) -> SimplicialComplex {
    build_complex(&generate_cube(n).unwrap()).unwrap()
}

/// IC(0) Schur preconditioner with a few inner CG steps; converges on the
/// TetGen meshes where single Jacobi applications stagnate.
pub fn ichol_config() -> SolverConfig {
    SolverConfig {
        schur_precond: SchurPrecond::Ichol,
        inner_iters: 5,
        ..SolverConfig::default()
    }
}

pub struct Problem {
    pub geometry: DualGeometry,
    pub hodge: HodgeStar,
    pub system: SaddleSystem,
}

/// Hot (T = 1) top, cold bottom, insulated sides, uniform `kappa`.
pub fn unit_cube_problem(c: &SimplicialComplex, kappa: f64) -> Problem {
    let geometry = DualGeometry::new(c).unwrap();
    let hodge = hodge_star(&geometry, 2, DEFAULT_LIMITER).unwrap();
    let mut system = assemble(c, &hodge, &Conductivity::uniform(c.n_faces(), kappa)).unwrap();
    apply_boundary_conditions(&mut system, c, &geometry, &BoundaryTags::cube_experiment(CubeSide::ZMax, 1.0, 0.0))
        .unwrap();
    system.pin_floating_regions(c).unwrap();
    Problem {
        geometry,
        hodge,
        system,
    }
}
