//! Flexible GMRES with a block-triangular Schur-complement preconditioner.
//!
//! Because the face block `A` is diagonal, the Schur complement
//! `S = C − Bᵀ A⁻¹ B` on the tets is available exactly and sparse. The
//! preconditioner solves the block lower-triangular system
//!
//! ```text
//! ŷ ≈ S⁻¹ (r_α − Bᵀ A⁻¹ r_ω)
//! ω̂ = A⁻¹ (r_ω − B ŷ)
//! ```
//!
//! where `S⁻¹` is replaced by one of [`SchurPrecond`], optionally improved
//! by a fixed number of preconditioned CG steps on `−S`.
//!
//! All algorithms are written against [`BlockOps`], so the thread-parallel
//! solver in [`crate::partition`] runs the same code on distributed
//! vectors. Inner products are correctly rounded (see [`exact`]), which
//! makes the iteration independent of how the vectors are split.

pub mod dense;
pub mod exact;
mod fgmres;
mod schur;

use nalgebra_sparse::CsrMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::SaddleSystem;
use crate::error::{DecError, Result};

pub use dense::dense_solve;
pub use fgmres::{fgmres, KrylovOutcome, SolveStatus};
pub use schur::{schur_complement, BlockPreconditioner, SchurApprox};

/// Approximation of `S⁻¹` used inside the block preconditioner.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchurPrecond {
    #[default]
    Jacobi,
    /// Sparse approximate inverse on the pattern of `S`.
    Spai,
    /// Zero fill-in incomplete Cholesky of `−S`.
    Ichol,
}

impl std::str::FromStr for SchurPrecond {
    type Err = DecError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jacobi" => Ok(Self::Jacobi),
            "spai" | "sparse-approximate-inverse" => Ok(Self::Spai),
            "ichol" | "incomplete-cholesky" => Ok(Self::Ichol),
            _ => Err(DecError::InvalidArgument(format!("unknown Schur preconditioner {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_iters: usize,
    pub restart: usize,
    pub schur_precond: SchurPrecond,
    /// Preconditioned CG steps on the Schur complement per outer
    /// iteration; 0 applies the Schur preconditioner once.
    pub inner_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            max_iters: 10_000,
            restart: 30,
            schur_precond: SchurPrecond::Jacobi,
            inner_iters: 0,
        }
    }
}

impl SolverConfig {
    /// Residual norm at which the solver stops for right-hand side `rhs`.
    pub fn stopping_threshold(&self, rhs: &[f64]) -> f64 {
        (self.rtol * exact::dot(rhs, rhs).sqrt()).max(self.atol)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(DecError::InvalidArgument("tolerances must be positive".into()));
        }
        if self.restart < 1 || self.max_iters < 1 {
            return Err(DecError::InvalidArgument("restart and max_iters must be at least 1".into()));
        }
        if self.inner_iters > 0 && self.schur_precond == SchurPrecond::Spai {
            return Err(DecError::InvalidArgument(
                "inner CG iterations need a symmetric Schur preconditioner (jacobi or ichol)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// Integrated flux per face.
    pub omega: Vec<f64>,
    /// Temperature per tet.
    pub alpha: Vec<f64>,
    /// True residual norm `‖M x − b‖₂` at exit.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    /// Residual estimate after every outer iteration.
    pub residual_history: Vec<f64>,
}

impl Solution {
    /// `[ω; α]`, the layout of the system's unknowns.
    pub fn stacked(&self) -> Vec<f64> {
        let mut x = self.omega.clone();
        x.extend_from_slice(&self.alpha);
        x
    }
}

/// Linear-algebra primitives of the saddle system on one (possibly
/// distributed) piece of the unknowns. Vectors are laid out as the local
/// faces followed by the local tets.
pub trait BlockOps {
    fn n_faces(&self) -> usize;
    fn n_tets(&self) -> usize;
    fn a_diag(&self) -> &[f64];
    fn c_diag(&self) -> &[f64];
    /// Diagonal of `S = C − Bᵀ A⁻¹ B`.
    fn schur_diag(&self) -> &[f64];
    /// `out = B y` (tets → faces).
    fn mul_b(&self, y: &[f64], out: &mut [f64]) -> Result<()>;
    /// `out = Bᵀ x` (faces → tets).
    fn mul_bt(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
    /// Global inner product of two local vectors of equal length.
    fn dot(&self, a: &[f64], b: &[f64]) -> Result<f64>;

    fn n_local(&self) -> usize {
        self.n_faces() + self.n_tets()
    }

    /// `y = M x` for the full system.
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let nf = self.n_faces();
        let (xw, xa) = x.split_at(nf);
        let (yw, ya) = y.split_at_mut(nf);
        self.mul_b(xa, yw)?;
        for ((y, a), x) in yw.iter_mut().zip(self.a_diag()).zip(xw) {
            *y += a * x;
        }
        self.mul_bt(xw, ya)?;
        for ((y, c), x) in ya.iter_mut().zip(self.c_diag()).zip(xa) {
            *y += c * x;
        }
        Ok(())
    }

    fn norm(&self, a: &[f64]) -> Result<f64> {
        Ok(self.dot(a, a)?.sqrt())
    }
}

const ROW_CHUNK: usize = 1024;

/// Sparse product with each row summed in stored column order.
pub(crate) fn csr_mul(m: &CsrMatrix<f64>, x: &[f64], out: &mut [f64]) {
    let (offsets, cols, vals) = (m.row_offsets(), m.col_indices(), m.values());
    out.par_iter_mut()
        .with_min_len(ROW_CHUNK)
        .enumerate()
        .for_each(|(r, o)| {
            let mut s = 0.0;
            for k in offsets[r]..offsets[r + 1] {
                s += vals[k] * x[cols[k]];
            }
            *o = s;
        });
}

/// Diagonal of `C − Bᵀ A⁻¹ B` from the tet rows of `Bᵀ`.
pub(crate) fn schur_diagonal(system: &SaddleSystem) -> Vec<f64> {
    let bt = system.bt();
    let a = system.a();
    (0..system.n_tets())
        .map(|t| {
            let mut s = system.c()[t];
            for k in bt.row_offsets()[t]..bt.row_offsets()[t + 1] {
                let v = bt.values()[k];
                s -= v * v / a[bt.col_indices()[k]];
            }
            s
        })
        .collect()
}

/// [`BlockOps`] over a whole [`SaddleSystem`] held in memory.
pub struct SerialOps<'a> {
    system: &'a SaddleSystem,
    schur_diag: Vec<f64>,
}

impl<'a> SerialOps<'a> {
    pub fn new(system: &'a SaddleSystem) -> Result<Self> {
        if let Some(f) = system.a().iter().position(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(DecError::Solver(format!(
                "face {f} has a non-positive diagonal {}",
                system.a()[f]
            )));
        }
        Ok(Self {
            system,
            schur_diag: schur_diagonal(system),
        })
    }

    pub fn system(&self) -> &SaddleSystem {
        self.system
    }
}

impl BlockOps for SerialOps<'_> {
    fn n_faces(&self) -> usize {
        self.system.n_faces()
    }
    fn n_tets(&self) -> usize {
        self.system.n_tets()
    }
    fn a_diag(&self) -> &[f64] {
        self.system.a()
    }
    fn c_diag(&self) -> &[f64] {
        self.system.c()
    }
    fn schur_diag(&self) -> &[f64] {
        &self.schur_diag
    }
    fn mul_b(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        csr_mul(self.system.b(), y, out);
        Ok(())
    }
    fn mul_bt(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        csr_mul(self.system.bt(), x, out);
        Ok(())
    }
    fn dot(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        Ok(exact::dot(a, b))
    }
}

/// Solves the system from a zero initial guess.
pub fn solve(system: &SaddleSystem, config: &SolverConfig) -> Result<Solution> {
    solve_with_guess(system, config, None)
}

/// Solves the system starting from `guess` (stacked `[ω; α]`).
///
/// Returns `Ok` with `converged == false` when the iteration limit is hit
/// or the Krylov space breaks down; errors are reserved for invalid input.
pub fn solve_with_guess(
    system: &SaddleSystem,
    config: &SolverConfig,
    guess: Option<&[f64]>,
) -> Result<Solution> {
    config.validate()?;
    if !system.has_active_dirichlet() && system.pinned_tets().is_empty() {
        return Err(DecError::Solver(
            "temperature is undetermined: no Dirichlet face and no pinned tet".into(),
        ));
    }
    let ops = SerialOps::new(system)?;
    let approx = SchurApprox::build(system, &ops, config.schur_precond)?;
    let precond = BlockPreconditioner::new(&ops, &approx, config.inner_iters);
    let x0 = match guess {
        Some(g) if g.len() != system.n_unknowns() => {
            return Err(DecError::InvalidArgument("initial guess has the wrong length".into()))
        }
        Some(g) => g.to_vec(),
        None => vec![0.0; system.n_unknowns()],
    };
    let out = fgmres(&ops, system.rhs(), x0, |r, z| precond.apply(r, z), config)?;
    Ok(split_solution(out, system.n_faces()))
}

pub(crate) fn split_solution(out: KrylovOutcome, n_faces: usize) -> Solution {
    let mut omega = out.x;
    let alpha = omega.split_off(n_faces);
    Solution {
        omega,
        alpha,
        residual_norm: out.residual_norm,
        iterations: out.iterations,
        converged: out.status == SolveStatus::Converged,
        status: out.status,
        residual_history: out.history,
    }
}

/// `‖M x − b‖₂`, evaluated from the stored blocks independently of the
/// Krylov recurrence.
pub fn residual(system: &SaddleSystem, solution: &Solution) -> f64 {
    let y = system.matvec(&solution.stacked());
    let r: Vec<f64> = y.iter().zip(system.rhs()).map(|(y, b)| y - b).collect();
    exact::dot(&r, &r).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{apply_boundary_conditions, assemble, Conductivity};
    use crate::complex::build_complex;
    use crate::geometry::{hodge_star, DualGeometry, DEFAULT_LIMITER};
    use crate::mesh_io::{generate_cube, BoundaryTags, CubeSide};

    fn cube_system(n: usize) -> SaddleSystem {
        let c = build_complex(&generate_cube(n).unwrap()).unwrap();
        let g = DualGeometry::new(&c).unwrap();
        let h = hodge_star(&g, 2, DEFAULT_LIMITER).unwrap();
        let mut s = assemble(&c, &h, &Conductivity::uniform(c.n_faces(), 1.0)).unwrap();
        apply_boundary_conditions(&mut s, &c, &g, &BoundaryTags::cube_experiment(CubeSide::ZMax, 1.0, 0.0))
            .unwrap();
        s
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            rtol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            restart: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            schur_precond: SchurPrecond::Spai,
            inner_iters: 2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!("ichol".parse::<SchurPrecond>().unwrap(), SchurPrecond::Ichol);
        assert!("amg".parse::<SchurPrecond>().is_err());
    }

    #[test]
    fn every_preconditioner_converges() {
        let s = cube_system(2);
        for (p, inner) in [
            (SchurPrecond::Jacobi, 0),
            (SchurPrecond::Jacobi, 3),
            (SchurPrecond::Spai, 0),
            (SchurPrecond::Ichol, 0),
            (SchurPrecond::Ichol, 2),
        ] {
            let cfg = SolverConfig {
                schur_precond: p,
                inner_iters: inner,
                ..Default::default()
            };
            let sol = solve(&s, &cfg).unwrap();
            assert!(sol.converged, "{p:?} {inner}: {:?}", sol.status);
            let tol = cfg.stopping_threshold(s.rhs());
            assert!(residual(&s, &sol) <= 10.0 * tol);
            assert!((sol.residual_norm - residual(&s, &sol)).abs() <= 10.0 * tol);
        }
    }

    #[test]
    fn undetermined_temperature_rejected() {
        let c = build_complex(&generate_cube(1).unwrap()).unwrap();
        let g = DualGeometry::new(&c).unwrap();
        let h = hodge_star(&g, 2, DEFAULT_LIMITER).unwrap();
        let mut s = assemble(&c, &h, &Conductivity::uniform(c.n_faces(), 1.0)).unwrap();
        for f in c.boundary_faces() {
            s.eliminate_face(f, 0.0).unwrap();
        }
        assert!(solve(&s, &SolverConfig::default()).is_err());
        s.pin_floating_regions(&c).unwrap();
        let sol = solve(&s, &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.omega.iter().all(|&w| w == 0.0));
        assert!(sol.alpha.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn iteration_limit_reported() {
        let s = cube_system(3);
        let cfg = SolverConfig {
            max_iters: 2,
            ..Default::default()
        };
        let sol = solve(&s, &cfg).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.status, SolveStatus::MaxIterations);
        assert!(sol.iterations <= 2);
    }

    #[test]
    fn warm_start_from_solution_is_immediate() {
        let s = cube_system(2);
        let cfg = SolverConfig::default();
        let first = solve(&s, &cfg).unwrap();
        let again = solve_with_guess(&s, &cfg, Some(&first.stacked())).unwrap();
        assert!(again.converged);
        assert!(again.iterations <= 1);
        assert!(solve_with_guess(&s, &cfg, Some(&[0.0])).is_err());
    }
}
