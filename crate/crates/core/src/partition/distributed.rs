//! The saddle solve on several ranks.
//!
//! Each rank keeps the rows of its owned faces and tets. Before a product
//! with `B` the ghost tet temperatures are refreshed, before a product
//! with `Bᵀ` the ghost face fluxes. Rows are summed in ascending global
//! column order and inner products are correctly rounded, so every rank
//! count reproduces the serial iteration.

use std::cell::RefCell;

use crate::assembly::SaddleSystem;
use crate::complex::SimplicialComplex;
use crate::error::{DecError, Result};
use crate::solver::exact::dot_partials;
use crate::solver::{
    fgmres, schur_diagonal, split_solution, BlockOps, BlockPreconditioner, SchurApprox, SchurPrecond, Solution,
    SolverConfig,
};

use super::comm::{run_ranks, Comm};
use super::local::{build_local, LocalSubcomplex};
use super::plan::{block_partition, PartitionPlan};

/// Rows of a block restricted to one rank, with local column indices.
struct LocalRows {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl LocalRows {
    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.offsets[r]..self.offsets[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *o = s;
        }
    }
}

fn restrict(
    m: &nalgebra_sparse::CsrMatrix<f64>,
    rows: &[usize],
    local_col: impl Fn(usize) -> Option<usize>,
) -> Result<LocalRows> {
    let mut offsets = vec![0];
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for &r in rows {
        let row = m.row(r);
        for (&c, &v) in row.col_indices().iter().zip(row.values()) {
            let lc = local_col(c).ok_or_else(|| DecError::Comm(format!("column {c} of row {r} is not local")))?;
            cols.push(lc);
            vals.push(v);
        }
        offsets.push(cols.len());
    }
    Ok(LocalRows { offsets, cols, vals })
}

/// [`BlockOps`] for one rank.
pub struct LocalOps<'a> {
    comm: &'a Comm,
    local: &'a LocalSubcomplex,
    a: Vec<f64>,
    c: Vec<f64>,
    schur_diag: Vec<f64>,
    b: LocalRows,
    bt: LocalRows,
    tet_buf: RefCell<Vec<f64>>,
    face_buf: RefCell<Vec<f64>>,
}

impl<'a> LocalOps<'a> {
    /// Copies this rank's rows out of the global system.
    pub fn new(comm: &'a Comm, local: &'a LocalSubcomplex, system: &SaddleSystem, schur_diag: &[f64]) -> Result<Self> {
        let a: Vec<f64> = local.owned_faces.iter().map(|&f| system.a()[f]).collect();
        if let Some(i) = a.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(DecError::Solver(format!(
                "face {} has a non-positive diagonal",
                local.owned_faces[i]
            )));
        }
        Ok(Self {
            comm,
            local,
            a,
            c: local.owned_tets.iter().map(|&t| system.c()[t]).collect(),
            schur_diag: local.owned_tets.iter().map(|&t| schur_diag[t]).collect(),
            b: restrict(system.b(), &local.owned_faces, |t| local.local_tet(t))?,
            bt: restrict(system.bt(), &local.owned_tets, |f| local.local_face(f))?,
            tet_buf: RefCell::new(vec![0.0; local.n_local_tets()]),
            face_buf: RefCell::new(vec![0.0; local.n_local_faces()]),
        })
    }
}

impl BlockOps for LocalOps<'_> {
    fn n_faces(&self) -> usize {
        self.local.owned_faces.len()
    }
    fn n_tets(&self) -> usize {
        self.local.owned_tets.len()
    }
    fn a_diag(&self) -> &[f64] {
        &self.a
    }
    fn c_diag(&self) -> &[f64] {
        &self.c
    }
    fn schur_diag(&self) -> &[f64] {
        &self.schur_diag
    }
    fn mul_b(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        let mut buf = self.tet_buf.borrow_mut();
        buf[..y.len()].copy_from_slice(y);
        self.local.tet_halo.exchange(self.comm, &mut buf)?;
        self.b.mul(&buf, out);
        Ok(())
    }
    fn mul_bt(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let mut buf = self.face_buf.borrow_mut();
        buf[..x.len()].copy_from_slice(x);
        self.local.face_halo.exchange(self.comm, &mut buf)?;
        self.bt.mul(&buf, out);
        Ok(())
    }
    fn dot(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.comm.allreduce_exact(&dot_partials(a, b))
    }
}

/// Per-rank sizes of a distributed run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankStats {
    pub rank: usize,
    pub owned_tets: usize,
    pub ghost_tets: usize,
    pub owned_faces: usize,
    pub ghost_faces: usize,
}

fn local_vector(local: &LocalSubcomplex, full: &[f64], n_faces: usize) -> Vec<f64> {
    local
        .owned_faces
        .iter()
        .map(|&f| full[f])
        .chain(local.owned_tets.iter().map(|&t| full[n_faces + t]))
        .collect()
}

fn scatter_back(locals: &[LocalSubcomplex], parts: Vec<Vec<f64>>, n_faces: usize, n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (local, part) in locals.iter().zip(parts) {
        let nf = local.owned_faces.len();
        for (&f, v) in local.owned_faces.iter().zip(&part[..nf]) {
            x[f] = *v;
        }
        for (&t, v) in local.owned_tets.iter().zip(&part[nf..]) {
            x[n_faces + t] = *v;
        }
    }
    x
}

fn plan_and_locals(complex: &SimplicialComplex, n_ranks: usize) -> Result<(PartitionPlan, Vec<LocalSubcomplex>)> {
    let plan = block_partition(complex.n_nodes(), n_ranks)?;
    let locals = (0..n_ranks)
        .map(|r| build_local(complex, &plan, r))
        .collect::<Result<Vec<_>>>()?;
    Ok((plan, locals))
}

/// `M x` computed on `n_ranks` ranks and gathered.
pub fn distributed_matvec(
    system: &SaddleSystem,
    complex: &SimplicialComplex,
    n_ranks: usize,
    x: &[f64],
) -> Result<Vec<f64>> {
    let (_, locals) = plan_and_locals(complex, n_ranks)?;
    let sd = schur_diagonal(system);
    let nf = system.n_faces();
    let results = run_ranks(n_ranks, |comm| -> Result<Option<Vec<Vec<f64>>>> {
        let local = &locals[comm.rank()];
        let ops = LocalOps::new(&comm, local, system, &sd)?;
        let xl = local_vector(local, x, nf);
        let mut yl = vec![0.0; xl.len()];
        ops.apply(&xl, &mut yl)?;
        comm.gather(yl)
    });
    let parts = gather_result(results)?;
    Ok(scatter_back(&locals, parts, nf, system.n_unknowns()))
}

fn gather_result(results: Vec<Result<Option<Vec<Vec<f64>>>>>) -> Result<Vec<Vec<f64>>> {
    let mut root = None;
    for r in results {
        if let Some(parts) = r? {
            root = Some(parts);
        }
    }
    root.ok_or_else(|| DecError::Comm("root produced no result".into()))
}

/// Solves the system on `n_ranks` threads with the block partition of the
/// mesh nodes. Only the Jacobi Schur preconditioner is available here, with
/// any number of inner CG iterations.
pub fn solve_distributed(
    system: &SaddleSystem,
    complex: &SimplicialComplex,
    n_ranks: usize,
    config: &SolverConfig,
) -> Result<(Solution, Vec<RankStats>)> {
    config.validate()?;
    if config.schur_precond != SchurPrecond::Jacobi {
        return Err(DecError::InvalidArgument(
            "the partitioned solver supports only the jacobi Schur preconditioner".into(),
        ));
    }
    if !system.has_active_dirichlet() && system.pinned_tets().is_empty() {
        return Err(DecError::Solver(
            "temperature is undetermined: no Dirichlet face and no pinned tet".into(),
        ));
    }
    let (_, locals) = plan_and_locals(complex, n_ranks)?;
    let sd = schur_diagonal(system);
    let nf = system.n_faces();
    let approx = SchurApprox::Jacobi;

    let results = run_ranks(n_ranks, |comm| -> Result<Option<(Vec<Vec<f64>>, Solution)>> {
        let local = &locals[comm.rank()];
        let ops = LocalOps::new(&comm, local, system, &sd)?;
        let b = local_vector(local, system.rhs(), nf);
        let precond = BlockPreconditioner::new(&ops, &approx, config.inner_iters);
        let x0 = vec![0.0; b.len()];
        let out = fgmres(&ops, &b, x0, |r, z| precond.apply(r, z), config)?;
        let summary = split_solution(out.clone(), 0);
        Ok(comm.gather(out.x)?.map(|parts| (parts, summary)))
    });
    let mut root = None;
    for r in results {
        if let Some(x) = r? {
            root = Some(x);
        }
    }
    let (parts, summary) = root.ok_or_else(|| DecError::Comm("root produced no result".into()))?;
    let x = scatter_back(&locals, parts, nf, system.n_unknowns());
    let mut omega = x;
    let alpha = omega.split_off(nf);
    let stats = locals
        .iter()
        .map(|l| RankStats {
            rank: l.rank,
            owned_tets: l.owned_tets.len(),
            ghost_tets: l.ghost_tets.len(),
            owned_faces: l.owned_faces.len(),
            ghost_faces: l.ghost_faces.len(),
        })
        .collect();
    Ok((
        Solution {
            omega,
            alpha,
            ..summary
        },
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{apply_boundary_conditions, assemble, Conductivity};
    use crate::complex::build_complex;
    use crate::geometry::{hodge_star, DualGeometry, DEFAULT_LIMITER};
    use crate::mesh_io::{generate_cube, BoundaryTags, CubeSide};
    use crate::solver::solve;

    fn setup(n: usize) -> (SimplicialComplex, SaddleSystem) {
        let c = build_complex(&generate_cube(n).unwrap()).unwrap();
        let g = DualGeometry::new(&c).unwrap();
        let h = hodge_star(&g, 2, DEFAULT_LIMITER).unwrap();
        let mut s = assemble(&c, &h, &Conductivity::uniform(c.n_faces(), 1.0)).unwrap();
        apply_boundary_conditions(&mut s, &c, &g, &BoundaryTags::cube_experiment(CubeSide::ZMax, 1.0, 0.0))
            .unwrap();
        (c, s)
    }

    #[test]
    fn matvec_matches_serial() {
        let (c, s) = setup(3);
        let x: Vec<f64> = (0..s.n_unknowns()).map(|i| ((i * 31) % 17) as f64 / 7.0 - 1.0).collect();
        let serial = s.matvec(&x);
        for n in [1, 2, 4] {
            let y = distributed_matvec(&s, &c, n, &x).unwrap();
            for (a, b) in y.iter().zip(&serial) {
                assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn solve_is_bitwise_serial() {
        let (c, s) = setup(3);
        let cfg = SolverConfig {
            inner_iters: 5,
            ..Default::default()
        };
        let serial = solve(&s, &cfg).unwrap();
        for n in [2, 3] {
            let (d, stats) = solve_distributed(&s, &c, n, &cfg).unwrap();
            assert_eq!(stats.len(), n);
            assert_eq!(d.iterations, serial.iterations);
            assert_eq!(d.omega, serial.omega);
            assert_eq!(d.alpha, serial.alpha);
        }
    }

    #[test]
    fn only_jacobi() {
        let (c, s) = setup(2);
        let cfg = SolverConfig {
            schur_precond: SchurPrecond::Ichol,
            ..Default::default()
        };
        assert!(solve_distributed(&s, &c, 2, &cfg).is_err());
    }
}
