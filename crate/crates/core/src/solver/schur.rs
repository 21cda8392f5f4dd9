use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rayon::prelude::*;

use crate::assembly::SaddleSystem;
use crate::error::{DecError, Result};

use super::{BlockOps, SchurPrecond};

/// `S = C − Bᵀ A⁻¹ B` assembled exactly (A is diagonal).
///
/// Each off-diagonal entry comes from the single face two tets share, so
/// the result is exactly symmetric.
pub fn schur_complement(system: &SaddleSystem) -> Result<CsrMatrix<f64>> {
    let a = system.a();
    if let Some(f) = a.iter().position(|&x| x == 0.0 || !x.is_finite()) {
        return Err(DecError::Solver(format!("face {f} has a zero diagonal")));
    }
    let (b, bt) = (system.b(), system.bt());
    let nt = system.n_tets();
    let mut coo = CooMatrix::new(nt, nt);
    for t in 0..nt {
        let mut diag = system.c()[t];
        for k in bt.row_offsets()[t]..bt.row_offsets()[t + 1] {
            let f = bt.col_indices()[k];
            let btf = bt.values()[k];
            if btf == 0.0 {
                continue;
            }
            for kk in b.row_offsets()[f]..b.row_offsets()[f + 1] {
                let u = b.col_indices()[kk];
                let bfu = b.values()[kk];
                if u == t {
                    diag -= btf * bfu / a[f];
                } else if bfu != 0.0 {
                    coo.push(t, u, -(btf * bfu / a[f]));
                }
            }
        }
        coo.push(t, t, diag);
    }
    Ok(CsrMatrix::from(&coo))
}

/// Approximate inverse of the Schur complement.
#[derive(Clone, Debug)]
pub enum SchurApprox {
    /// `1 / diag(S)`, read from [`BlockOps::schur_diag`].
    Jacobi,
    /// Explicit approximate inverse `M ≈ S⁻¹`.
    Spai(CsrMatrix<f64>),
    /// Lower factor `L` with `L Lᵀ ≈ −S`.
    Ichol(CsrMatrix<f64>),
}

impl SchurApprox {
    pub fn build<O: BlockOps + ?Sized>(system: &SaddleSystem, ops: &O, kind: SchurPrecond) -> Result<Self> {
        let _ = ops;
        match kind {
            SchurPrecond::Jacobi => Ok(Self::Jacobi),
            SchurPrecond::Spai => Ok(Self::Spai(spai(&schur_complement(system)?))),
            SchurPrecond::Ichol => {
                let s = schur_complement(system)?;
                Ok(Self::Ichol(ichol0(&negate(&s))))
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self, Self::Spai(_))
    }

    /// `out ≈ S⁻¹ z`.
    pub fn apply_s_inv<O: BlockOps + ?Sized>(&self, ops: &O, z: &[f64], out: &mut [f64]) {
        match self {
            Self::Jacobi => {
                for ((o, zi), d) in out.iter_mut().zip(z).zip(ops.schur_diag()) {
                    *o = zi / d;
                }
            }
            Self::Spai(m) => super::csr_mul(m, z, out),
            Self::Ichol(l) => {
                ichol_solve(l, z, out);
                out.iter_mut().for_each(|o| *o = -*o);
            }
        }
    }

    /// `out ≈ (−S)⁻¹ r`.
    fn apply_k_inv<O: BlockOps + ?Sized>(&self, ops: &O, r: &[f64], out: &mut [f64]) {
        self.apply_s_inv(ops, r, out);
        out.iter_mut().for_each(|o| *o = -*o);
    }
}

fn negate(m: &CsrMatrix<f64>) -> CsrMatrix<f64> {
    let mut n = m.clone();
    n.values_mut().iter_mut().for_each(|v| *v = -*v);
    n
}

/// Zero fill-in incomplete Cholesky of a symmetric matrix, returned as
/// the lower-triangular factor in CSR form. Non-positive pivots are
/// replaced by the square root of the original diagonal (or 1).
fn ichol0(k: &CsrMatrix<f64>) -> CsrMatrix<f64> {
    let n = k.nrows();
    let mut offsets = vec![0usize; n + 1];
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for i in 0..n {
        let row = k.row(i);
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            if j <= i {
                cols.push(j);
                vals.push(v);
            }
        }
        offsets[i + 1] = cols.len();
    }
    let mut diag_pos = vec![usize::MAX; n];
    for i in 0..n {
        for p in offsets[i]..offsets[i + 1] {
            if cols[p] == i {
                diag_pos[i] = p;
            }
        }
    }
    for i in 0..n {
        for p in offsets[i]..offsets[i + 1] {
            let j = cols[p];
            // Σ_{c<j} L_ic L_jc over the shared pattern
            let mut s = vals[p];
            let (mut a, mut b) = (offsets[i], offsets[j]);
            while a < p && b < offsets[j + 1] && cols[b] < j {
                match cols[a].cmp(&cols[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        s -= vals[a] * vals[b];
                        a += 1;
                        b += 1;
                    }
                }
            }
            if j < i {
                let d = diag_pos[j];
                vals[p] = if d == usize::MAX { 0.0 } else { s / vals[d] };
            } else {
                let orig = k.get_entry(i, i).map(|e| e.into_value()).unwrap_or(0.0);
                vals[p] = if s > 0.0 {
                    s.sqrt()
                } else if orig > 0.0 {
                    orig.sqrt()
                } else {
                    1.0
                };
            }
        }
        if diag_pos[i] == usize::MAX {
            // structurally empty row: keep the factor invertible
            let at = offsets[i + 1];
            cols.insert(at, i);
            vals.insert(at, 1.0);
            diag_pos[i] = at;
            for o in offsets.iter_mut().skip(i + 1) {
                *o += 1;
            }
        }
    }
    CsrMatrix::try_from_csr_data(n, n, offsets, cols, vals).expect("valid lower factor")
}

/// Solves `L Lᵀ y = r`.
fn ichol_solve(l: &CsrMatrix<f64>, r: &[f64], y: &mut [f64]) {
    let n = l.nrows();
    let (off, cols, vals) = (l.row_offsets(), l.col_indices(), l.values());
    // forward: L u = r, diagonal stored last in each row
    for i in 0..n {
        let mut s = r[i];
        let last = off[i + 1] - 1;
        for p in off[i]..last {
            s -= vals[p] * y[cols[p]];
        }
        y[i] = s / vals[last];
    }
    // backward: Lᵀ y = u, column-oriented over the rows of L
    for i in (0..n).rev() {
        let last = off[i + 1] - 1;
        y[i] /= vals[last];
        let yi = y[i];
        for p in off[i]..last {
            y[cols[p]] -= vals[p] * yi;
        }
    }
}

/// Sparse approximate inverse of `s` on its own sparsity pattern: each
/// column minimizes `‖S m_j − e_j‖₂`.
fn spai(s: &CsrMatrix<f64>) -> CsrMatrix<f64> {
    let n = s.nrows();
    // S is symmetric, so rows give column patterns
    let columns: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let pat: Vec<usize> = s.row(j).col_indices().to_vec();
            let mut rows: Vec<usize> = pat.iter().flat_map(|&k| s.row(k).col_indices().to_vec()).collect();
            rows.sort_unstable();
            rows.dedup();
            let sub = DMatrix::from_fn(rows.len(), pat.len(), |r, c| {
                s.get_entry(rows[r], pat[c]).map(|e| e.into_value()).unwrap_or(0.0)
            });
            let rhs = DVector::from_fn(rows.len(), |r, _| if rows[r] == j { 1.0 } else { 0.0 });
            let m = sub
                .svd(true, true)
                .solve(&rhs, 1e-300)
                .unwrap_or_else(|_| DVector::zeros(pat.len()));
            pat.into_iter().zip(m.iter().copied()).collect()
        })
        .collect();
    let mut coo = CooMatrix::new(n, n);
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col {
            if v != 0.0 {
                coo.push(i, j, v);
            }
        }
    }
    CsrMatrix::from(&coo)
}

/// The block lower-triangular preconditioner of the saddle system.
pub struct BlockPreconditioner<'a, O: BlockOps + ?Sized> {
    ops: &'a O,
    approx: &'a SchurApprox,
    inner_iters: usize,
}

impl<'a, O: BlockOps + ?Sized> BlockPreconditioner<'a, O> {
    pub fn new(ops: &'a O, approx: &'a SchurApprox, inner_iters: usize) -> Self {
        Self {
            ops,
            approx,
            inner_iters,
        }
    }

    /// `z ≈ M⁻¹ r` for a stacked local vector `r = [r_ω; r_α]`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        let ops = self.ops;
        let nf = ops.n_faces();
        let nt = ops.n_tets();
        let (rw, ra) = r.split_at(nf);
        let a = ops.a_diag();

        let scaled: Vec<f64> = rw.iter().zip(a).map(|(r, a)| r / a).collect();
        let mut rhs = vec![0.0; nt];
        ops.mul_bt(&scaled, &mut rhs)?;
        for (x, r) in rhs.iter_mut().zip(ra) {
            *x = r - *x;
        }

        let (zw, za) = z.split_at_mut(nf);
        if self.inner_iters == 0 {
            self.approx.apply_s_inv(ops, &rhs, za);
        } else {
            self.inner_cg(&rhs, za)?;
        }

        ops.mul_b(za, zw)?;
        for ((o, r), a) in zw.iter_mut().zip(rw).zip(a) {
            *o = (r - *o) / a;
        }
        Ok(())
    }

    /// `(−S) v = Bᵀ A⁻¹ B v − C v`.
    fn apply_k(&self, v: &[f64], out: &mut [f64], face_buf: &mut [f64]) -> Result<()> {
        let ops = self.ops;
        ops.mul_b(v, face_buf)?;
        for (x, a) in face_buf.iter_mut().zip(ops.a_diag()) {
            *x /= a;
        }
        ops.mul_bt(face_buf, out)?;
        for ((o, c), vi) in out.iter_mut().zip(ops.c_diag()).zip(v) {
            *o -= c * vi;
        }
        Ok(())
    }

    /// Fixed number of preconditioned CG steps on `(−S) y = −rhs`.
    fn inner_cg(&self, rhs: &[f64], y: &mut [f64]) -> Result<()> {
        let ops = self.ops;
        let nt = rhs.len();
        let mut face_buf = vec![0.0; ops.n_faces()];
        y.iter_mut().for_each(|v| *v = 0.0);
        let mut r: Vec<f64> = rhs.iter().map(|x| -x).collect();
        let mut zr = vec![0.0; nt];
        self.approx.apply_k_inv(ops, &r, &mut zr);
        let mut p = zr.clone();
        let mut rz = ops.dot(&r, &zr)?;
        let mut q = vec![0.0; nt];
        for _ in 0..self.inner_iters {
            if rz == 0.0 {
                break;
            }
            self.apply_k(&p, &mut q, &mut face_buf)?;
            let pq = ops.dot(&p, &q)?;
            if !(pq > 0.0) {
                break;
            }
            let step = rz / pq;
            for ((yi, ri), (pi, qi)) in y.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&q)) {
                *yi += step * pi;
                *ri -= step * qi;
            }
            self.approx.apply_k_inv(ops, &r, &mut zr);
            let rz_new = ops.dot(&r, &zr)?;
            let beta = rz_new / rz;
            for (pi, zi) in p.iter_mut().zip(&zr) {
                *pi = zi + beta * *pi;
            }
            rz = rz_new;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, Conductivity};
    use crate::complex::{build_complex, non_boundary_faces};
    use crate::geometry::{hodge_star, DualGeometry, DEFAULT_LIMITER};
    use crate::mesh_io::{generate_cube, FaceRecord, RawMesh};
    use crate::solver::SerialOps;
    use nalgebra::Point3;

    fn system(mesh: &RawMesh) -> (crate::complex::SimplicialComplex, SaddleSystem) {
        let c = build_complex(mesh).unwrap();
        let g = DualGeometry::new(&c).unwrap();
        let h = hodge_star(&g, 2, DEFAULT_LIMITER).unwrap();
        let s = assemble(&c, &h, &Conductivity::uniform(c.n_faces(), 1.0)).unwrap();
        (c, s)
    }

    #[test]
    fn single_tet_schur_is_negative_sum() {
        let mesh = RawMesh {
            nodes: vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, 0.0, 1.0),
            ],
            tets: vec![[0, 1, 2, 3]],
            faces: [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]
                .into_iter()
                .map(|nodes| FaceRecord { nodes, marker: 1 })
                .collect(),
            ..Default::default()
        };
        let (_, s) = system(&mesh);
        let sc = schur_complement(&s).unwrap();
        let expect: f64 = -s.a().iter().map(|a| 1.0 / a).sum::<f64>();
        let got = sc.get_entry(0, 0).unwrap().into_value();
        assert!((got - expect).abs() <= 1e-12 * expect.abs());
    }

    #[test]
    fn schur_exactly_symmetric() {
        let (_, s) = system(&generate_cube(3).unwrap());
        let sc = schur_complement(&s).unwrap();
        assert_eq!(sc.transpose(), sc);
    }

    #[test]
    fn crack_is_rank_one_update() {
        let (c, mut s) = system(&generate_cube(2).unwrap());
        let before = schur_complement(&s).unwrap();
        let f = non_boundary_faces(&c)[7];
        let af = s.a()[f];
        let pair: Vec<(usize, f64)> = c.face_tets[f].iter().map(|(t, sg)| (t, sg as f64)).collect();
        s.eliminate_face(f, 0.0).unwrap();
        let after = schur_complement(&s).unwrap();
        let dense = |m: &CsrMatrix<f64>| nalgebra::DMatrix::from(m);
        let mut expect = dense(&before);
        for &(t, st) in &pair {
            for &(u, su) in &pair {
                expect[(t, u)] += st * su / af;
            }
        }
        let diff = (dense(&after) - expect).abs().max();
        assert!(diff <= 1e-9 * dense(&before).abs().max(), "{diff}");
    }

    #[test]
    fn ichol_exact_on_tridiagonal() {
        // IC(0) has no dropped fill on a tridiagonal matrix
        let n = 6;
        let mut coo = CooMatrix::new(n, n);
        for i in 0..n {
            coo.push(i, i, 4.0);
            if i + 1 < n {
                coo.push(i, i + 1, -1.0);
                coo.push(i + 1, i, -1.0);
            }
        }
        let k = CsrMatrix::from(&coo);
        let l = ichol0(&k);
        let r: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
        let mut y = vec![0.0; n];
        ichol_solve(&l, &r, &mut y);
        let dk = nalgebra::DMatrix::from(&k);
        let back = dk * nalgebra::DVector::from_vec(y);
        for i in 0..n {
            assert!((back[i] - r[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn preconditioner_is_linear() {
        let (_, s) = system(&generate_cube(2).unwrap());
        let ops = SerialOps::new(&s).unwrap();
        let n = s.n_unknowns();
        let x: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 13) % 7) as f64 * 0.25).collect();
        for kind in [SchurPrecond::Jacobi, SchurPrecond::Spai, SchurPrecond::Ichol] {
            let approx = SchurApprox::build(&s, &ops, kind).unwrap();
            let p = BlockPreconditioner::new(&ops, &approx, 0);
            let (mut px, mut py, mut pc) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            p.apply(&x, &mut px).unwrap();
            p.apply(&y, &mut py).unwrap();
            let comb: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
            p.apply(&comb, &mut pc).unwrap();
            let scale = pc.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
            for i in 0..n {
                let lin = 2.0 * px[i] - 3.0 * py[i];
                assert!((pc[i] - lin).abs() <= 1e-12 * scale, "{kind:?} {i}");
            }
        }
    }
}
