//! The mixed flux/temperature system
//!
//! ```text
//! [ A   B ] [ω]   [r_ω]
//! [ Bᵀ  C ] [α] = [r_α]
//! ```
//!
//! with `A = diag(⋆₂ / κ)` on faces, `B = dᵀ` (faces × tets) and `C = 0`
//! except on pinned tets. A face row reads `A_f ω_f + Σ_t B_ft α_t = r_f`;
//! for an interior face shared by tets `t⁺` (incidence +1) and `t⁻` this is
//! `ω_f = κ A_f⁻¹ (α_{t⁻} − α_{t⁺})`, the heat flowing into `t⁺` through `f`.
//! A tet row is the balance `Σ_f B_ft ω_f = 0`.
//!
//! Faces with known flux (Neumann sides and cracks) are eliminated in place
//! by zeroing their row and column; every mutation is journaled so it can
//! be undone.

use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::complex::SimplicialComplex;
use crate::error::{DecError, Result};
use crate::geometry::{DualGeometry, HodgeStar};
use crate::mesh_io::{BoundaryKind, BoundaryTags};

/// Per-face conductivity and crack flags.
#[derive(Clone, Debug, PartialEq)]
pub struct Conductivity {
    kappa: Vec<f64>,
    cracked: Vec<bool>,
}

impl Conductivity {
    pub fn uniform(n_faces: usize, kappa: f64) -> Self {
        Self {
            kappa: vec![kappa; n_faces],
            cracked: vec![false; n_faces],
        }
    }

    pub fn from_values(kappa: Vec<f64>) -> Self {
        let n = kappa.len();
        Self {
            kappa,
            cracked: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    pub fn kappa(&self, face: usize) -> f64 {
        if self.cracked[face] {
            0.0
        } else {
            self.kappa[face]
        }
    }

    pub fn is_cracked(&self, face: usize) -> bool {
        self.cracked[face]
    }

    pub fn cracked_faces(&self) -> impl Iterator<Item = usize> + '_ {
        self.cracked.iter().enumerate().filter(|(_, &c)| c).map(|(f, _)| f)
    }

    fn set_cracked(&mut self, face: usize, cracked: bool) {
        self.cracked[face] = cracked;
    }
}

/// One stored matrix value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    A(usize),
    B(usize),
    Bt(usize),
    C(usize),
}

#[derive(Clone, Debug, PartialEq)]
enum Op {
    Eliminate(usize),
    Pin(usize),
}

#[derive(Clone, Debug, PartialEq)]
struct JournalEntry {
    op: Op,
    values: Vec<(Slot, f64)>,
    rhs: Vec<(usize, f64)>,
}

/// Assembled saddle-point system with boundary-condition bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct SaddleSystem {
    a: Vec<f64>,
    b: CsrMatrix<f64>,
    bt: CsrMatrix<f64>,
    c: Vec<f64>,
    rhs: Vec<f64>,
    eliminated: Vec<Option<f64>>,
    dirichlet: Vec<Option<f64>>,
    pinned: Vec<bool>,
    journal: Vec<JournalEntry>,
}

/// Assembles the pristine system with zero right-hand side.
///
/// Faces already flagged as cracked in `conductivity` are eliminated with
/// zero flux.
pub fn assemble(
    complex: &SimplicialComplex,
    hodge2: &HodgeStar,
    conductivity: &Conductivity,
) -> Result<SaddleSystem> {
    let nf = complex.n_faces();
    let nt = complex.n_tets();
    if hodge2.p != 2 || hodge2.entries.len() != nf {
        return Err(DecError::InvalidArgument(
            "assembly needs the face Hodge star of this complex".into(),
        ));
    }
    if conductivity.len() != nf {
        return Err(DecError::InvalidArgument(format!(
            "conductivity has {} faces, complex has {nf}",
            conductivity.len()
        )));
    }
    let mut a = Vec::with_capacity(nf);
    for f in 0..nf {
        let k = conductivity.kappa[f];
        if !conductivity.is_cracked(f) && !(k > 0.0 && k.is_finite()) {
            return Err(DecError::InvalidArgument(format!(
                "conductivity of face {f} must be positive, got {k}"
            )));
        }
        a.push(if conductivity.is_cracked(f) {
            1.0
        } else {
            hodge2.entries[f] / k
        });
    }

    let d = complex.boundary(3)?;
    let mut coo = CooMatrix::new(nf, nt);
    for (f, t, &v) in d.triplet_iter() {
        coo.push(f, t, v as f64);
    }
    let b = CsrMatrix::from(&coo);
    let bt = b.transpose();

    let mut sys = SaddleSystem {
        a,
        b,
        bt,
        c: vec![0.0; nt],
        rhs: vec![0.0; nf + nt],
        eliminated: vec![None; nf],
        dirichlet: vec![None; nf],
        pinned: vec![false; nt],
        journal: Vec::new(),
    };
    for f in conductivity.cracked_faces() {
        sys.eliminate_face(f, 0.0)?;
    }
    Ok(sys)
}

/// What [`apply_boundary_conditions`] did.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundarySummary {
    pub dirichlet_faces: usize,
    pub neumann_faces: usize,
}

/// Applies the boundary condition of each boundary face's marker.
///
/// A Neumann value is an outward flux density; it is converted to the
/// integrated flux unknown of the face. Every boundary face must carry a
/// marker with a Dirichlet or Neumann condition.
pub fn apply_boundary_conditions(
    system: &mut SaddleSystem,
    complex: &SimplicialComplex,
    geometry: &DualGeometry,
    tags: &BoundaryTags,
) -> Result<BoundarySummary> {
    let mut summary = BoundarySummary::default();
    for f in complex.boundary_faces() {
        let marker = complex.face_markers[f];
        match tags.get(marker) {
            Some(BoundaryKind::Dirichlet(t0)) => {
                system.apply_dirichlet(complex, f, t0)?;
                summary.dirichlet_faces += 1;
            }
            Some(BoundaryKind::Neumann(f0)) => {
                let sign = complex.face_tets[f].first.1 as f64;
                let omega = -sign * f0 * geometry.face_areas()[f];
                system.eliminate_face(f, omega)?;
                summary.neumann_faces += 1;
            }
            Some(BoundaryKind::Interior) | None => {
                return Err(DecError::Boundary(format!(
                    "boundary face {f} has marker {marker} without a boundary condition"
                )));
            }
        }
    }
    for (marker, _) in tags.iter() {
        if marker != 0 && !complex.face_markers.contains(&marker) {
            return Err(DecError::Boundary(format!("marker {marker} matches no face")));
        }
    }
    Ok(summary)
}

impl SaddleSystem {
    pub fn n_faces(&self) -> usize {
        self.a.len()
    }

    pub fn n_tets(&self) -> usize {
        self.c.len()
    }

    pub fn n_unknowns(&self) -> usize {
        self.a.len() + self.c.len()
    }

    /// Diagonal of the face block.
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Face-to-tet coupling block, faces × tets.
    pub fn b(&self) -> &CsrMatrix<f64> {
        &self.b
    }

    /// Transpose of [`Self::b`] as stored in the tet rows.
    pub fn bt(&self) -> &CsrMatrix<f64> {
        &self.bt
    }

    /// Diagonal of the tet block (zero except on pinned tets).
    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn is_eliminated(&self, face: usize) -> bool {
        self.eliminated[face].is_some()
    }

    pub fn eliminated_value(&self, face: usize) -> Option<f64> {
        self.eliminated[face]
    }

    pub fn dirichlet_value(&self, face: usize) -> Option<f64> {
        self.dirichlet[face]
    }

    pub fn pinned_tets(&self) -> Vec<usize> {
        (0..self.n_tets()).filter(|&t| self.pinned[t]).collect()
    }

    pub fn has_active_dirichlet(&self) -> bool {
        (0..self.n_faces()).any(|f| self.dirichlet[f].is_some() && self.eliminated[f].is_none())
    }

    /// Adds the known boundary temperature `t0` of a boundary face to the
    /// right-hand side. The face's dual edge ends on the surface, where the
    /// missing tet is replaced by `t0` with the opposite incidence sign.
    pub fn apply_dirichlet(&mut self, complex: &SimplicialComplex, face: usize, t0: f64) -> Result<()> {
        self.check_face(face)?;
        let ft = complex.face_tets[face];
        if !ft.is_boundary() {
            return Err(DecError::Boundary(format!("face {face} is not on the boundary")));
        }
        if self.eliminated[face].is_some() {
            return Err(DecError::Boundary(format!("face {face} is already eliminated")));
        }
        if self.dirichlet[face].is_some() {
            return Err(DecError::Boundary(format!("face {face} already has a temperature")));
        }
        self.rhs[face] += ft.first.1 as f64 * t0;
        self.dirichlet[face] = Some(t0);
        Ok(())
    }

    /// Fixes `ω_face = value`: moves the known column to the right-hand
    /// side, zeroes the face's row and column and puts 1 on its diagonal.
    /// Touches at most five stored matrix values.
    pub fn eliminate_face(&mut self, face: usize, value: f64) -> Result<()> {
        self.check_face(face)?;
        if self.eliminated[face].is_some() {
            return Err(DecError::InvalidArgument(format!("face {face} is already eliminated")));
        }
        let nf = self.n_faces();
        let mut entry = JournalEntry {
            op: Op::Eliminate(face),
            values: Vec::with_capacity(5),
            rhs: Vec::with_capacity(3),
        };

        let row = self.b.row_offsets()[face]..self.b.row_offsets()[face + 1];
        let tets: Vec<(usize, usize)> = row.clone().map(|k| (k, self.b.col_indices()[k])).collect();
        for &(k, t) in &tets {
            let bft = self.b.values()[k];
            if bft != 0.0 {
                entry.rhs.push((nf + t, self.rhs[nf + t]));
                self.rhs[nf + t] -= bft * value;
                entry.values.push((Slot::B(k), bft));
                self.b.values_mut()[k] = 0.0;
            }
            if let Some(pos) = self.bt_position(t, face) {
                let v = self.bt.values()[pos];
                if v != 0.0 {
                    entry.values.push((Slot::Bt(pos), v));
                    self.bt.values_mut()[pos] = 0.0;
                }
            }
        }
        if self.a[face] != 1.0 {
            entry.values.push((Slot::A(face), self.a[face]));
            self.a[face] = 1.0;
        }
        entry.rhs.push((face, self.rhs[face]));
        self.rhs[face] = value;
        self.eliminated[face] = Some(value);
        self.journal.push(entry);
        Ok(())
    }

    /// Inserts a crack: the face becomes insulated (zero flux) and is
    /// flagged in `conductivity`. Only interior faces can crack.
    pub fn crack_face(
        &mut self,
        complex: &SimplicialComplex,
        conductivity: &mut Conductivity,
        face: usize,
    ) -> Result<()> {
        self.check_face(face)?;
        if complex.is_boundary_face(face) {
            return Err(DecError::InvalidArgument(format!("face {face} is a boundary face")));
        }
        if conductivity.is_cracked(face) {
            return Err(DecError::InvalidArgument(format!("face {face} is already cracked")));
        }
        self.eliminate_face(face, 0.0)?;
        conductivity.set_cracked(face, true);
        Ok(())
    }

    /// Fixes `α_tet = 0` and drops the tet's balance equation.
    pub fn pin_tet(&mut self, tet: usize) -> Result<()> {
        if tet >= self.n_tets() {
            return Err(DecError::InvalidArgument(format!("tet {tet} out of range")));
        }
        if self.pinned[tet] {
            return Ok(());
        }
        let nf = self.n_faces();
        let mut entry = JournalEntry {
            op: Op::Pin(tet),
            values: Vec::new(),
            rhs: vec![(nf + tet, self.rhs[nf + tet])],
        };
        let row = self.bt.row_offsets()[tet]..self.bt.row_offsets()[tet + 1];
        for k in row {
            let f = self.bt.col_indices()[k];
            let v = self.bt.values()[k];
            if v != 0.0 {
                entry.values.push((Slot::Bt(k), v));
                self.bt.values_mut()[k] = 0.0;
            }
            if let Some(pos) = self.b_position(f, tet) {
                let v = self.b.values()[pos];
                if v != 0.0 {
                    entry.values.push((Slot::B(pos), v));
                    self.b.values_mut()[pos] = 0.0;
                }
            }
        }
        entry.values.push((Slot::C(tet), self.c[tet]));
        self.c[tet] = -1.0;
        self.rhs[nf + tet] = 0.0;
        self.pinned[tet] = true;
        self.journal.push(entry);
        Ok(())
    }

    /// Pins the lowest-numbered tet of every group of tets that is connected
    /// through non-eliminated faces but has neither an active Dirichlet face
    /// nor a pinned tet. Without this the temperature of such a region is
    /// only defined up to a constant. Returns the newly pinned tets.
    pub fn pin_floating_regions(&mut self, complex: &SimplicialComplex) -> Result<Vec<usize>> {
        let nt = self.n_tets();
        let mut uf = UnionFind::new(nt);
        for (f, ft) in complex.face_tets.iter().enumerate() {
            if let (Some(second), None) = (ft.second, self.eliminated[f]) {
                uf.union(ft.first.0, second.0);
            }
        }
        let mut anchored = vec![false; nt];
        for t in 0..nt {
            if self.pinned[t] {
                let r = uf.find(t);
                anchored[r] = true;
            }
        }
        for (f, ft) in complex.face_tets.iter().enumerate() {
            if self.dirichlet[f].is_some() && self.eliminated[f].is_none() {
                let r = uf.find(ft.first.0);
                anchored[r] = true;
            }
        }
        let mut pinned = Vec::new();
        for t in 0..nt {
            let r = uf.find(t);
            if !anchored[r] {
                anchored[r] = true;
                self.pin_tet(t)?;
                pinned.push(t);
            }
        }
        Ok(pinned)
    }

    /// Number of journaled mutations (eliminations and pins).
    pub fn journal_len(&self) -> usize {
        self.journal.len()
    }

    /// Undoes journaled mutations until `len` remain. Cracked flags in a
    /// [`Conductivity`] are not touched.
    pub fn rollback_to(&mut self, len: usize) {
        while self.journal.len() > len {
            let entry = self.journal.pop().expect("non-empty journal");
            for &(slot, v) in entry.values.iter().rev() {
                match slot {
                    Slot::A(i) => self.a[i] = v,
                    Slot::B(k) => self.b.values_mut()[k] = v,
                    Slot::Bt(k) => self.bt.values_mut()[k] = v,
                    Slot::C(t) => self.c[t] = v,
                }
            }
            for &(i, v) in entry.rhs.iter().rev() {
                self.rhs[i] = v;
            }
            match entry.op {
                Op::Eliminate(f) => self.eliminated[f] = None,
                Op::Pin(t) => self.pinned[t] = false,
            }
        }
    }

    /// All stored matrix values in a fixed order: `A`, `B`, `Bᵀ`, `C`.
    /// Two systems with the same sparsity can be diffed entrywise.
    pub fn stored_values(&self) -> Vec<f64> {
        let mut v = self.a.clone();
        v.extend_from_slice(self.b.values());
        v.extend_from_slice(self.bt.values());
        v.extend_from_slice(&self.c);
        v
    }

    /// The full matrix with explicit zeros dropped.
    pub fn to_csr(&self) -> CsrMatrix<f64> {
        let nf = self.n_faces();
        let n = self.n_unknowns();
        let mut coo = CooMatrix::new(n, n);
        for (f, &a) in self.a.iter().enumerate() {
            if a != 0.0 {
                coo.push(f, f, a);
            }
        }
        for (f, t, &v) in self.b.triplet_iter() {
            if v != 0.0 {
                coo.push(f, nf + t, v);
            }
        }
        for (t, f, &v) in self.bt.triplet_iter() {
            if v != 0.0 {
                coo.push(nf + t, f, v);
            }
        }
        for (t, &c) in self.c.iter().enumerate() {
            if c != 0.0 {
                coo.push(nf + t, nf + t, c);
            }
        }
        CsrMatrix::from(&coo)
    }

    /// `M x` for the full system, computed row by row from the blocks.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let nf = self.n_faces();
        assert_eq!(x.len(), self.n_unknowns());
        let (xw, xa) = x.split_at(nf);
        let mut y = vec![0.0; x.len()];
        for f in 0..nf {
            let mut s = self.a[f] * xw[f];
            let r = self.b.row(f);
            for (&t, &v) in r.col_indices().iter().zip(r.values()) {
                s += v * xa[t];
            }
            y[f] = s;
        }
        for t in 0..self.n_tets() {
            let mut s = self.c[t] * xa[t];
            let r = self.bt.row(t);
            for (&f, &v) in r.col_indices().iter().zip(r.values()) {
                s += v * xw[f];
            }
            y[nf + t] = s;
        }
        y
    }

    fn check_face(&self, face: usize) -> Result<()> {
        if face >= self.n_faces() {
            return Err(DecError::InvalidArgument(format!("face {face} out of range")));
        }
        Ok(())
    }

    fn bt_position(&self, tet: usize, face: usize) -> Option<usize> {
        let lo = self.bt.row_offsets()[tet];
        let hi = self.bt.row_offsets()[tet + 1];
        self.bt.col_indices()[lo..hi].binary_search(&face).ok().map(|k| lo + k)
    }

    fn b_position(&self, face: usize, tet: usize) -> Option<usize> {
        let lo = self.b.row_offsets()[face];
        let hi = self.b.row_offsets()[face + 1];
        self.b.col_indices()[lo..hi].binary_search(&tet).ok().map(|k| lo + k)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    // the smaller root wins so that roots are component minima
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::build_complex;
    use crate::geometry::{hodge_star, DEFAULT_LIMITER};
    use crate::mesh_io::{generate_cube, CubeSide, FaceRecord, RawMesh};
    use nalgebra::Point3;

    fn single_tet() -> RawMesh {
        RawMesh {
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
        }
    }

    fn setup(mesh: &RawMesh, kappa: f64) -> (SimplicialComplex, DualGeometry, SaddleSystem) {
        let c = build_complex(mesh).unwrap();
        let g = DualGeometry::new(&c).unwrap();
        let h = hodge_star(&g, 2, DEFAULT_LIMITER).unwrap();
        let s = assemble(&c, &h, &Conductivity::uniform(c.n_faces(), kappa)).unwrap();
        (c, g, s)
    }

    #[test]
    fn single_tet_blocks() {
        let (c, g, s) = setup(&single_tet(), 1.0);
        assert_eq!(s.a().len(), 4);
        for f in 0..4 {
            let expect = g.dual_edge_lengths()[f].max(DEFAULT_LIMITER) / g.face_areas()[f];
            assert!((s.a()[f] - expect).abs() < 1e-15);
            assert_eq!(s.b().get_entry(f, 0).unwrap().into_value(), c.face_tets[f].first.1 as f64);
        }
    }

    #[test]
    fn doubling_kappa_halves_a() {
        let m = generate_cube(2).unwrap();
        let (_, _, s1) = setup(&m, 1.0);
        let (_, _, s2) = setup(&m, 2.0);
        for (x, y) in s1.a().iter().zip(s2.a()) {
            assert_eq!(*x, 2.0 * y);
        }
        assert_eq!(s1.b(), s2.b());
    }

    #[test]
    fn pristine_pattern_and_symmetry() {
        let (_, _, s) = setup(&generate_cube(2).unwrap(), 1.0);
        let m = s.to_csr();
        assert_eq!(m.nnz(), s.n_faces() + 2 * s.b().nnz());
        assert_eq!(m.transpose(), m);
    }

    #[test]
    fn non_positive_kappa_rejected() {
        let c = build_complex(&generate_cube(1).unwrap()).unwrap();
        let g = DualGeometry::new(&c).unwrap();
        let h = hodge_star(&g, 2, DEFAULT_LIMITER).unwrap();
        let mut k = vec![1.0; c.n_faces()];
        k[3] = 0.0;
        assert!(assemble(&c, &h, &Conductivity::from_values(k)).is_err());
    }

    #[test]
    fn dirichlet_errors() {
        let (c, _, mut s) = setup(&generate_cube(2).unwrap(), 1.0);
        let interior = crate::complex::non_boundary_faces(&c)[0];
        assert!(s.apply_dirichlet(&c, interior, 1.0).is_err());
        let bf = c.boundary_faces()[0];
        s.apply_dirichlet(&c, bf, 0.0).unwrap();
        assert!(s.rhs().iter().all(|&r| r == 0.0));
        assert!(s.apply_dirichlet(&c, bf, 1.0).is_err());
        let bf2 = c.boundary_faces()[1];
        s.eliminate_face(bf2, 0.0).unwrap();
        assert!(s.apply_dirichlet(&c, bf2, 1.0).is_err());
    }

    #[test]
    fn elimination_touches_at_most_five_values() {
        let (c, _, mut s) = setup(&generate_cube(2).unwrap(), 1.0);
        let f = crate::complex::non_boundary_faces(&c)[5];
        let before = s.stored_values();
        s.eliminate_face(f, 0.0).unwrap();
        let after = s.stored_values();
        let changed = before.iter().zip(&after).filter(|(x, y)| x != y).count();
        assert!(changed <= 5 && changed >= 3, "{changed}");
        assert!(s.eliminate_face(f, 0.0).is_err());
    }

    #[test]
    fn rollback_restores_system() {
        let (c, g, mut s) = setup(&generate_cube(2).unwrap(), 1.0);
        apply_boundary_conditions(&mut s, &c, &g, &BoundaryTags::cube_experiment(CubeSide::ZMax, 1.0, 0.0))
            .unwrap();
        let mark = s.journal_len();
        let pristine = s.clone();
        let mut k = Conductivity::uniform(c.n_faces(), 1.0);
        for f in crate::complex::non_boundary_faces(&c).into_iter().take(30) {
            s.crack_face(&c, &mut k, f).unwrap();
        }
        s.pin_floating_regions(&c).unwrap();
        s.rollback_to(mark);
        assert_eq!(s, pristine);
    }

    #[test]
    fn crack_rules() {
        let (c, _, mut s) = setup(&generate_cube(2).unwrap(), 1.0);
        let mut k = Conductivity::uniform(c.n_faces(), 1.0);
        let bf = c.boundary_faces()[0];
        assert!(s.crack_face(&c, &mut k, bf).is_err());
        let f = crate::complex::non_boundary_faces(&c)[0];
        s.crack_face(&c, &mut k, f).unwrap();
        assert!(k.is_cracked(f) && s.is_eliminated(f));
        assert_eq!(k.kappa(f), 0.0);
        assert!(s.crack_face(&c, &mut k, f).is_err());
    }

    #[test]
    fn pure_neumann_pins_one_tet() {
        let (c, _, mut s) = setup(&generate_cube(1).unwrap(), 1.0);
        for f in c.boundary_faces() {
            s.eliminate_face(f, 0.0).unwrap();
        }
        assert_eq!(s.pin_floating_regions(&c).unwrap(), vec![0]);
        assert!(s.pin_floating_regions(&c).unwrap().is_empty());
        assert_eq!(s.c()[0], -1.0);
    }

    #[test]
    fn isolated_tet_is_pinned() {
        let (c, g, mut s) = setup(&generate_cube(2).unwrap(), 1.0);
        apply_boundary_conditions(&mut s, &c, &g, &BoundaryTags::cube_experiment(CubeSide::ZMax, 1.0, 0.0))
            .unwrap();
        let mut k = Conductivity::uniform(c.n_faces(), 1.0);
        // a tet with no Dirichlet face
        let t = (0..c.n_tets())
            .find(|&t| c.tet_faces[t].iter().all(|&f| s.dirichlet_value(f).is_none()))
            .unwrap();
        for &f in &c.tet_faces[t] {
            if !c.is_boundary_face(f) {
                s.crack_face(&c, &mut k, f).unwrap();
            }
        }
        assert_eq!(s.pin_floating_regions(&c).unwrap(), vec![t]);
    }

    #[test]
    fn unassigned_marker_is_error() {
        let (c, g, mut s) = setup(&single_tet(), 1.0);
        let tags = BoundaryTags::new().with(2, BoundaryKind::Dirichlet(1.0)).unwrap();
        assert!(apply_boundary_conditions(&mut s, &c, &g, &tags).is_err());
    }
}
