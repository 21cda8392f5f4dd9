//! Oriented simplicial 3-complex and its incidence matrices.
//!
//! Cells of every dimension are stored with sorted vertex tuples in
//! lexicographic order, so the same mesh always produces the same
//! numbering. Edges and triangles take the orientation of their sorted
//! vertex order. Tetrahedra carry an extra sign making every tet
//! positively oriented in space; with it, the two tets sharing an interior
//! triangle always see it with opposite incidence signs.

use std::collections::HashMap;

use nalgebra::Point3;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{DecError, Result};
use crate::mesh_io::RawMesh;

/// A `N-1`-simplex given by `N` strictly increasing vertex indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Simplex<const N: usize> {
    pub vertices: [usize; N],
    /// +1 or -1: orientation of the cell relative to its sorted vertex order.
    pub orientation: i8,
}

impl<const N: usize> Simplex<N> {
    /// Sorts `vertices`, recording the permutation parity as the orientation.
    pub fn from_unsorted(mut vertices: [usize; N]) -> Self {
        let mut sign = 1i8;
        // insertion sort, counting swaps
        for i in 1..N {
            let mut j = i;
            while j > 0 && vertices[j - 1] > vertices[j] {
                vertices.swap(j - 1, j);
                sign = -sign;
                j -= 1;
            }
        }
        Self {
            vertices,
            orientation: sign,
        }
    }
}

impl Simplex<4> {
    /// The triangle opposite the `skip`-th vertex.
    pub fn face(&self, skip: usize) -> [usize; 3] {
        let v = self.vertices;
        match skip {
            0 => [v[1], v[2], v[3]],
            1 => [v[0], v[2], v[3]],
            2 => [v[0], v[1], v[3]],
            _ => [v[0], v[1], v[2]],
        }
    }
}

/// Sparse incidence matrix with entries in {-1, 0, +1}.
pub type Incidence = CsrMatrix<i32>;

#[derive(Clone, Debug)]
pub struct SimplicialComplex {
    pub points: Vec<Point3<f64>>,
    pub edges: Vec<Simplex<2>>,
    pub faces: Vec<Simplex<3>>,
    pub tets: Vec<Simplex<4>>,
    /// Edges of each face, in order of the omitted face vertex.
    pub face_edges: Vec<[usize; 3]>,
    /// Faces of each tet, in order of the omitted tet vertex.
    pub tet_faces: Vec<[usize; 4]>,
    /// Incidence sign of each entry of `tet_faces`.
    pub tet_face_signs: Vec<[i8; 4]>,
    /// Tets incident to each face with the face's incidence sign in that tet.
    /// One entry for boundary faces, two for interior faces.
    pub face_tets: Vec<FaceTets>,
    /// Boundary marker per face; 0 for interior faces.
    pub face_markers: Vec<i32>,
    /// `boundary[p - 1]` maps p-chains to (p-1)-chains, shape `n_{p-1} x n_p`.
    boundary: [Incidence; 3],
}

/// Up to two tets on either side of a face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceTets {
    pub first: (usize, i8),
    pub second: Option<(usize, i8)>,
}

impl FaceTets {
    pub fn iter(&self) -> impl Iterator<Item = (usize, i8)> {
        std::iter::once(self.first).chain(self.second)
    }

    pub fn is_boundary(&self) -> bool {
        self.second.is_none()
    }
}

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

fn incidence(rows: usize, cols: usize, entries: impl Iterator<Item = (usize, usize, i32)>) -> Incidence {
    let mut coo = CooMatrix::new(rows, cols);
    for (r, c, v) in entries {
        coo.push(r, c, v);
    }
    CsrMatrix::from(&coo)
}

/// Builds the complex of all faces, edges and vertices induced by the tets
/// of `mesh`, and attaches the boundary markers of the mesh's face records.
pub fn build_complex(mesh: &RawMesh) -> Result<SimplicialComplex> {
    mesh.validate()?;

    let mut tets = Vec::with_capacity(mesh.tets.len());
    for (i, t) in mesh.tets.iter().enumerate() {
        let mut s = Simplex::from_unsorted(*t);
        if s.vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(DecError::Mesh(format!("tet {i} has repeated vertices")));
        }
        // orientation from geometry: sign making the tet positively oriented
        let p = |k: usize| mesh.nodes[s.vertices[k]];
        let det = (p(1) - p(0)).cross(&(p(2) - p(0))).dot(&(p(3) - p(0)));
        s.orientation = if det < 0.0 { -1 } else { 1 };
        tets.push(s);
    }

    // faces: dedup of sorted triples
    let mut faces: Vec<[usize; 3]> = tets
        .iter()
        .flat_map(|t| (0..4).map(move |skip| t.face(skip)))
        .collect();
    faces.sort_unstable();
    faces.dedup();
    let face_index: HashMap<[usize; 3], usize> =
        faces.iter().enumerate().map(|(i, f)| (*f, i)).collect();

    let mut edges: Vec<[usize; 2]> = faces
        .iter()
        .flat_map(|f| [[f[1], f[2]], [f[0], f[2]], [f[0], f[1]]])
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let edge_index: HashMap<[usize; 2], usize> =
        edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();

    let mut tet_faces = Vec::with_capacity(tets.len());
    let mut tet_face_signs = Vec::with_capacity(tets.len());
    let mut face_tets: Vec<Vec<(usize, i8)>> = vec![Vec::new(); faces.len()];
    for (ti, t) in tets.iter().enumerate() {
        let mut fs = [0; 4];
        let mut signs = [0i8; 4];
        for skip in 0..4 {
            let fi = face_index[&t.face(skip)];
            let sign = if skip % 2 == 0 { 1 } else { -1 } * t.orientation;
            fs[skip] = fi;
            signs[skip] = sign;
            face_tets[fi].push((ti, sign));
        }
        tet_faces.push(fs);
        tet_face_signs.push(signs);
    }
    let face_tets = face_tets
        .into_iter()
        .enumerate()
        .map(|(fi, list)| match list.as_slice() {
            [a] => Ok(FaceTets {
                first: *a,
                second: None,
            }),
            [a, b] => Ok(FaceTets {
                first: *a,
                second: Some(*b),
            }),
            _ => Err(DecError::Mesh(format!(
                "face {:?} has {} incident tets (non-manifold)",
                faces[fi],
                list.len()
            ))),
        })
        .collect::<Result<Vec<_>>>()?;

    let face_edges: Vec<[usize; 3]> = faces
        .iter()
        .map(|f| {
            [
                edge_index[&[f[1], f[2]]],
                edge_index[&[f[0], f[2]]],
                edge_index[&[f[0], f[1]]],
            ]
        })
        .collect();

    let mut face_markers = vec![0i32; faces.len()];
    for (ri, rec) in mesh.faces.iter().enumerate() {
        let key = sorted3(rec.nodes);
        let Some(&fi) = face_index.get(&key) else {
            return Err(DecError::Mesh(format!(
                "face record {ri} {:?} is not a face of any tet",
                rec.nodes
            )));
        };
        if rec.marker == 0 {
            continue;
        }
        if !face_tets[fi].is_boundary() {
            return Err(DecError::Mesh(format!(
                "face record {ri} carries marker {} but lies inside the mesh",
                rec.marker
            )));
        }
        face_markers[fi] = rec.marker;
    }

    let n_nodes = mesh.nodes.len();
    let b1 = incidence(
        n_nodes,
        edges.len(),
        edges
            .iter()
            .enumerate()
            .flat_map(|(ei, e)| [(e[0], ei, -1), (e[1], ei, 1)]),
    );
    let b2 = incidence(
        edges.len(),
        faces.len(),
        face_edges
            .iter()
            .enumerate()
            .flat_map(|(fi, es)| [(es[0], fi, 1), (es[1], fi, -1), (es[2], fi, 1)]),
    );
    let b3 = incidence(
        faces.len(),
        tets.len(),
        tet_faces.iter().zip(&tet_face_signs).enumerate().flat_map(|(ti, (fs, ss))| {
            (0..4).map(move |k| (fs[k], ti, ss[k] as i32))
        }),
    );

    Ok(SimplicialComplex {
        points: mesh.nodes.clone(),
        edges: edges
            .into_iter()
            .map(|vertices| Simplex {
                vertices,
                orientation: 1,
            })
            .collect(),
        faces: faces
            .into_iter()
            .map(|vertices| Simplex {
                vertices,
                orientation: 1,
            })
            .collect(),
        tets,
        face_edges,
        tet_faces,
        tet_face_signs,
        face_tets,
        face_markers,
        boundary: [b1, b2, b3],
    })
}

impl SimplicialComplex {
    pub fn n_nodes(&self) -> usize {
        self.points.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    /// Number of p-cells.
    pub fn n_cells(&self, p: usize) -> usize {
        match p {
            0 => self.n_nodes(),
            1 => self.n_edges(),
            2 => self.n_faces(),
            3 => self.n_tets(),
            _ => 0,
        }
    }

    /// Boundary operator on p-chains, `p` in 1..=3.
    pub fn boundary(&self, p: usize) -> Result<&Incidence> {
        match p {
            1..=3 => Ok(&self.boundary[p - 1]),
            _ => Err(DecError::InvalidArgument(format!(
                "boundary operator defined for p in 1..=3, got {p}"
            ))),
        }
    }

    /// Coboundary (discrete exterior derivative) on p-cochains, `p` in 0..=2:
    /// the transpose of the boundary operator on (p+1)-chains.
    pub fn coboundary(&self, p: usize) -> Result<Incidence> {
        match p {
            0..=2 => Ok(self.boundary[p].transpose()),
            _ => Err(DecError::InvalidArgument(format!(
                "coboundary defined for p in 0..=2, got {p}"
            ))),
        }
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_tets[f].is_boundary()
    }

    /// Vertices of a tet in positively oriented order.
    pub fn oriented_tet(&self, t: usize) -> [usize; 4] {
        let s = &self.tets[t];
        let mut v = s.vertices;
        if s.orientation < 0 {
            v.swap(2, 3);
        }
        v
    }

    /// Faces carrying the given boundary marker.
    pub fn faces_with_marker(&self, marker: i32) -> Vec<usize> {
        (0..self.n_faces())
            .filter(|&f| self.face_markers[f] == marker)
            .collect()
    }

    pub fn boundary_faces(&self) -> Vec<usize> {
        (0..self.n_faces()).filter(|&f| self.is_boundary_face(f)).collect()
    }
}

/// Faces shared by two tets. Faces on the mesh boundary (one tet) are
/// excluded; non-manifold faces are rejected when the complex is built.
pub fn non_boundary_faces(complex: &SimplicialComplex) -> Vec<usize> {
    (0..complex.n_faces())
        .filter(|&f| !complex.is_boundary_face(f))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_io::{generate_cube, FaceRecord};

    pub(crate) fn single_tet() -> RawMesh {
        RawMesh {
            nodes: vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, 0.0, 1.0),
            ],
            tets: vec![[0, 1, 2, 3]],
            tet_regions: None,
            faces: [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]
                .into_iter()
                .map(|nodes| FaceRecord { nodes, marker: 1 })
                .collect(),
            edges: None,
        }
    }

    fn dense(m: &Incidence) -> Vec<Vec<i32>> {
        let mut d = vec![vec![0; m.ncols()]; m.nrows()];
        for (r, c, v) in m.triplet_iter() {
            d[r][c] += *v;
        }
        d
    }

    #[test]
    fn single_tet_counts() {
        let c = build_complex(&single_tet()).unwrap();
        assert_eq!(
            (c.n_nodes(), c.n_edges(), c.n_faces(), c.n_tets()),
            (4, 6, 4, 1)
        );
        assert!(non_boundary_faces(&c).is_empty());
        assert!(c.face_markers.iter().all(|&m| m == 1));
    }

    #[test]
    fn single_tet_coboundary_is_row_of_signs() {
        let c = build_complex(&single_tet()).unwrap();
        let d2 = c.coboundary(2).unwrap();
        assert_eq!((d2.nrows(), d2.ncols()), (1, 4));
        let row = &dense(&d2)[0];
        assert!(row.iter().all(|v| v.abs() == 1));
        // d2 applied to the all-ones... the tet's boundary chain is exactly this row
        let b3 = dense(c.boundary(3).unwrap());
        for f in 0..4 {
            assert_eq!(b3[f][0], row[f]);
        }
    }

    #[test]
    fn boundary_of_boundary_vanishes() {
        let c = build_complex(&generate_cube(2).unwrap()).unwrap();
        let b2 = c.boundary(2).unwrap();
        let b3 = c.boundary(3).unwrap();
        let b1 = c.boundary(1).unwrap();
        assert!((b2 * b3).values().iter().all(|&v| v == 0));
        assert!((b1 * b2).values().iter().all(|&v| v == 0));
        let d1 = c.coboundary(1).unwrap();
        let d2 = c.coboundary(2).unwrap();
        assert!((&d2 * &d1).values().iter().all(|&v| v == 0));
    }

    #[test]
    fn interior_faces_have_opposite_signs() {
        let c = build_complex(&generate_cube(2).unwrap()).unwrap();
        for f in non_boundary_faces(&c) {
            let ft = c.face_tets[f];
            let (_, s1) = ft.first;
            let (_, s2) = ft.second.unwrap();
            assert_eq!(s1, -s2);
        }
    }

    #[test]
    fn cube_one_interior_face_count() {
        let c = build_complex(&generate_cube(1).unwrap()).unwrap();
        // brute-force dedup of tet faces
        let mesh = generate_cube(1).unwrap();
        let mut all: Vec<[usize; 3]> = mesh
            .tets
            .iter()
            .flat_map(|t| {
                (0..4).map(move |s| {
                    let v: Vec<usize> = (0..4).filter(|&k| k != s).map(|k| t[k]).collect();
                    sorted3([v[0], v[1], v[2]])
                })
            })
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(c.n_faces(), all.len());
        assert_eq!(non_boundary_faces(&c).len(), all.len() - 12);
    }

    #[test]
    fn out_of_range_operators() {
        let c = build_complex(&single_tet()).unwrap();
        assert!(c.coboundary(3).is_err());
        assert!(c.boundary(0).is_err());
        assert!(c.boundary(4).is_err());
    }

    #[test]
    fn stray_face_record_rejected() {
        let mut m = single_tet();
        m.nodes.push(Point3::new(1.0, 1.0, 1.0));
        m.faces.push(FaceRecord {
            nodes: [1, 2, 4],
            marker: 2,
        });
        assert!(build_complex(&m).is_err());
    }

    #[test]
    fn non_manifold_rejected() {
        let mut m = single_tet();
        m.nodes.push(Point3::new(0.0, 0.0, -1.0));
        m.nodes.push(Point3::new(-1.0, -1.0, -1.0));
        // three tets sharing face (0,1,2)
        m.tets.push([0, 1, 2, 4]);
        m.tets.push([0, 1, 2, 5]);
        m.faces.clear();
        assert!(build_complex(&m).is_err());
    }

    #[test]
    fn deterministic() {
        let m = generate_cube(2).unwrap();
        let a = build_complex(&m).unwrap();
        let b = build_complex(&m).unwrap();
        assert_eq!(a.faces, b.faces);
        assert_eq!(a.tet_face_signs, b.tet_face_signs);
        assert_eq!(dense(a.boundary(3).unwrap()), dense(b.boundary(3).unwrap()));
    }

    #[test]
    fn simplex_parity() {
        let s = Simplex::from_unsorted([3, 1, 2, 0]);
        assert_eq!(s.vertices, [0, 1, 2, 3]);
        // (3 1 2 0) -> (0 1 2 3) is a single transposition of 0 and 3
        assert_eq!(s.orientation, -1);
    }
}
