//! Circumcentric dual geometry and the diagonal Hodge star.
//!
//! Dual cells are accumulated from the elementary simplices of the
//! circumcentric subdivision of each tet: for every flag
//! `vertex ⊂ edge ⊂ triangle ⊂ tet` the simplex spanned by the vertex and
//! the circumcenters of the edge, triangle and tet contributes to the dual
//! of each member of the flag. Each contribution is signed by whether the
//! circumcenter of the larger simplex lies on the same side of the smaller
//! one as the rest of the larger simplex, read off from the sign of the
//! corresponding barycentric coordinate. On meshes that are not
//! well-centered some dual volumes therefore come out negative or zero.

use nalgebra::{DMatrix, DVector, Point3, Vector3};
use rayon::prelude::*;

use crate::complex::SimplicialComplex;
use crate::error::{DecError, Result};

/// Default clamp applied to dual edge lengths in the face Hodge star.
pub const DEFAULT_LIMITER: f64 = 1e-8;

/// Circumcenter of a simplex with its barycentric coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Circumcenter {
    pub center: Point3<f64>,
    /// Barycentric coordinates with respect to the input vertices.
    pub barycentric: Vec<f64>,
}

/// Circumcenter of 1 to 4 affinely independent points.
///
/// Solves the Gram system for the point of the affine hull equidistant
/// from all vertices, in coordinates relative to the first vertex.
pub fn circumcenter(points: &[Point3<f64>]) -> Result<Circumcenter> {
    let k = points.len();
    if k == 0 || k > 4 {
        return Err(DecError::InvalidArgument(format!(
            "circumcenter needs 1 to 4 points, got {k}"
        )));
    }
    if k == 1 {
        return Ok(Circumcenter {
            center: points[0],
            barycentric: vec![1.0],
        });
    }
    let p0 = points[0];
    let e: Vec<Vector3<f64>> = points[1..].iter().map(|p| p - p0).collect();
    let m = k - 1;
    let gram = DMatrix::from_fn(m, m, |i, j| e[i].dot(&e[j]));
    let rhs = DVector::from_fn(m, |i, _| 0.5 * e[i].norm_squared());
    let scale = gram.diagonal().max();
    let lu = gram.clone().lu();
    let x = lu
        .solve(&rhs)
        .filter(|_| lu.determinant().abs() > 1e-14 * scale.powi(m as i32))
        .ok_or_else(|| DecError::Degenerate(format!("{k} points are affinely dependent")))?;
    let mut center = p0;
    for (xi, ei) in x.iter().zip(&e) {
        center += ei * *xi;
    }
    let mut barycentric = Vec::with_capacity(k);
    barycentric.push(1.0 - x.sum());
    barycentric.extend(x.iter().copied());
    Ok(Circumcenter {
        center,
        barycentric,
    })
}

fn tri_area(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

fn tet_volume(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>, d: &Point3<f64>) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a)).abs() / 6.0
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Primal and dual measures for every cell of a complex.
///
/// Index `[p]` selects the p-cells. Primal volumes are 1 for vertices,
/// lengths, areas and (positive) tet volumes. Dual volumes are the signed
/// measures of the circumcentric dual cells, with dual 0-cells (tets) set
/// to 1.
#[derive(Clone, Debug)]
pub struct DualGeometry {
    pub circumcenters: [Vec<Point3<f64>>; 4],
    pub primal_volume: [Vec<f64>; 4],
    pub dual_volume: [Vec<f64>; 4],
    face_barycentric: Vec<[f64; 3]>,
    tet_barycentric: Vec<[f64; 4]>,
}

impl DualGeometry {
    /// Computes circumcenters, primal volumes and dual volumes.
    ///
    /// Fails on degenerate triangles or tets (zero measure).
    pub fn new(complex: &SimplicialComplex) -> Result<Self> {
        let pts = &complex.points;

        let edge_cc: Vec<Point3<f64>> = complex
            .edges
            .iter()
            .map(|e| Point3::from((pts[e.vertices[0]].coords + pts[e.vertices[1]].coords) * 0.5))
            .collect();
        let edge_len: Vec<f64> = complex
            .edges
            .iter()
            .map(|e| (pts[e.vertices[1]] - pts[e.vertices[0]]).norm())
            .collect();

        let faces: Vec<(Point3<f64>, [f64; 3], f64)> = complex
            .faces
            .par_iter()
            .enumerate()
            .map(|(fi, f)| {
                let v = f.vertices.map(|i| pts[i]);
                let area = tri_area(&v[0], &v[1], &v[2]);
                let cc = circumcenter(&v)
                    .map_err(|_| DecError::Degenerate(format!("triangle {fi} {:?}", f.vertices)))?;
                let b = &cc.barycentric;
                Ok((cc.center, [b[0], b[1], b[2]], area))
            })
            .collect::<Result<_>>()?;

        let tets: Vec<(Point3<f64>, [f64; 4], f64)> = complex
            .tets
            .par_iter()
            .enumerate()
            .map(|(ti, t)| {
                let v = t.vertices.map(|i| pts[i]);
                let vol = tet_volume(&v[0], &v[1], &v[2], &v[3]);
                if vol <= 0.0 {
                    return Err(DecError::Degenerate(format!(
                        "tet {ti} {:?} has zero volume",
                        t.vertices
                    )));
                }
                let cc = circumcenter(&v)
                    .map_err(|_| DecError::Degenerate(format!("tet {ti} {:?}", t.vertices)))?;
                let b = &cc.barycentric;
                Ok((cc.center, [b[0], b[1], b[2], b[3]], vol))
            })
            .collect::<Result<_>>()?;

        let face_cc: Vec<Point3<f64>> = faces.iter().map(|f| f.0).collect();
        let face_barycentric: Vec<[f64; 3]> = faces.iter().map(|f| f.1).collect();
        let face_area: Vec<f64> = faces.iter().map(|f| f.2).collect();
        let tet_cc: Vec<Point3<f64>> = tets.iter().map(|t| t.0).collect();
        let tet_barycentric: Vec<[f64; 4]> = tets.iter().map(|t| t.1).collect();
        let tet_vol: Vec<f64> = tets.iter().map(|t| t.2).collect();

        let mut dual0 = vec![0.0; complex.n_nodes()];
        let mut dual1 = vec![0.0; complex.n_edges()];
        let mut dual2 = vec![0.0; complex.n_faces()];
        for (ti, tet) in complex.tets.iter().enumerate() {
            let ct = tet_cc[ti];
            for skip in 0..4 {
                let fi = complex.tet_faces[ti][skip];
                let cf = face_cc[fi];
                let s_face = sign(tet_barycentric[ti][skip]);
                dual2[fi] += s_face * (ct - cf).norm();

                let face = &complex.faces[fi];
                for fskip in 0..3 {
                    let ei = complex.face_edges[fi][fskip];
                    let ce = edge_cc[ei];
                    let s_edge = s_face * sign(face_barycentric[fi][fskip]);
                    dual1[ei] += s_edge * tri_area(&ct, &cf, &ce);

                    let edge = &complex.edges[ei];
                    for &v in &edge.vertices {
                        dual0[v] += s_edge * tet_volume(&ct, &cf, &ce, &pts[v]);
                    }
                }
                debug_assert!(face.vertices.contains(&tet.vertices[(skip + 1) % 4]) || skip == 3);
            }
        }

        Ok(Self {
            circumcenters: [pts.clone(), edge_cc, face_cc, tet_cc],
            primal_volume: [vec![1.0; complex.n_nodes()], edge_len, face_area, tet_vol],
            dual_volume: [dual0, dual1, dual2, vec![1.0; complex.n_tets()]],
            face_barycentric,
            tet_barycentric,
        })
    }

    /// Signed length of the dual edge of each face.
    pub fn dual_edge_lengths(&self) -> &[f64] {
        &self.dual_volume[2]
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.primal_volume[2]
    }

    pub fn tet_volumes(&self) -> &[f64] {
        &self.primal_volume[3]
    }

    /// Barycentric coordinates of each tet's circumcenter.
    pub fn tet_circumcenter_barycentric(&self) -> &[[f64; 4]] {
        &self.tet_barycentric
    }

    /// Barycentric coordinates of each triangle's circumcenter.
    pub fn face_circumcenter_barycentric(&self) -> &[[f64; 3]] {
        &self.face_barycentric
    }

    pub fn total_volume(&self) -> f64 {
        self.primal_volume[3].iter().sum()
    }
}

/// Diagonal Hodge star entries for one dimension.
#[derive(Clone, Debug)]
pub struct HodgeStar {
    pub p: usize,
    pub entries: Vec<f64>,
    /// Cells whose dual length was clamped (p = 2 only).
    pub limited: Vec<usize>,
}

impl HodgeStar {
    pub fn limited_fraction(&self) -> f64 {
        if self.entries.is_empty() {
            0.0
        } else {
            self.limited.len() as f64 / self.entries.len() as f64
        }
    }
}

/// Diagonal Hodge star on p-cells: dual volume over primal volume.
///
/// For `p = 2` the dual edge length is first clamped from below to
/// `limiter`; lengths that are negative, zero, or smaller than the limiter
/// all become `+limiter`, so every entry is strictly positive. Other
/// dimensions use the raw ratio.
pub fn hodge_star(geometry: &DualGeometry, p: usize, limiter: f64) -> Result<HodgeStar> {
    if p > 3 {
        return Err(DecError::InvalidArgument(format!("hodge star for p={p}")));
    }
    if !(limiter > 0.0) {
        return Err(DecError::InvalidArgument(format!(
            "limiter must be positive, got {limiter}"
        )));
    }
    let primal = &geometry.primal_volume[p];
    let dual = &geometry.dual_volume[p];
    let mut entries = Vec::with_capacity(primal.len());
    let mut limited = Vec::new();
    for (i, (&pv, &dv)) in primal.iter().zip(dual).enumerate() {
        if !(pv > 0.0) {
            return Err(DecError::Degenerate(format!(
                "{p}-cell {i} has zero primal volume"
            )));
        }
        let dv = if p == 2 && dv < limiter {
            limited.push(i);
            limiter
        } else {
            dv
        };
        entries.push(dv / pv);
    }
    Ok(HodgeStar {
        p,
        entries,
        limited,
    })
}

/// Gradients of the barycentric coordinate functions of a tet.
fn barycentric_gradients(v: &[Point3<f64>; 4]) -> Option<[Vector3<f64>; 4]> {
    let j = nalgebra::Matrix3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
    let inv = j.try_inverse()?;
    let g1 = inv.row(0).transpose();
    let g2 = inv.row(1).transpose();
    let g3 = inv.row(2).transpose();
    Some([-(g1 + g2 + g3), g1, g2, g3])
}

/// Reconstructs a constant vector per tet from a face cochain using the
/// lowest-order Whitney 2-form basis evaluated at the tet barycenter.
///
/// The saddle system's flux unknown is `ω_f = -∫_f q·dA` over the face in
/// its sorted-vertex orientation, where `q` is the physical flux density,
/// so the reconstruction returns `q = -Σ_f ω_f W_f`.
pub fn whitney_vector(
    complex: &SimplicialComplex,
    face_cochain: &[f64],
) -> Result<Vec<Vector3<f64>>> {
    if face_cochain.len() != complex.n_faces() {
        return Err(DecError::InvalidArgument(format!(
            "face cochain has {} entries, complex has {} faces",
            face_cochain.len(),
            complex.n_faces()
        )));
    }
    complex
        .tets
        .iter()
        .enumerate()
        .map(|(ti, t)| {
            let v = t.vertices.map(|i| complex.points[i]);
            let grads = barycentric_gradients(&v)
                .ok_or_else(|| DecError::Degenerate(format!("tet {ti} is flat")))?;
            let mut q = Vector3::zeros();
            for skip in 0..4 {
                // face vertices in sorted order: the tet's local indices minus `skip`
                let local: Vec<usize> = (0..4).filter(|&k| k != skip).collect();
                let (a, b, c) = (grads[local[0]], grads[local[1]], grads[local[2]]);
                // 2 (λa ∇λb×∇λc + cyclic) at λ = 1/4
                let w = 0.5 * (b.cross(&c) + c.cross(&a) + a.cross(&b));
                q -= w * face_cochain[complex.tet_faces[ti][skip]];
            }
            Ok(q)
        })
        .collect()
}

/// Volume-weighted RMS error of a per-tet temperature against `exact`
/// evaluated at the tet circumcenters (the dual vertices):
/// `sqrt(Σ_t (α_t − T(c_t))² V_t)`.
pub fn rms_error<F>(geometry: &DualGeometry, alpha: &[f64], exact: F) -> Result<f64>
where
    F: Fn(&Point3<f64>) -> f64,
{
    let vols = geometry.tet_volumes();
    if alpha.len() != vols.len() {
        return Err(DecError::InvalidArgument(format!(
            "temperature has {} entries, complex has {} tets",
            alpha.len(),
            vols.len()
        )));
    }
    let sq: f64 = alpha
        .iter()
        .zip(&geometry.circumcenters[3])
        .zip(vols)
        .map(|((a, c), v)| (a - exact(c)).powi(2) * v)
        .sum();
    Ok(sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::build_complex;
    use crate::mesh_io::{generate_cube, RawMesh};

    fn p(x: f64, y: f64, z: f64) -> Point3<f64> {
        Point3::new(x, y, z)
    }

    fn one_tet(v: [Point3<f64>; 4]) -> RawMesh {
        RawMesh {
            nodes: v.to_vec(),
            tets: vec![[0, 1, 2, 3]],
            ..Default::default()
        }
    }

    #[test]
    fn rms_of_exact_field_is_zero() {
        let c = build_complex(&generate_cube(2).unwrap()).unwrap();
        let g = DualGeometry::new(&c).unwrap();
        let exact: Vec<f64> = g.circumcenters[3].iter().map(|p| 2.0 * p.x - p.z).collect();
        assert_eq!(rms_error(&g, &exact, |p| 2.0 * p.x - p.z).unwrap(), 0.0);
        let shifted: Vec<f64> = exact.iter().map(|t| t + 0.5).collect();
        let rms = rms_error(&g, &shifted, |p| 2.0 * p.x - p.z).unwrap();
        assert!((rms - 0.5).abs() < 1e-12);
        assert!(rms_error(&g, &exact[1..], |_| 0.0).is_err());
    }

    #[test]
    fn segment_midpoint() {
        let c = circumcenter(&[p(0., 0., 0.), p(2., 0., 0.)]).unwrap();
        assert!((c.center - p(1., 0., 0.)).norm() < 1e-15);
    }

    #[test]
    fn equilateral_triangle_centroid() {
        let s3 = 3f64.sqrt();
        let c = circumcenter(&[p(0., 0., 0.), p(1., 0., 0.), p(0.5, s3 / 2.0, 0.)]).unwrap();
        assert!((c.center - p(0.5, s3 / 6.0, 0.0)).norm() < 1e-15);
        for b in &c.barycentric {
            assert!((b - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_detected() {
        assert!(circumcenter(&[p(0., 0., 0.), p(1., 0., 0.), p(2., 0., 0.)]).is_err());
        assert!(circumcenter(&[p(0., 0., 0.), p(0., 0., 0.)]).is_err());
    }

    #[test]
    fn regular_tet_symmetric_hodge() {
        let s = 1.0 / 2f64.sqrt();
        let v = [p(1., 0., -s), p(-1., 0., -s), p(0., 1., s), p(0., -1., s)];
        let c = build_complex(&one_tet(v)).unwrap();
        let g = DualGeometry::new(&c).unwrap();
        let h = hodge_star(&g, 2, DEFAULT_LIMITER).unwrap();
        assert!(h.limited.is_empty());
        for e in &h.entries {
            assert!(*e > 0.0);
            assert!((e - h.entries[0]).abs() < 1e-12);
        }
        // dual edge of each face is the distance from the center to the face centroid
        let center = g.circumcenters[3][0];
        for (fi, f) in c.faces.iter().enumerate() {
            let centroid = Point3::from(
                f.vertices.iter().map(|&i| c.points[i].coords).sum::<Vector3<f64>>() / 3.0,
            );
            assert!((g.dual_volume[2][fi] - (center - centroid).norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn tet_hodge_is_inverse_volume() {
        let c = build_complex(&generate_cube(2).unwrap()).unwrap();
        let g = DualGeometry::new(&c).unwrap();
        let h3 = hodge_star(&g, 3, DEFAULT_LIMITER).unwrap();
        for (e, v) in h3.entries.iter().zip(g.tet_volumes()) {
            assert!((e * v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kuhn_cube_has_zero_dual_edges() {
        let c = build_complex(&generate_cube(2).unwrap()).unwrap();
        let g = DualGeometry::new(&c).unwrap();
        let zeros = g.dual_edge_lengths().iter().filter(|l| l.abs() < 1e-12).count();
        assert!(zeros > 0);
        let h = hodge_star(&g, 2, DEFAULT_LIMITER).unwrap();
        assert_eq!(h.limited.len(), zeros);
        assert!(h.entries.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn vertex_duals_tile_cube() {
        let c = build_complex(&generate_cube(2).unwrap()).unwrap();
        let g = DualGeometry::new(&c).unwrap();
        let total: f64 = g.dual_volume[0].iter().sum();
        assert!((total - 1.0).abs() < 1e-10, "{total}");
    }

    #[test]
    fn zero_volume_tet_rejected() {
        let v = [p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.), p(1., 1., 0.)];
        let c = build_complex(&one_tet(v)).unwrap();
        assert!(DualGeometry::new(&c).is_err());
    }

    #[test]
    fn limiter_must_be_positive() {
        let c = build_complex(&generate_cube(1).unwrap()).unwrap();
        let g = DualGeometry::new(&c).unwrap();
        assert!(hodge_star(&g, 2, 0.0).is_err());
    }

    #[test]
    fn whitney_zero_cochain() {
        let c = build_complex(&generate_cube(1).unwrap()).unwrap();
        let v = whitney_vector(&c, &vec![0.0; c.n_faces()]).unwrap();
        assert!(v.iter().all(|x| x.norm() == 0.0));
        assert!(whitney_vector(&c, &[0.0]).is_err());
    }
}
