use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Point3;

use crate::complex::SimplicialComplex;
use crate::error::{DecError, Result};
use crate::geometry::DualGeometry;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjKind {
    /// Every triangle of the complex.
    Primal,
    /// The dual polygon of every edge, with circumcenters as vertices.
    Dual,
}

/// Circumcenter chain of the dual cell of `edge`: the tet circumcenters
/// around it, closed through the edge midpoint and two boundary triangle
/// circumcenters when the edge lies on the boundary.
enum Corner {
    Edge(usize),
    Face(usize),
    Tet(usize),
}

fn dual_polygon(complex: &SimplicialComplex, edge_faces: &[usize], edge: usize) -> Vec<Corner> {
    let faces_of_tet_on_edge = |t: usize| -> Vec<usize> {
        complex.tet_faces[t]
            .iter()
            .copied()
            .filter(|f| edge_faces.contains(f))
            .collect()
    };
    let start = edge_faces.iter().copied().find(|&f| complex.is_boundary_face(f));
    let mut out = Vec::new();
    let first_face = match start {
        Some(f) => {
            out.push(Corner::Edge(edge));
            out.push(Corner::Face(f));
            f
        }
        None => edge_faces[0],
    };
    let mut face = first_face;
    let mut tet = complex.face_tets[face].first.0;
    loop {
        out.push(Corner::Tet(tet));
        let next = faces_of_tet_on_edge(tet).into_iter().find(|&f| f != face);
        let Some(nf) = next else { break };
        face = nf;
        if face == first_face {
            break;
        }
        match complex.face_tets[face].iter().map(|(t, _)| t).find(|&t| t != tet) {
            Some(t) => tet = t,
            None => {
                out.push(Corner::Face(face));
                break;
            }
        }
    }
    out
}

/// Writes the primal triangles or the dual polygons as Wavefront OBJ.
pub fn write_obj(
    path: impl AsRef<Path>,
    complex: &SimplicialComplex,
    geometry: &DualGeometry,
    kind: ObjKind,
) -> Result<()> {
    let path = path.as_ref();
    let io = |e| DecError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let vertex = |w: &mut BufWriter<File>, p: &Point3<f64>| writeln!(w, "v {:?} {:?} {:?}", p.x, p.y, p.z);
    (|| -> std::io::Result<()> {
        match kind {
            ObjKind::Primal => {
                writeln!(w, "# primal triangles")?;
                for p in &complex.points {
                    vertex(&mut w, p)?;
                }
                for f in &complex.faces {
                    let v = f.vertices;
                    writeln!(w, "f {} {} {}", v[0] + 1, v[1] + 1, v[2] + 1)?;
                }
            }
            ObjKind::Dual => {
                writeln!(w, "# dual polygons of edges")?;
                // vertex blocks: tet circumcenters, face circumcenters, edge midpoints
                let (nt, nf) = (complex.n_tets(), complex.n_faces());
                for p in geometry.circumcenters[3].iter().chain(&geometry.circumcenters[2]).chain(&geometry.circumcenters[1]) {
                    vertex(&mut w, p)?;
                }
                let mut edge_faces: HashMap<usize, Vec<usize>> = HashMap::new();
                for (f, es) in complex.face_edges.iter().enumerate() {
                    for &e in es {
                        edge_faces.entry(e).or_default().push(f);
                    }
                }
                for e in 0..complex.n_edges() {
                    let poly = dual_polygon(complex, &edge_faces[&e], e);
                    let ids: Vec<String> = poly
                        .iter()
                        .map(|c| match *c {
                            Corner::Tet(t) => t + 1,
                            Corner::Face(f) => nt + f + 1,
                            Corner::Edge(e) => nt + nf + e + 1,
                        })
                        .map(|i| i.to_string())
                        .collect();
                    writeln!(w, "f {}", ids.join(" "))?;
                }
            }
        }
        w.flush()
    })()
    .map_err(io)
}
