use super::RawMesh;

/// Renumbers nodes so that consecutive indices are spatially close.
///
/// Nodes are ordered lexicographically by `(x, y, z)`: z varies fastest,
/// then y, then x. Tet, face and edge records keep their order and are
/// re-indexed; coordinates are untouched.
pub fn sort_mesh(mesh: &RawMesh) -> RawMesh {
    let mut order: Vec<usize> = (0..mesh.nodes.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (&mesh.nodes[a], &mesh.nodes[b]);
        p.x.total_cmp(&q.x)
            .then(p.y.total_cmp(&q.y))
            .then(p.z.total_cmp(&q.z))
            .then(a.cmp(&b))
    });
    let mut new_index = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    let remap = |v: usize| new_index[v];

    RawMesh {
        nodes: order.iter().map(|&o| mesh.nodes[o]).collect(),
        tets: mesh.tets.iter().map(|t| t.map(remap)).collect(),
        tet_regions: mesh.tet_regions.clone(),
        faces: mesh
            .faces
            .iter()
            .map(|f| super::FaceRecord {
                nodes: f.nodes.map(remap),
                marker: f.marker,
            })
            .collect(),
        edges: mesh
            .edges
            .as_ref()
            .map(|es| es.iter().map(|e| e.map(remap)).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_io::generate_cube;

    #[test]
    fn generated_cube_is_already_sorted() {
        let m = generate_cube(3).unwrap();
        assert_eq!(sort_mesh(&m), m);
    }

    #[test]
    fn idempotent_and_volume_preserving() {
        let mut m = generate_cube(2).unwrap();
        // scramble: reverse node numbering
        let n = m.nodes.len();
        m.nodes.reverse();
        for t in &mut m.tets {
            *t = t.map(|v| n - 1 - v);
        }
        for f in &mut m.faces {
            f.nodes = f.nodes.map(|v| n - 1 - v);
        }
        let s = sort_mesh(&m);
        assert_eq!(sort_mesh(&s), s);
        assert!((s.total_volume() - m.total_volume()).abs() < 1e-12);
        assert_eq!(s, generate_cube(2).unwrap());
    }
}
