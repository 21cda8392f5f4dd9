mod common;

use std::fs;

use dec_core::mesh_io::{read_tetgen, sort_mesh, write_obj, write_tetgen, write_vtk, ObjKind};
use dec_core::{build_complex, whitney_vector, DualGeometry};
use vtkio::model::{Attribute, CellType, DataSet, ElementType, Piece, VertexNumbers};

use common::{kuhn, mesh_path, tetgen};

#[test]
fn tetgen_round_trip_both_bases() {
    let mesh = read_tetgen(mesh_path("cube_v100")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for base in [0, 1] {
        let prefix = dir.path().join(format!("copy{base}"));
        write_tetgen(&mesh, &prefix, base).unwrap();
        let first = fs::read_to_string(prefix.with_extension("node")).unwrap();
        let first_record = first
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .nth(1)
            .unwrap();
        assert!(first_record.starts_with(&base.to_string()), "{first_record}");
        assert_eq!(read_tetgen(&prefix).unwrap(), mesh);
    }
}

#[test]
fn one_based_fixture_matches_its_sorted_copy() {
    let mesh = read_tetgen(mesh_path("cube_a0p004")).unwrap();
    let sorted = sort_mesh(&mesh);
    let (a, b) = (build_complex(&mesh).unwrap(), build_complex(&sorted).unwrap());
    assert_eq!(a.n_tets(), b.n_tets());
    assert_eq!(a.boundary_faces().len(), b.boundary_faces().len());
    for m in 1..=6 {
        assert_eq!(a.faces_with_marker(m).len(), b.faces_with_marker(m).len());
    }
    let va = DualGeometry::new(&a).unwrap().total_volume();
    let vb = DualGeometry::new(&b).unwrap().total_volume();
    assert!((va - 1.0).abs() < 1e-12 && (vb - 1.0).abs() < 1e-12);
}

#[test]
fn vtk_reads_back_with_independent_parser() {
    let c = tetgen("cube_jl5");
    let temperature: Vec<f64> = (0..c.n_tets()).map(|t| t as f64 / 7.0).collect();
    let omega: Vec<f64> = (0..c.n_faces()).map(|f| (f % 5) as f64 - 2.0).collect();
    let flux = whitney_vector(&c, &omega).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.vtk");
    write_vtk(&path, &c, &temperature, Some(&flux)).unwrap();

    let vtk = vtkio::Vtk::import(&path).unwrap();
    let DataSet::UnstructuredGrid { pieces, .. } = vtk.data else {
        panic!("not an unstructured grid");
    };
    let Piece::Inline(piece) = &pieces[0] else {
        panic!("expected inline piece");
    };
    let points: Vec<f64> = piece.points.clone().cast_into().unwrap();
    assert_eq!(points.len(), 3 * c.n_nodes());
    for (p, q) in points.chunks(3).zip(&c.points) {
        assert_eq!([p[0], p[1], p[2]], [q.x, q.y, q.z]);
    }
    assert_eq!(piece.cells.types.len(), c.n_tets());
    assert!(piece.cells.types.iter().all(|&t| t == CellType::Tetra));
    let VertexNumbers::Legacy { num_cells, vertices } = &piece.cells.cell_verts else {
        panic!("expected legacy connectivity");
    };
    assert_eq!(*num_cells as usize, c.n_tets());
    for (t, cell) in vertices.chunks(5).enumerate() {
        assert_eq!(cell[0], 4);
        // positively oriented as written
        let v = [cell[1], cell[2], cell[3], cell[4]].map(|i| c.points[i as usize]);
        let vol = (v[1] - v[0]).cross(&(v[2] - v[0])).dot(&(v[3] - v[0]));
        assert!(vol > 0.0, "tet {t}");
    }

    let mut seen = 0;
    for attr in &piece.data.cell {
        let Attribute::DataArray(a) = attr else { continue };
        let values: Vec<f64> = a.data.clone().cast_into().unwrap();
        match (a.name.as_str(), &a.elem) {
            ("temperature", ElementType::Scalars { .. }) => {
                assert_eq!(values, temperature);
                seen += 1;
            }
            ("flux", ElementType::Vectors) => {
                for (v, q) in values.chunks(3).zip(&flux) {
                    assert_eq!([v[0], v[1], v[2]], [q.x, q.y, q.z]);
                }
                seen += 1;
            }
            _ => {}
        }
    }
    assert_eq!(seen, 2);
}

#[test]
fn vtk_rejects_wrong_field_length() {
    let c = kuhn(1);
    let dir = tempfile::tempdir().unwrap();
    assert!(write_vtk(dir.path().join("x.vtk"), &c, &[0.0], None).is_err());
}

#[test]
fn obj_element_counts() {
    let c = kuhn(2);
    let g = DualGeometry::new(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let count = |text: &str, tag: &str| text.lines().filter(|l| l.starts_with(tag)).count();

    let primal = dir.path().join("primal.obj");
    write_obj(&primal, &c, &g, ObjKind::Primal).unwrap();
    let text = fs::read_to_string(&primal).unwrap();
    assert_eq!(count(&text, "v "), c.n_nodes());
    assert_eq!(count(&text, "f "), c.n_faces());

    let dual = dir.path().join("dual.obj");
    write_obj(&dual, &c, &g, ObjKind::Dual).unwrap();
    let text = fs::read_to_string(&dual).unwrap();
    assert_eq!(count(&text, "f "), c.n_edges());
    let n_vertices = count(&text, "v ");
    for line in text.lines().filter(|l| l.starts_with("f ")) {
        let idx: Vec<usize> = line[2..].split_whitespace().map(|s| s.parse().unwrap()).collect();
        assert!(idx.len() >= 3);
        assert!(idx.iter().all(|&i| (1..=n_vertices).contains(&i)));
    }
}
