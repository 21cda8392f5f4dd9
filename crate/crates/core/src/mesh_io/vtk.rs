use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::complex::SimplicialComplex;
use crate::error::{DecError, Result};

const VTK_TETRA: u8 = 10;

/// Writes a legacy ASCII unstructured grid with the tets as cells, the
/// cell scalar `temperature` and, when given, the cell vector `flux`.
pub fn write_vtk(
    path: impl AsRef<Path>,
    complex: &SimplicialComplex,
    temperature: &[f64],
    flux: Option<&[Vector3<f64>]>,
) -> Result<()> {
    let path = path.as_ref();
    let nt = complex.n_tets();
    if temperature.len() != nt || flux.is_some_and(|f| f.len() != nt) {
        return Err(DecError::InvalidArgument(format!(
            "cell fields must have one value per tet ({nt})"
        )));
    }
    let io = |e| DecError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    (|| -> std::io::Result<()> {
        writeln!(w, "# vtk DataFile Version 2.0")?;
        writeln!(w, "temperature and flux per tetrahedron")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", complex.n_nodes())?;
        for p in &complex.points {
            writeln!(w, "{:?} {:?} {:?}", p.x, p.y, p.z)?;
        }
        writeln!(w, "CELLS {} {}", nt, 5 * nt)?;
        for t in 0..nt {
            let v = complex.oriented_tet(t);
            writeln!(w, "4 {} {} {} {}", v[0], v[1], v[2], v[3])?;
        }
        writeln!(w, "CELL_TYPES {nt}")?;
        for _ in 0..nt {
            writeln!(w, "{VTK_TETRA}")?;
        }
        writeln!(w, "CELL_DATA {nt}")?;
        writeln!(w, "SCALARS temperature double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for a in temperature {
            writeln!(w, "{a:?}")?;
        }
        if let Some(flux) = flux {
            writeln!(w, "VECTORS flux double")?;
            for q in flux {
                writeln!(w, "{:?} {:?} {:?}", q.x, q.y, q.z)?;
            }
        }
        w.flush()
    })()
    .map_err(io)
}
