//! TetGen `.node` / `.ele` / `.face` / `.edge` text formats.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Point3;

use super::{FaceRecord, RawMesh};
use crate::error::{DecError, Result};

/// Whitespace tokens of every non-empty, non-comment line, with line numbers.
struct Records {
    path: PathBuf,
    lines: Vec<(usize, Vec<String>)>,
}

impl Records {
    fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| DecError::io(path, e))?;
        let lines = text
            .lines()
            .enumerate()
            .filter_map(|(i, line)| {
                let body = line.split('#').next().unwrap_or("");
                let tokens: Vec<String> = body.split_whitespace().map(str::to_owned).collect();
                (!tokens.is_empty()).then_some((i + 1, tokens))
            })
            .collect();
        Ok(Self {
            path: path.to_owned(),
            lines,
        })
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> DecError {
        DecError::parse(&self.path, line, msg)
    }

    fn header(&self) -> Result<(usize, &[String])> {
        self.lines
            .first()
            .map(|(l, t)| (*l, t.as_slice()))
            .ok_or_else(|| self.err(0, "empty file"))
    }

    /// Parses the header count and checks the body holds exactly that many records.
    fn body(&self, count: usize) -> Result<&[(usize, Vec<String>)]> {
        let body = &self.lines[1..];
        if body.len() != count {
            let line = body.last().map_or(self.lines[0].0, |(l, _)| *l);
            return Err(self.err(
                line,
                format!("header announces {count} records, found {}", body.len()),
            ));
        }
        Ok(body)
    }

    fn int(&self, line: usize, tok: &str) -> Result<i64> {
        tok.parse()
            .map_err(|_| self.err(line, format!("expected integer, got {tok:?}")))
    }

    fn real(&self, line: usize, tok: &str) -> Result<f64> {
        tok.parse()
            .map_err(|_| self.err(line, format!("expected number, got {tok:?}")))
    }

    fn header_field(&self, idx: usize, default: i64) -> Result<i64> {
        let (line, h) = self.header()?;
        match h.get(idx) {
            Some(tok) => self.int(line, tok),
            None => Ok(default),
        }
    }
}

/// Record-index bookkeeping: detects 0/1 base from the first record and
/// rejects duplicates and out-of-range indices.
struct IndexTracker {
    base: i64,
    seen: Vec<bool>,
}

impl IndexTracker {
    fn new(first: i64, count: usize) -> Self {
        Self {
            base: if first == 0 { 0 } else { 1 },
            seen: vec![false; count],
        }
    }

    fn slot(&mut self, recs: &Records, line: usize, raw: i64) -> Result<usize> {
        let idx = raw - self.base;
        if idx < 0 || idx as usize >= self.seen.len() {
            return Err(recs.err(line, format!("record index {raw} out of range")));
        }
        let idx = idx as usize;
        if std::mem::replace(&mut self.seen[idx], true) {
            return Err(recs.err(line, format!("duplicate record index {raw}")));
        }
        Ok(idx)
    }
}

fn node_ref(recs: &Records, line: usize, tok: &str, base: i64, n_nodes: usize) -> Result<usize> {
    let raw = recs.int(line, tok)?;
    let idx = raw - base;
    if idx < 0 || idx as usize >= n_nodes {
        return Err(recs.err(line, format!("dangling node reference {raw}")));
    }
    Ok(idx as usize)
}

/// Reads a mesh from explicit `.node`, `.ele` and `.face` paths.
///
/// Indexing base (0 or 1) is taken from the first `.node` record and applied
/// to every node reference. A sibling `.edge` file is read when present.
pub fn parse_tetgen(node_path: &Path, ele_path: &Path, face_path: &Path) -> Result<RawMesh> {
    // nodes
    let recs = Records::read(node_path)?;
    let (hline, _) = recs.header()?;
    let n_nodes = usize::try_from(recs.header_field(0, 0)?)
        .map_err(|_| recs.err(hline, "negative node count"))?;
    let dim = recs.header_field(1, 3)?;
    if dim != 3 {
        return Err(recs.err(hline, format!("expected dimension 3, got {dim}")));
    }
    let n_attr = recs.header_field(2, 0)? as usize;
    let has_marker = recs.header_field(3, 0)? != 0;
    let body = recs.body(n_nodes)?;
    let first = match body.first() {
        Some((l, t)) => recs.int(*l, &t[0])?,
        None => 0,
    };
    let mut tracker = IndexTracker::new(first, n_nodes);
    let base = tracker.base;
    let mut nodes = vec![Point3::origin(); n_nodes];
    for (line, tok) in body {
        let want = 4 + n_attr + usize::from(has_marker);
        if tok.len() < want {
            return Err(recs.err(*line, format!("expected {want} fields, got {}", tok.len())));
        }
        let idx = tracker.slot(&recs, *line, recs.int(*line, &tok[0])?)?;
        nodes[idx] = Point3::new(
            recs.real(*line, &tok[1])?,
            recs.real(*line, &tok[2])?,
            recs.real(*line, &tok[3])?,
        );
    }

    // tetrahedra
    let recs = Records::read(ele_path)?;
    let (hline, _) = recs.header()?;
    let n_tets = usize::try_from(recs.header_field(0, 0)?)
        .map_err(|_| recs.err(hline, "negative tet count"))?;
    let per_tet = recs.header_field(1, 4)? as usize;
    if per_tet != 4 && per_tet != 10 {
        return Err(recs.err(hline, format!("unsupported nodes per tet {per_tet}")));
    }
    let n_attr = recs.header_field(2, 0)? as usize;
    let body = recs.body(n_tets)?;
    let mut tracker = IndexTracker::new(base, n_tets);
    let mut tets = vec![[0usize; 4]; n_tets];
    let mut regions = (n_attr > 0).then(|| vec![0.0; n_tets]);
    for (line, tok) in body {
        let want = 1 + per_tet + n_attr;
        if tok.len() < want {
            return Err(recs.err(*line, format!("expected {want} fields, got {}", tok.len())));
        }
        let idx = tracker.slot(&recs, *line, recs.int(*line, &tok[0])?)?;
        let mut t = [0usize; 4];
        for (k, v) in t.iter_mut().enumerate() {
            *v = node_ref(&recs, *line, &tok[1 + k], base, n_nodes)?;
        }
        let mut s = t;
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) {
            return Err(recs.err(*line, "tetrahedron with repeated vertices"));
        }
        tets[idx] = t;
        if let Some(r) = regions.as_mut() {
            r[idx] = recs.real(*line, &tok[1 + per_tet])?;
        }
    }

    // boundary faces
    let recs = Records::read(face_path)?;
    let (hline, _) = recs.header()?;
    let n_faces = usize::try_from(recs.header_field(0, 0)?)
        .map_err(|_| recs.err(hline, "negative face count"))?;
    let has_marker = recs.header_field(1, 0)? != 0;
    let body = recs.body(n_faces)?;
    let mut tracker = IndexTracker::new(base, n_faces);
    let mut faces = vec![
        FaceRecord {
            nodes: [0; 3],
            marker: 0
        };
        n_faces
    ];
    for (line, tok) in body {
        let want = 4 + usize::from(has_marker);
        if tok.len() < want {
            return Err(recs.err(*line, format!("expected {want} fields, got {}", tok.len())));
        }
        let idx = tracker.slot(&recs, *line, recs.int(*line, &tok[0])?)?;
        let mut f = [0usize; 3];
        for (k, v) in f.iter_mut().enumerate() {
            *v = node_ref(&recs, *line, &tok[1 + k], base, n_nodes)?;
        }
        let marker = if has_marker {
            recs.int(*line, &tok[4])? as i32
        } else {
            0
        };
        faces[idx] = FaceRecord { nodes: f, marker };
    }

    // optional edges
    let edge_path = node_path.with_extension("edge");
    let edges = if edge_path.exists() {
        let recs = Records::read(&edge_path)?;
        let (hline, _) = recs.header()?;
        let n_edges = usize::try_from(recs.header_field(0, 0)?)
            .map_err(|_| recs.err(hline, "negative edge count"))?;
        let body = recs.body(n_edges)?;
        let mut tracker = IndexTracker::new(base, n_edges);
        let mut edges = vec![[0usize; 2]; n_edges];
        for (line, tok) in body {
            if tok.len() < 3 {
                return Err(recs.err(*line, "expected at least 3 fields"));
            }
            let idx = tracker.slot(&recs, *line, recs.int(*line, &tok[0])?)?;
            edges[idx] = [
                node_ref(&recs, *line, &tok[1], base, n_nodes)?,
                node_ref(&recs, *line, &tok[2], base, n_nodes)?,
            ];
        }
        Some(edges)
    } else {
        None
    };

    let mesh = RawMesh {
        nodes,
        tets,
        tet_regions: regions,
        faces,
        edges,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Reads `<prefix>.node`, `<prefix>.ele` and `<prefix>.face`.
pub fn read_tetgen(prefix: impl AsRef<Path>) -> Result<RawMesh> {
    let prefix = prefix.as_ref();
    let with = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    };
    parse_tetgen(&with("node"), &with("ele"), &with("face"))
}

/// Writes the mesh as TetGen files `<prefix>.{node,ele,face}` (and `.edge`
/// when the mesh has edges) using indices starting at `first_index`.
///
/// Coordinates use the shortest representation that parses back to the
/// same `f64`, so writing then reading is lossless.
pub fn write_tetgen(mesh: &RawMesh, prefix: impl AsRef<Path>, first_index: usize) -> Result<()> {
    let prefix = prefix.as_ref();
    let with = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    };
    let b = first_index;

    let mut out = String::new();
    writeln!(out, "{} 3 0 0", mesh.nodes.len()).unwrap();
    for (i, p) in mesh.nodes.iter().enumerate() {
        writeln!(out, "{} {:?} {:?} {:?}", i + b, p.x, p.y, p.z).unwrap();
    }
    let path = with("node");
    fs::write(&path, out).map_err(|e| DecError::io(&path, e))?;

    let mut out = String::new();
    let n_attr = usize::from(mesh.tet_regions.is_some());
    writeln!(out, "{} 4 {}", mesh.tets.len(), n_attr).unwrap();
    for (i, t) in mesh.tets.iter().enumerate() {
        write!(out, "{} {} {} {} {}", i + b, t[0] + b, t[1] + b, t[2] + b, t[3] + b).unwrap();
        if let Some(r) = &mesh.tet_regions {
            write!(out, " {:?}", r[i]).unwrap();
        }
        out.push('\n');
    }
    let path = with("ele");
    fs::write(&path, out).map_err(|e| DecError::io(&path, e))?;

    let mut out = String::new();
    writeln!(out, "{} 1", mesh.faces.len()).unwrap();
    for (i, f) in mesh.faces.iter().enumerate() {
        let [x, y, z] = f.nodes;
        writeln!(out, "{} {} {} {} {}", i + b, x + b, y + b, z + b, f.marker).unwrap();
    }
    let path = with("face");
    fs::write(&path, out).map_err(|e| DecError::io(&path, e))?;

    let edge_path = with("edge");
    if let Some(edges) = &mesh.edges {
        let mut out = String::new();
        writeln!(out, "{} 0", edges.len()).unwrap();
        for (i, e) in edges.iter().enumerate() {
            writeln!(out, "{} {} {}", i + b, e[0] + b, e[1] + b).unwrap();
        }
        fs::write(&edge_path, out).map_err(|e| DecError::io(&edge_path, e))?;
    } else if edge_path.exists() {
        // a stale edge file would be picked up on the next read
        fs::remove_file(&edge_path).map_err(|e| DecError::io(&edge_path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_files(dir: &Path, node: &str, ele: &str, face: &str) -> PathBuf {
        let prefix = dir.join("m");
        fs::write(prefix.with_extension("node"), node).unwrap();
        fs::write(prefix.with_extension("ele"), ele).unwrap();
        fs::write(prefix.with_extension("face"), face).unwrap();
        prefix
    }

    fn tmpdir(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("dec-tetgen-{name}-{}", std::process::id()));
        fs::create_dir_all(&d).unwrap();
        d
    }

    const NODE1: &str = "# one tet\n4 3 0 0\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n";
    const ELE1: &str = "1 4 0\n1 1 2 3 4\n";
    const FACE1: &str = "4 1\n1 2 3 4 1\n2 1 3 4 1\n3 1 2 4 1\n4 1 2 3 1\n";

    #[test]
    fn single_tet_one_based() {
        let d = tmpdir("one");
        let p = write_files(&d, NODE1, ELE1, FACE1);
        let m = read_tetgen(&p).unwrap();
        assert_eq!(m.nodes.len(), 4);
        assert_eq!(m.tets, vec![[0, 1, 2, 3]]);
        assert_eq!(m.faces.len(), 4);
        assert!(m.faces.iter().all(|f| f.marker == 1));
        assert!(m.edges.is_none());
    }

    #[test]
    fn zero_based_detected() {
        let d = tmpdir("zero");
        let p = write_files(
            &d,
            "4 3 0 0\n0 0 0 0\n1 1 0 0\n2 0 1 0\n3 0 0 1\n",
            "1 4 0\n0 0 1 2 3\n",
            "1 1\n0 0 1 2 5 # trailing comment\n",
        );
        let m = read_tetgen(&p).unwrap();
        assert_eq!(m.tets, vec![[0, 1, 2, 3]]);
        assert_eq!(m.faces[0].marker, 5);
    }

    #[test]
    fn count_mismatch_rejected() {
        let d = tmpdir("count");
        let p = write_files(&d, NODE1, "2 4 0\n1 1 2 3 4\n", FACE1);
        assert!(matches!(read_tetgen(&p), Err(DecError::Parse { .. })));
    }

    #[test]
    fn dangling_reference_rejected() {
        let d = tmpdir("dangle");
        let p = write_files(&d, NODE1, "1 4 0\n1 1 2 3 9\n", FACE1);
        let err = read_tetgen(&p).unwrap_err().to_string();
        assert!(err.contains("dangling"), "{err}");
    }

    #[test]
    fn duplicate_index_rejected() {
        let d = tmpdir("dup");
        let p = write_files(
            &d,
            "4 3 0 0\n1 0 0 0\n1 1 0 0\n3 0 1 0\n4 0 0 1\n",
            ELE1,
            FACE1,
        );
        let err = read_tetgen(&p).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn repeated_vertex_rejected() {
        let d = tmpdir("rep");
        let p = write_files(&d, NODE1, "1 4 0\n1 1 2 2 4\n", FACE1);
        assert!(read_tetgen(&p).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let d = tmpdir("missing");
        let r = read_tetgen(d.join("nope"));
        assert!(matches!(r, Err(DecError::Io { .. })));
    }

    #[test]
    fn region_attribute_and_edges() {
        let d = tmpdir("attr");
        let p = write_files(&d, NODE1, "1 4 1\n1 1 2 3 4 7.5\n", FACE1);
        fs::write(p.with_extension("edge"), "1 0\n1 1 2\n").unwrap();
        let m = read_tetgen(&p).unwrap();
        assert_eq!(m.tet_regions, Some(vec![7.5]));
        assert_eq!(m.edges, Some(vec![[0, 1]]));
    }
}
