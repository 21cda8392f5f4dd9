//! Mesh input and output.
//!
//! Meshes enter the library as a [`RawMesh`]: plain node coordinates,
//! tetrahedra and marked boundary triangles with 0-based indices. They come
//! from TetGen files ([`parse_tetgen`]) or the built-in structured
//! generators ([`generate_cube`], [`generate_bcc_cube`]). Results leave as
//! legacy VTK, Wavefront OBJ or CSV.

mod csv;
mod generate;
mod obj;
mod sort;
mod tetgen;
mod vtk;

use std::collections::BTreeMap;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{DecError, Result};

pub use self::csv::{write_csv_history, write_monte_carlo_csv};
pub use self::generate::{generate_bcc_cube, generate_cube, CubeSide};
pub use self::obj::{write_obj, ObjKind};
pub use self::sort::sort_mesh;
pub use self::tetgen::{parse_tetgen, read_tetgen, write_tetgen};
pub use self::vtk::write_vtk;

/// A triangle record from a `.face` file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceRecord {
    pub nodes: [usize; 3],
    /// TetGen boundary marker; 0 marks an interior face.
    pub marker: i32,
}

/// Unprocessed tetrahedral mesh with 0-based indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawMesh {
    pub nodes: Vec<Point3<f64>>,
    pub tets: Vec<[usize; 4]>,
    /// Region attribute per tet, present when the `.ele` file carries one.
    pub tet_regions: Option<Vec<f64>>,
    pub faces: Vec<FaceRecord>,
    pub edges: Option<Vec<[usize; 2]>>,
}

impl RawMesh {
    /// Checks the index invariants: every referenced node exists and no
    /// tet or face repeats a vertex.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (i, t) in self.tets.iter().enumerate() {
            if let Some(&v) = t.iter().find(|&&v| v >= n) {
                return Err(DecError::Mesh(format!("tet {i} references missing node {v}")));
            }
            let mut s = *t;
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(DecError::Mesh(format!("tet {i} has repeated vertices {t:?}")));
            }
        }
        for (i, f) in self.faces.iter().enumerate() {
            if let Some(&v) = f.nodes.iter().find(|&&v| v >= n) {
                return Err(DecError::Mesh(format!("face {i} references missing node {v}")));
            }
            let mut s = f.nodes;
            s.sort_unstable();
            if s[0] == s[1] || s[1] == s[2] {
                return Err(DecError::Mesh(format!("face {i} has repeated vertices")));
            }
        }
        if let (Some(regions), tets) = (&self.tet_regions, &self.tets) {
            if regions.len() != tets.len() {
                return Err(DecError::Mesh("region attribute count differs from tet count".into()));
            }
        }
        if let Some(edges) = &self.edges {
            for (i, e) in edges.iter().enumerate() {
                if e[0] >= n || e[1] >= n || e[0] == e[1] {
                    return Err(DecError::Mesh(format!("edge {i} is invalid: {e:?}")));
                }
            }
        }
        Ok(())
    }

    /// Sum of absolute tet volumes.
    pub fn total_volume(&self) -> f64 {
        self.tets.iter().map(|t| self.tet_volume(t).abs()).sum()
    }

    /// Signed volume of a tet given by node indices.
    pub fn tet_volume(&self, t: &[usize; 4]) -> f64 {
        let p = |i: usize| self.nodes[t[i]];
        let a = p(1) - p(0);
        let b = p(2) - p(0);
        let c = p(3) - p(0);
        a.cross(&b).dot(&c) / 6.0
    }
}

/// What a boundary marker means for the heat problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum BoundaryKind {
    /// Prescribed temperature.
    Dirichlet(f64),
    /// Prescribed outward flux density.
    Neumann(f64),
    Interior,
}

/// Mapping from boundary marker to boundary condition.
///
/// Each marker maps to exactly one kind, so the Dirichlet and Neumann
/// marker sets are disjoint by construction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTags {
    map: BTreeMap<i32, BoundaryKind>,
}

impl BoundaryTags {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `marker`. Re-registering a marker with a different kind is
    /// an error.
    pub fn insert(&mut self, marker: i32, kind: BoundaryKind) -> Result<()> {
        if marker == 0 && kind != BoundaryKind::Interior {
            return Err(DecError::Boundary("marker 0 is reserved for interior faces".into()));
        }
        match self.map.get(&marker) {
            Some(existing) if *existing != kind => Err(DecError::Boundary(format!(
                "marker {marker} already mapped to {existing:?}"
            ))),
            _ => {
                self.map.insert(marker, kind);
                Ok(())
            }
        }
    }

    pub fn with(mut self, marker: i32, kind: BoundaryKind) -> Result<Self> {
        self.insert(marker, kind)?;
        Ok(self)
    }

    pub fn get(&self, marker: i32) -> Option<BoundaryKind> {
        if marker == 0 {
            return Some(BoundaryKind::Interior);
        }
        self.map.get(&marker).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, BoundaryKind)> + '_ {
        self.map.iter().map(|(&m, &k)| (m, k))
    }

    pub fn dirichlet_markers(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.iter().filter_map(|(m, k)| match k {
            BoundaryKind::Dirichlet(v) => Some((m, v)),
            _ => None,
        })
    }

    pub fn neumann_markers(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.iter().filter_map(|(m, k)| match k {
            BoundaryKind::Neumann(v) => Some((m, v)),
            _ => None,
        })
    }

    /// The standard unit-cube experiment: temperature `hot` on side
    /// `hot_side`, `cold` on the opposite side, the four remaining sides
    /// insulated.
    pub fn cube_experiment(hot_side: CubeSide, hot: f64, cold: f64) -> Self {
        let mut tags = Self::new();
        let cold_side = hot_side.opposite();
        for side in CubeSide::ALL {
            let kind = if side == hot_side {
                BoundaryKind::Dirichlet(hot)
            } else if side == cold_side {
                BoundaryKind::Dirichlet(cold)
            } else {
                BoundaryKind::Neumann(0.0)
            };
            tags.map.insert(side.marker(), kind);
        }
        tags
    }
}
