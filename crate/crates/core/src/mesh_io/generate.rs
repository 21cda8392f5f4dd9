use nalgebra::Point3;

use super::{FaceRecord, RawMesh};
use crate::error::{DecError, Result};

/// The six sides of the unit cube and their boundary markers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CubeSide {
    ZMin,
    ZMax,
    YMin,
    YMax,
    XMin,
    XMax,
}

impl CubeSide {
    pub const ALL: [CubeSide; 6] = [
        CubeSide::ZMin,
        CubeSide::ZMax,
        CubeSide::YMin,
        CubeSide::YMax,
        CubeSide::XMin,
        CubeSide::XMax,
    ];

    /// Marker written to boundary faces: 1 z=0, 2 z=1, 3 y=0, 4 y=1, 5 x=0, 6 x=1.
    pub fn marker(self) -> i32 {
        match self {
            CubeSide::ZMin => 1,
            CubeSide::ZMax => 2,
            CubeSide::YMin => 3,
            CubeSide::YMax => 4,
            CubeSide::XMin => 5,
            CubeSide::XMax => 6,
        }
    }

    pub fn from_marker(marker: i32) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.marker() == marker)
    }

    pub fn opposite(self) -> Self {
        match self {
            CubeSide::ZMin => CubeSide::ZMax,
            CubeSide::ZMax => CubeSide::ZMin,
            CubeSide::YMin => CubeSide::YMax,
            CubeSide::YMax => CubeSide::YMin,
            CubeSide::XMin => CubeSide::XMax,
            CubeSide::XMax => CubeSide::XMin,
        }
    }

    /// Axis index (0 = x) normal to this side.
    pub fn axis(self) -> usize {
        match self {
            CubeSide::XMin | CubeSide::XMax => 0,
            CubeSide::YMin | CubeSide::YMax => 1,
            CubeSide::ZMin | CubeSide::ZMax => 2,
        }
    }

    /// Coordinate of the side along its axis.
    pub fn level(self) -> f64 {
        match self {
            CubeSide::XMin | CubeSide::YMin | CubeSide::ZMin => 0.0,
            _ => 1.0,
        }
    }
}

/// Unit cube split into `n³` sub-cubes, each cut into the 6 Kuhn
/// tetrahedra sharing its main diagonal.
///
/// Nodes are numbered with z varying fastest, then y, then x. Every
/// sub-cube uses the same diagonal direction, so the tetrahedralization is
/// conforming. All tets of a sub-cube share one circumcenter, which leaves
/// the faces inside a sub-cube with zero-length dual edges.
pub fn generate_cube(n: usize) -> Result<RawMesh> {
    if n < 1 {
        return Err(DecError::InvalidArgument(format!(
            "cube subdivisions must be at least 1, got {n}"
        )));
    }
    let m = n + 1;
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize, k: usize| (i * m + j) * m + k;
    let coord = |i: usize| if i == n { 1.0 } else { i as f64 * h };

    let mut nodes = Vec::with_capacity(m * m * m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                nodes.push(Point3::new(coord(i), coord(j), coord(k)));
            }
        }
    }

    const AXIS_ORDERS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for order in AXIS_ORDERS {
                    let mut c = [i, j, k];
                    let mut t = [id(i, j, k); 4];
                    for (step, &axis) in order.iter().enumerate() {
                        c[axis] += 1;
                        t[step + 1] = id(c[0], c[1], c[2]);
                    }
                    tets.push(t);
                }
            }
        }
    }

    // Each boundary square is split along the diagonal from its lowest to
    // its highest corner, matching the Kuhn tets behind it.
    let mut faces = Vec::with_capacity(12 * n * n);
    for side in CubeSide::ALL {
        let axis = side.axis();
        let fixed = if side.level() == 0.0 { 0 } else { n };
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for u in 0..n {
            for v in 0..n {
                let mut lo = [0; 3];
                lo[axis] = fixed;
                lo[a] = u;
                lo[b] = v;
                let at = |da: usize, db: usize| {
                    let mut c = lo;
                    c[a] += da;
                    c[b] += db;
                    id(c[0], c[1], c[2])
                };
                let marker = side.marker();
                faces.push(FaceRecord {
                    nodes: [at(0, 0), at(1, 0), at(1, 1)],
                    marker,
                });
                faces.push(FaceRecord {
                    nodes: [at(0, 0), at(0, 1), at(1, 1)],
                    marker,
                });
            }
        }
    }

    Ok(RawMesh {
        nodes,
        tets,
        tet_regions: None,
        faces,
        edges: None,
    })
}

/// Unit cube meshed with the body-centred pattern: every sub-cube gets a
/// centre node, every boundary square a centre node, and each square face
/// of each sub-cube is coned to the sub-cube centre in four tets (`24n³`
/// tets in total).
///
/// Tets that straddle an interior square are merged pairwise into the
/// classic BCC tetrahedra spanning both sub-cube centres.
pub fn generate_bcc_cube(n: usize) -> Result<RawMesh> {
    if n < 1 {
        return Err(DecError::InvalidArgument(format!(
            "cube subdivisions must be at least 1, got {n}"
        )));
    }
    let base = generate_cube(n)?;
    let m = n + 1;
    let h = 1.0 / n as f64;
    let corner = |i: usize, j: usize, k: usize| (i * m + j) * m + k;
    let mut nodes = base.nodes;

    let centre_base = nodes.len();
    let centre = |i: usize, j: usize, k: usize| centre_base + (i * n + j) * n + k;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                nodes.push(Point3::new(
                    (i as f64 + 0.5) * h,
                    (j as f64 + 0.5) * h,
                    (k as f64 + 0.5) * h,
                ));
            }
        }
    }

    let mut tets = Vec::new();
    let mut faces = Vec::new();
    // squares perpendicular to `axis` at lattice level `l`, indexed by (u, v)
    for axis in 0..3 {
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for l in 0..=n {
            for u in 0..n {
                for v in 0..n {
                    let mut lo = [0; 3];
                    lo[axis] = l;
                    lo[a] = u;
                    lo[b] = v;
                    let at = |da: usize, db: usize| {
                        let mut c = lo;
                        c[a] += da;
                        c[b] += db;
                        corner(c[0], c[1], c[2])
                    };
                    let ring = [at(0, 0), at(1, 0), at(1, 1), at(0, 1)];
                    let cube_at = |off: isize| -> Option<usize> {
                        let lvl = l as isize + off;
                        if lvl < 0 || lvl >= n as isize {
                            return None;
                        }
                        let mut c = lo;
                        c[axis] = lvl as usize;
                        Some(centre(c[0], c[1], c[2]))
                    };
                    let below = cube_at(-1);
                    let above = cube_at(0);
                    match (below, above) {
                        (Some(c0), Some(c1)) => {
                            for e in 0..4 {
                                tets.push([c0, c1, ring[e], ring[(e + 1) % 4]]);
                            }
                        }
                        (Some(c), None) | (None, Some(c)) => {
                            let mut p = Point3::origin();
                            for &r in &ring {
                                p += nodes[r].coords * 0.25;
                            }
                            let s = nodes.len();
                            nodes.push(p);
                            let side = CubeSide::ALL
                                .into_iter()
                                .find(|sd| sd.axis() == axis && (sd.level() == 0.0) == (l == 0))
                                .expect("boundary square lies on a side");
                            for e in 0..4 {
                                let (p0, p1) = (ring[e], ring[(e + 1) % 4]);
                                tets.push([c, s, p0, p1]);
                                faces.push(FaceRecord {
                                    nodes: [s, p0, p1],
                                    marker: side.marker(),
                                });
                            }
                        }
                        (None, None) => unreachable!("n >= 1"),
                    }
                }
            }
        }
    }

    Ok(RawMesh {
        nodes,
        tets,
        tet_regions: None,
        faces,
        edges: None,
    })
}
