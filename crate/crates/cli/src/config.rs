//! Run configuration: a TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use dec_core::crack_sim::{CrackMode, Selection};
use dec_core::mesh_io::{BoundaryKind, BoundaryTags, CubeSide};
use dec_core::{SolverConfig, DEFAULT_LIMITER};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DECSIM_OUT_DIR";
pub const FALLBACK_OUT_DIR: &str = "decsim-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerKind {
    Dirichlet,
    Neumann,
}

/// One `[[boundary]]` table: a face marker and its condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkerSpec {
    pub marker: i32,
    pub kind: MarkerKind,
    /// Temperature for Dirichlet markers, outward flux density for Neumann.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrackParams {
    pub mode: CrackMode,
    /// Monte Carlo paths in stochastic mode.
    pub paths: usize,
    /// Seed of the first path; path `i` uses `seed + i`.
    pub seed: u64,
    pub stop_fraction: f64,
    pub selection: Selection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_cracks: Option<usize>,
    /// Re-solve and write VTK snapshots at fixed shares of the final crack
    /// count (first path only in stochastic mode).
    pub snapshots: bool,
}

impl Default for CrackParams {
    fn default() -> Self {
        Self {
            mode: CrackMode::Deterministic,
            paths: 1,
            seed: 0,
            stop_fraction: 1e-6,
            selection: Selection::Density,
            max_cracks: None,
            snapshots: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// TetGen file prefix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    /// Built-in Kuhn cube with `n³` sub-cubes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cube_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub ranks: usize,
    pub kappa: f64,
    /// Per-face conductivities in the complex's face order (solve only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_file: Option<PathBuf>,
    pub limiter: f64,
    /// Dirichlet marker whose flux is reported as the effective conductivity.
    pub flux_marker: i32,
    /// Mesh prefixes of a convergence study, coarsest first.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<PathBuf>,
    /// Empty means the unit-cube experiment: T = 1 on z = 1, T = 0 on
    /// z = 0, the other sides insulated.
    pub boundary: Vec<MarkerSpec>,
    pub solver: SolverConfig,
    pub crack: CrackParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mesh: None,
            cube_n: None,
            out: None,
            ranks: 1,
            kappa: 1.0,
            kappa_file: None,
            limiter: DEFAULT_LIMITER,
            flux_marker: CubeSide::ZMax.marker(),
            levels: Vec::new(),
            boundary: Vec::new(),
            solver: SolverConfig::default(),
            crack: CrackParams::default(),
        }
    }
}

pub enum MeshSource<'a> {
    TetGen(&'a Path),
    Cube(usize),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Writes `config.toml` into the output directory.
    pub fn echo(&self, out: &Path) -> Result<(), Failure> {
        let path = out.join("config.toml");
        std::fs::write(&path, self.to_toml()).map_err(|e| Failure::output(&path, e))
    }

    /// Replaces an empty boundary list by the default experiment so the
    /// echoed configuration is explicit.
    pub fn resolve_boundary(&mut self) {
        if self.boundary.is_empty() {
            self.boundary = BoundaryTags::cube_experiment(CubeSide::ZMax, 1.0, 0.0)
                .iter()
                .map(|(marker, kind)| match kind {
                    BoundaryKind::Dirichlet(value) => MarkerSpec {
                        marker,
                        kind: MarkerKind::Dirichlet,
                        value,
                    },
                    BoundaryKind::Neumann(value) => MarkerSpec {
                        marker,
                        kind: MarkerKind::Neumann,
                        value,
                    },
                    BoundaryKind::Interior => unreachable!("cube experiment has no interior marker"),
                })
                .collect();
        }
    }

    pub fn tags(&self) -> Result<BoundaryTags, Failure> {
        let mut tags = BoundaryTags::new();
        for m in &self.boundary {
            let kind = match m.kind {
                MarkerKind::Dirichlet => BoundaryKind::Dirichlet(m.value),
                MarkerKind::Neumann => BoundaryKind::Neumann(m.value),
            };
            tags.insert(m.marker, kind)?;
        }
        Ok(tags)
    }

    pub fn mesh_source(&self) -> Result<MeshSource<'_>, Failure> {
        match (&self.mesh, self.cube_n) {
            (Some(p), None) => Ok(MeshSource::TetGen(p)),
            (None, Some(n)) => Ok(MeshSource::Cube(n)),
            (Some(_), Some(_)) => Err(Failure::Config("give either a mesh prefix or a cube size, not both".into())),
            (None, None) => Err(Failure::Config("no mesh given (use --mesh or --cube-n)".into())),
        }
    }

    /// Output directory: the configured one, then the environment
    /// variable, then a fixed fallback.
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.ranks < 1 {
            return Err(Failure::Config("ranks must be at least 1".into()));
        }
        if !(self.kappa > 0.0) {
            return Err(Failure::Config("kappa must be positive".into()));
        }
        if !(self.limiter > 0.0) {
            return Err(Failure::Config("limiter must be positive".into()));
        }
        if !matches!(
            self.boundary.iter().find(|m| m.marker == self.flux_marker),
            Some(MarkerSpec {
                kind: MarkerKind::Dirichlet,
                ..
            })
        ) {
            return Err(Failure::Config(format!(
                "flux marker {} is not a Dirichlet marker",
                self.flux_marker
            )));
        }
        self.solver.validate()?;
        Ok(())
    }
}
