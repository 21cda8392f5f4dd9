//! Crack populations growing one face at a time.
//!
//! Starting from the pristine unit-cube experiment, each step solves the
//! system, records the effective conductivity and insulates one more
//! interior face: the one with the largest flux density (deterministic
//! mode) or a uniformly random one (stochastic mode). A run stops once the
//! effective conductivity has dropped to `stop_fraction · κ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{apply_boundary_conditions, assemble, Conductivity, SaddleSystem};
use crate::complex::{non_boundary_faces, SimplicialComplex};
use crate::error::{DecError, Result};
use crate::geometry::{hodge_star, DualGeometry, DEFAULT_LIMITER};
use crate::mesh_io::{BoundaryKind, BoundaryTags, CubeSide};
use crate::solver::{solve_with_guess, Solution, SolverConfig};

/// Identifier of the random generator, recorded in CSV headers.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Crack fractions rendered as snapshots: the first crack, then shares of
/// the final crack count.
pub const DEFAULT_SNAPSHOT_FRACTIONS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 1.0];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrackMode {
    #[default]
    Deterministic,
    Stochastic,
}

impl CrackMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CrackMode::Deterministic => "deterministic",
            CrackMode::Stochastic => "stochastic",
        }
    }
}

impl std::str::FromStr for CrackMode {
    type Err = DecError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic" => Ok(Self::Deterministic),
            "stochastic" => Ok(Self::Stochastic),
            _ => Err(DecError::InvalidArgument(format!("unknown crack mode {s:?}"))),
        }
    }
}

/// How the deterministic mode ranks faces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// `|ω_f| / area_f`.
    #[default]
    Density,
    /// `|ω_f|`.
    Raw,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub tags: BoundaryTags,
    /// Dirichlet marker whose total flux is the effective conductivity.
    pub flux_marker: i32,
    pub kappa: f64,
    /// Runs stop when `κ_e ≤ stop_fraction · κ`.
    pub stop_fraction: f64,
    pub selection: Selection,
    pub solver: SolverConfig,
    pub limiter: f64,
    /// Optional cap on the number of cracks per run.
    pub max_cracks: Option<usize>,
}

impl ExperimentConfig {
    /// Temperature 1 on `hot_side`, 0 on the opposite side, the other
    /// sides insulated, uniform conductivity `kappa`.
    pub fn unit_cube(hot_side: CubeSide, kappa: f64) -> Self {
        Self {
            tags: BoundaryTags::cube_experiment(hot_side, 1.0, 0.0),
            flux_marker: hot_side.marker(),
            kappa,
            stop_fraction: 1e-6,
            selection: Selection::Density,
            solver: SolverConfig::default(),
            limiter: DEFAULT_LIMITER,
            max_cracks: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.tags.get(self.flux_marker), Some(BoundaryKind::Dirichlet(_))) {
            return Err(DecError::InvalidArgument(format!(
                "flux marker {} is not a Dirichlet marker",
                self.flux_marker
            )));
        }
        if !(self.kappa > 0.0) {
            return Err(DecError::InvalidArgument("kappa must be positive".into()));
        }
        if !(self.stop_fraction >= 0.0) {
            return Err(DecError::InvalidArgument("stop fraction must be non-negative".into()));
        }
        self.solver.validate()
    }
}

/// History of one cracking run.
#[derive(Clone, Debug, PartialEq)]
pub struct CrackState {
    pub mode: CrackMode,
    /// Cracked faces in insertion order.
    pub cracked: Vec<usize>,
    /// κ_e before the first crack and after every crack that was solved.
    pub kappa_e_history: Vec<f64>,
    /// Number of interior (crackable) faces.
    pub n_interior: usize,
    pub rng_seed: Option<u64>,
    /// True when κ_e fell below the stopping threshold.
    pub terminated: bool,
    /// Outer solver iterations per solve.
    pub iterations: Vec<usize>,
    /// Set when a solve failed; the history stops there.
    pub failure: Option<String>,
}

impl CrackState {
    fn new(mode: CrackMode, n_interior: usize, rng_seed: Option<u64>) -> Self {
        Self {
            mode,
            cracked: Vec::new(),
            kappa_e_history: Vec::new(),
            n_interior,
            rng_seed,
            terminated: false,
            iterations: Vec::new(),
            failure: None,
        }
    }

    /// Damage parameter after `k` cracks.
    pub fn damage_at(&self, k: usize) -> f64 {
        k as f64 / self.n_interior as f64
    }

    /// Current damage parameter.
    pub fn d_n(&self) -> f64 {
        self.damage_at(self.cracked.len())
    }

    /// κ_e at the last solved step.
    pub fn final_kappa_e(&self) -> Option<f64> {
        self.kappa_e_history.last().copied()
    }

    /// Linear interpolation of κ_e at damage `d` along the history.
    pub fn kappa_e_at(&self, d: f64) -> Option<f64> {
        let h = &self.kappa_e_history;
        let x = d * self.n_interior as f64;
        if h.is_empty() || x < 0.0 || x > (h.len() - 1) as f64 {
            return None;
        }
        let k = (x.floor() as usize).min(h.len() - 1);
        if k + 1 >= h.len() {
            return Some(h[k]);
        }
        let w = x - k as f64;
        Some(h[k] * (1.0 - w) + h[k + 1] * w)
    }
}

/// `|Σ_{f on side} s_f ω_f|`: total heat through the faces carrying
/// `marker`, with `s_f` the face's incidence sign in its tet.
pub fn effective_conductivity(solution: &Solution, complex: &SimplicialComplex, marker: i32) -> Result<f64> {
    let faces: Vec<usize> = complex
        .faces_with_marker(marker)
        .into_iter()
        .filter(|&f| complex.is_boundary_face(f))
        .collect();
    if faces.is_empty() {
        return Err(DecError::InvalidArgument(format!("no boundary face carries marker {marker}")));
    }
    let terms: Vec<f64> = faces
        .iter()
        .map(|&f| complex.face_tets[f].first.1 as f64 * solution.omega[f])
        .collect();
    Ok(crate::solver::exact::sum(&terms).abs())
}

/// The interior, uncracked face with the largest flux (density), lowest
/// index on ties.
pub fn max_flux_face(
    solution: &Solution,
    complex: &SimplicialComplex,
    geometry: &DualGeometry,
    conductivity: &Conductivity,
    selection: Selection,
) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for f in 0..complex.n_faces() {
        if complex.is_boundary_face(f) || conductivity.is_cracked(f) {
            continue;
        }
        let w = solution.omega[f].abs();
        let key = match selection {
            Selection::Density => w / geometry.face_areas()[f],
            Selection::Raw => w,
        };
        if best.map_or(true, |(_, k)| key > k) {
            best = Some((f, key));
        }
    }
    best.map(|(f, _)| f)
        .ok_or_else(|| DecError::InvalidArgument("no face left to crack".into()))
}

/// Steps at which snapshots are taken for a run with `n_cracks` cracks:
/// the first crack and each fraction of `n_cracks`, rounded, deduplicated.
pub fn snapshot_steps(n_cracks: usize, fractions: &[f64]) -> Vec<usize> {
    if n_cracks == 0 {
        return Vec::new();
    }
    let mut steps = vec![1];
    for &p in fractions {
        steps.push(((p * n_cracks as f64).round() as usize).clamp(1, n_cracks));
    }
    steps.sort_unstable();
    steps.dedup();
    steps
}

/// A prepared experiment: geometry, pristine system and interior faces.
pub struct CrackSimulation<'a> {
    complex: &'a SimplicialComplex,
    geometry: DualGeometry,
    pristine: SaddleSystem,
    interior: Vec<usize>,
    config: ExperimentConfig,
}

impl<'a> CrackSimulation<'a> {
    pub fn new(complex: &'a SimplicialComplex, config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let geometry = DualGeometry::new(complex)?;
        let hodge = hodge_star(&geometry, 2, config.limiter)?;
        let mut pristine = assemble(complex, &hodge, &Conductivity::uniform(complex.n_faces(), config.kappa))?;
        apply_boundary_conditions(&mut pristine, complex, &geometry, &config.tags)?;
        pristine.pin_floating_regions(complex)?;
        let interior = non_boundary_faces(complex);
        if interior.is_empty() {
            return Err(DecError::Mesh("mesh has no interior faces to crack".into()));
        }
        Ok(Self {
            complex,
            geometry,
            pristine,
            interior,
            config,
        })
    }

    pub fn complex(&self) -> &SimplicialComplex {
        self.complex
    }

    pub fn geometry(&self) -> &DualGeometry {
        &self.geometry
    }

    pub fn pristine(&self) -> &SaddleSystem {
        &self.pristine
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    /// κ_e at which a run stops.
    pub fn stop_threshold(&self) -> f64 {
        self.config.stop_fraction * self.config.kappa
    }

    fn solve(&self, system: &SaddleSystem, guess: Option<&[f64]>) -> Result<Solution> {
        let sol = solve_with_guess(system, &self.config.solver, guess)?;
        if !sol.converged {
            return Err(DecError::Solver(format!(
                "no convergence ({:?}) after {} iterations, residual {:e}",
                sol.status, sol.iterations, sol.residual_norm
            )));
        }
        Ok(sol)
    }

    pub fn effective_conductivity(&self, solution: &Solution) -> Result<f64> {
        effective_conductivity(solution, self.complex, self.config.flux_marker)
    }

    /// System and conductivity after applying `cracks` in order to the
    /// pristine system.
    pub fn replay(&self, cracks: &[usize]) -> Result<(SaddleSystem, Conductivity)> {
        let mut system = self.pristine.clone();
        let mut cond = Conductivity::uniform(self.complex.n_faces(), self.config.kappa);
        for &f in cracks {
            system.crack_face(self.complex, &mut cond, f)?;
            system.pin_floating_regions(self.complex)?;
        }
        Ok((system, cond))
    }

    /// Solves the state reached after `cracks`.
    pub fn solve_after(&self, cracks: &[usize]) -> Result<Solution> {
        let (system, _) = self.replay(cracks)?;
        self.solve(&system, None)
    }

    fn run<F>(&self, mut state: CrackState, mut choose: F) -> CrackState
    where
        F: FnMut(&Solution, &Conductivity) -> Result<Option<usize>>,
    {
        let mut system = self.pristine.clone();
        let mut cond = Conductivity::uniform(self.complex.n_faces(), self.config.kappa);
        let mut guess: Option<Vec<f64>> = None;
        let stop = self.stop_threshold();
        loop {
            let step = (|| -> Result<Option<usize>> {
                let sol = self.solve(&system, guess.as_deref())?;
                let ke = self.effective_conductivity(&sol)?;
                state.kappa_e_history.push(ke);
                state.iterations.push(sol.iterations);
                if ke <= stop {
                    state.terminated = true;
                    return Ok(None);
                }
                if self.config.max_cracks.is_some_and(|m| state.cracked.len() >= m) {
                    return Ok(None);
                }
                let face = choose(&sol, &cond)?;
                if face.is_some() {
                    guess = Some(sol.stacked());
                }
                Ok(face)
            })();
            match step {
                Ok(Some(face)) => {
                    let applied = system
                        .crack_face(self.complex, &mut cond, face)
                        .and_then(|_| system.pin_floating_regions(self.complex));
                    if let Err(e) = applied {
                        state.failure = Some(e.to_string());
                        break;
                    }
                    state.cracked.push(face);
                }
                Ok(None) => break,
                Err(e) => {
                    state.failure = Some(e.to_string());
                    break;
                }
            }
        }
        state
    }

    /// Cracks the face with the largest flux (density) at every step.
    pub fn run_deterministic(&self) -> CrackState {
        let state = CrackState::new(CrackMode::Deterministic, self.n_interior(), None);
        self.run(state, |sol, cond| {
            match max_flux_face(sol, self.complex, &self.geometry, cond, self.config.selection) {
                Ok(f) => Ok(Some(f)),
                Err(_) => Ok(None),
            }
        })
    }

    /// Cracks a uniformly random uncracked interior face at every step.
    pub fn run_stochastic(&self, seed: u64) -> CrackState {
        let state = CrackState::new(CrackMode::Stochastic, self.n_interior(), Some(seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut candidates = self.interior.clone();
        self.run(state, move |_, _| {
            if candidates.is_empty() {
                return Ok(None);
            }
            let i = rng.gen_range(0..candidates.len());
            Ok(Some(candidates.swap_remove(i)))
        })
    }

    /// `n_paths` stochastic runs with seeds `base_seed + i`, run in
    /// parallel and returned in path order.
    pub fn run_monte_carlo(&self, n_paths: usize, base_seed: u64) -> Result<Vec<CrackState>> {
        if n_paths == 0 {
            return Err(DecError::InvalidArgument("at least one Monte Carlo path is required".into()));
        }
        Ok((0..n_paths as u64)
            .into_par_iter()
            .map(|i| self.run_stochastic(base_seed.wrapping_add(i)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::build_complex;
    use crate::mesh_io::generate_cube;

    fn cfg() -> ExperimentConfig {
        let mut c = ExperimentConfig::unit_cube(CubeSide::ZMax, 1.0);
        c.solver.schur_precond = crate::solver::SchurPrecond::Ichol;
        c
    }

    #[test]
    fn snapshot_steps_examples() {
        assert_eq!(snapshot_steps(40, &DEFAULT_SNAPSHOT_FRACTIONS), vec![1, 4, 10, 20, 30, 40]);
        assert_eq!(snapshot_steps(2, &DEFAULT_SNAPSHOT_FRACTIONS), vec![1, 2]);
        assert!(snapshot_steps(0, &DEFAULT_SNAPSHOT_FRACTIONS).is_empty());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("stochastic".parse::<CrackMode>().unwrap(), CrackMode::Stochastic);
        assert!("random".parse::<CrackMode>().is_err());
    }

    #[test]
    fn flux_marker_must_be_dirichlet() {
        let mut c = cfg();
        c.flux_marker = CubeSide::XMin.marker();
        assert!(c.validate().is_err());
    }

    #[test]
    fn damage_history_and_interpolation() {
        let mut s = CrackState::new(CrackMode::Stochastic, 10, Some(1));
        s.kappa_e_history = vec![1.0, 0.8, 0.4];
        s.cracked = vec![3, 4];
        assert_eq!(s.d_n(), 0.2);
        assert_eq!(s.kappa_e_at(0.05), Some(0.9));
        assert_eq!(s.kappa_e_at(0.2), Some(0.4));
        assert_eq!(s.kappa_e_at(0.3), None);
    }

    #[test]
    fn max_cracks_cap_and_replay() {
        let c = build_complex(&generate_cube(2).unwrap()).unwrap();
        let mut config = cfg();
        config.max_cracks = Some(3);
        let sim = CrackSimulation::new(&c, config).unwrap();
        let st = sim.run_stochastic(5);
        assert_eq!(st.cracked.len(), 3);
        assert_eq!(st.kappa_e_history.len(), 4);
        let again = sim.solve_after(&st.cracked).unwrap();
        let ke = sim.effective_conductivity(&again).unwrap();
        assert!((ke - st.kappa_e_history[3]).abs() < 1e-8);
    }

    #[test]
    fn zero_paths_rejected() {
        let c = build_complex(&generate_cube(1).unwrap()).unwrap();
        let sim = CrackSimulation::new(&c, cfg()).unwrap();
        assert!(sim.run_monte_carlo(0, 1).is_err());
    }
}
