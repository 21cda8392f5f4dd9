use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dec_core::crack_sim::{
    effective_conductivity, snapshot_steps, CrackMode, CrackSimulation, CrackState, ExperimentConfig,
    DEFAULT_SNAPSHOT_FRACTIONS,
};
use dec_core::mesh_io::{
    read_tetgen, sort_mesh, write_csv_history, write_monte_carlo_csv, write_obj, write_tetgen, write_vtk,
    BoundaryKind, BoundaryTags, CubeSide, ObjKind, RawMesh,
};
use dec_core::partition::{block_partition, solve_distributed};
use dec_core::{
    apply_boundary_conditions, assemble, build_complex, hodge_star, rms_error, solve, whitney_vector,
    Conductivity, DualGeometry, SaddleSystem, SimplicialComplex, Solution,
};

use crate::config::{MeshSource, RunConfig};
use crate::failure::{writing, Failure};

fn create_dir(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::output(out, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::output(path, e))
}

fn load_mesh(source: MeshSource<'_>) -> Result<RawMesh, Failure> {
    Ok(match source {
        MeshSource::TetGen(prefix) => read_tetgen(prefix)?,
        MeshSource::Cube(n) => dec_core::mesh_io::generate_cube(n)?,
    })
}

struct Problem {
    geometry: DualGeometry,
    limited_fraction: f64,
    system: SaddleSystem,
}

fn set_up(
    complex: &SimplicialComplex,
    tags: &BoundaryTags,
    limiter: f64,
    cond: &Conductivity,
) -> Result<Problem, Failure> {
    let geometry = DualGeometry::new(complex)?;
    let hodge = hodge_star(&geometry, 2, limiter)?;
    let mut system = assemble(complex, &hodge, cond)?;
    apply_boundary_conditions(&mut system, complex, &geometry, tags)?;
    system.pin_floating_regions(complex)?;
    Ok(Problem {
        geometry,
        limited_fraction: hodge.limited_fraction(),
        system,
    })
}

fn read_kappa_file(path: &Path, n_faces: usize) -> Result<Conductivity, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let values = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<f64>()
                .map_err(|e| Failure::Config(format!("{}: bad conductivity {l:?}: {e}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != n_faces {
        return Err(Failure::Config(format!(
            "{}: {} conductivities for {n_faces} faces",
            path.display(),
            values.len()
        )));
    }
    if values.iter().any(|k| !(*k > 0.0)) {
        return Err(Failure::Config(format!("{}: conductivities must be positive", path.display())));
    }
    Ok(Conductivity::from_values(values))
}

fn residual_log(sol: &Solution) -> String {
    let mut s = String::from("iteration,residual\n");
    for (i, r) in sol.residual_history.iter().enumerate() {
        writeln!(s, "{},{r:?}", i + 1).unwrap();
    }
    s
}

fn write_solution_vtk(path: &Path, complex: &SimplicialComplex, sol: &Solution) -> Result<(), Failure> {
    let flux = whitney_vector(complex, &sol.omega)?;
    write_vtk(path, complex, &sol.alpha, Some(&flux)).map_err(writing)
}

fn check_converged(sol: &Solution) -> Result<(), Failure> {
    if sol.converged {
        Ok(())
    } else {
        Err(Failure::Solver(format!(
            "no convergence ({:?}) after {} iterations, residual {:e}",
            sol.status, sol.iterations, sol.residual_norm
        )))
    }
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<(), Failure> {
    let raw = load_mesh(cfg.mesh_source()?)?;
    let complex = build_complex(&raw)?;
    let out = cfg.out_dir();
    create_dir(&out)?;
    cfg.echo(&out)?;

    let cond = match &cfg.kappa_file {
        Some(p) => read_kappa_file(p, complex.n_faces())?,
        None => Conductivity::uniform(complex.n_faces(), cfg.kappa),
    };
    let problem = set_up(&complex, &cfg.tags()?, cfg.limiter, &cond)?;

    let sol = if cfg.ranks == 1 {
        solve(&problem.system, &cfg.solver)?
    } else {
        let (sol, stats) = solve_distributed(&problem.system, &complex, cfg.ranks, &cfg.solver)?;
        println!("{}", block_partition(complex.n_nodes(), cfg.ranks)?.report());
        println!("rank | owned tets | ghost tets | owned faces | ghost faces");
        for s in &stats {
            println!(
                "{} | {} | {} | {} | {}",
                s.rank, s.owned_tets, s.ghost_tets, s.owned_faces, s.ghost_faces
            );
        }
        sol
    };
    write_text(&out.join("residuals.csv"), &residual_log(&sol))?;
    check_converged(&sol)?;
    write_solution_vtk(&out.join("solution.vtk"), &complex, &sol)?;

    let kappa_e = effective_conductivity(&sol, &complex, cfg.flux_marker)?;
    let mut summary = String::new();
    writeln!(summary, "kappa_e = {kappa_e:?}").unwrap();
    writeln!(summary, "iterations = {}", sol.iterations).unwrap();
    writeln!(summary, "residual = {:?}", sol.residual_norm).unwrap();
    writeln!(summary, "limited_hodge_fraction = {:?}", problem.limited_fraction).unwrap();
    writeln!(summary, "n_tets = {}", complex.n_tets()).unwrap();
    writeln!(summary, "n_faces = {}", complex.n_faces()).unwrap();
    writeln!(summary, "ranks = {}", cfg.ranks).unwrap();
    write_text(&out.join("summary.toml"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn write_snapshots(sim: &CrackSimulation<'_>, state: &CrackState, out: &Path) -> Result<(), Failure> {
    for k in snapshot_steps(state.cracked.len(), &DEFAULT_SNAPSHOT_FRACTIONS) {
        if k > state.cracked.len() {
            continue;
        }
        let sol = sim.solve_after(&state.cracked[..k])?;
        write_solution_vtk(&out.join(format!("snapshot_{k:06}.vtk")), sim.complex(), &sol)?;
    }
    Ok(())
}

fn state_line(state: &CrackState) -> String {
    format!(
        "cracks = {}, D_n = {:?}, kappa_e = {:?}, terminated = {}",
        state.cracked.len(),
        state.d_n(),
        state.final_kappa_e().unwrap_or(f64::NAN),
        state.terminated
    )
}

pub fn cmd_crack(cfg: &RunConfig) -> Result<(), Failure> {
    if cfg.kappa_file.is_some() {
        return Err(Failure::Config("crack runs need a uniform kappa".into()));
    }
    if cfg.ranks != 1 {
        return Err(Failure::Config("crack runs use a single rank".into()));
    }
    let p = &cfg.crack;
    if p.mode == CrackMode::Stochastic && p.paths == 0 {
        return Err(Failure::Config("at least one Monte Carlo path is required".into()));
    }
    let raw = load_mesh(cfg.mesh_source()?)?;
    let complex = build_complex(&raw)?;
    let out = cfg.out_dir();
    create_dir(&out)?;
    cfg.echo(&out)?;

    let exp = ExperimentConfig {
        tags: cfg.tags()?,
        flux_marker: cfg.flux_marker,
        kappa: cfg.kappa,
        stop_fraction: p.stop_fraction,
        selection: p.selection,
        solver: cfg.solver.clone(),
        limiter: cfg.limiter,
        max_cracks: p.max_cracks,
    };
    let sim = CrackSimulation::new(&complex, exp)?;
    println!("interior faces = {}", sim.n_interior());

    let states = match p.mode {
        CrackMode::Deterministic => {
            let state = sim.run_deterministic();
            write_csv_history(&state, out.join("history.csv")).map_err(writing)?;
            println!("{}", state_line(&state));
            vec![state]
        }
        CrackMode::Stochastic => {
            let states = sim.run_monte_carlo(p.paths, p.seed)?;
            for (i, s) in states.iter().enumerate() {
                write_csv_history(s, out.join(format!("path_{i:04}.csv"))).map_err(writing)?;
                println!("path {i} seed {}: {}", s.rng_seed.unwrap_or_default(), state_line(s));
            }
            write_monte_carlo_csv(&states, out.join("monte_carlo.csv")).map_err(writing)?;
            states
        }
    };

    let failed: Vec<(usize, &str)> = states
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.failure.as_deref().map(|f| (i, f)))
        .collect();
    if p.snapshots && states[0].failure.is_none() {
        write_snapshots(&sim, &states[0], &out)?;
    }
    if !failed.is_empty() {
        for (i, f) in &failed {
            eprintln!("path {i} failed: {f}");
        }
        return Err(Failure::Solver(format!("{} of {} runs failed", failed.len(), states.len())));
    }
    Ok(())
}

/// The affine temperature of a hot/cold pair of opposite cube sides.
fn affine_exact(tags: &BoundaryTags) -> Result<impl Fn(&nalgebra::Point3<f64>) -> f64, Failure> {
    let sides: Vec<(CubeSide, f64)> = tags
        .dirichlet_markers()
        .filter_map(|(m, t)| CubeSide::from_marker(m).map(|s| (s, t)))
        .collect();
    let neumann_ok = tags.iter().all(|(_, k)| match k {
        BoundaryKind::Neumann(v) => v == 0.0,
        _ => true,
    });
    match sides.as_slice() {
        [(a, ta), (b, tb)] if a.opposite() == *b && neumann_ok && tags.dirichlet_markers().count() == 2 => {
            let (axis, la, lb, ta, tb) = (a.axis(), a.level(), b.level(), *ta, *tb);
            Ok(move |p: &nalgebra::Point3<f64>| ta + (tb - ta) * (p[axis] - la) / (lb - la))
        }
        _ => Err(Failure::Config(
            "a convergence study needs Dirichlet values on two opposite cube sides and insulated other sides"
                .into(),
        )),
    }
}

struct Level {
    mesh: PathBuf,
    max_volume: f64,
    n_tets: usize,
    rms: f64,
    limited_percent: f64,
}

fn convergence_table(levels: &[Level]) -> String {
    let mut s = String::from("level,mesh,max_tet_volume,n_tets,rms_error,limited_percent\n");
    for (i, l) in levels.iter().enumerate() {
        writeln!(
            s,
            "{i},{},{:?},{},{:?},{:?}",
            l.mesh.display(),
            l.max_volume,
            l.n_tets,
            l.rms,
            l.limited_percent
        )
        .unwrap();
    }
    s
}

pub fn cmd_convergence(cfg: &RunConfig) -> Result<(), Failure> {
    if cfg.levels.is_empty() {
        return Err(Failure::Config("no mesh levels given".into()));
    }
    if cfg.ranks != 1 {
        return Err(Failure::Config("convergence studies use a single rank".into()));
    }
    let tags = cfg.tags()?;
    let exact = affine_exact(&tags)?;
    let out = cfg.out_dir();
    create_dir(&out)?;
    cfg.echo(&out)?;

    let mut rows = Vec::new();
    let run_level = |prefix: &Path| -> Result<Level, Failure> {
        let complex = build_complex(&read_tetgen(prefix)?)?;
        let problem = set_up(&complex, &tags, cfg.limiter, &Conductivity::uniform(complex.n_faces(), cfg.kappa))?;
        let sol = solve(&problem.system, &cfg.solver)?;
        check_converged(&sol)?;
        let vols = problem.geometry.tet_volumes();
        Ok(Level {
            mesh: prefix.to_path_buf(),
            max_volume: vols.iter().copied().fold(0.0, f64::max),
            n_tets: vols.len(),
            rms: rms_error(&problem.geometry, &sol.alpha, &exact)?,
            limited_percent: 100.0 * problem.limited_fraction,
        })
    };
    let mut failure = None;
    for prefix in &cfg.levels {
        match run_level(prefix) {
            Ok(l) => rows.push(l),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let table = convergence_table(&rows);
    write_text(&out.join("convergence.csv"), &table)?;
    print!("{table}");
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Index base of a TetGen `.node` file, taken from its first record.
fn node_index_base(prefix: &Path) -> Result<usize, Failure> {
    let mut p = prefix.as_os_str().to_owned();
    p.push(".node");
    let path = PathBuf::from(p);
    let text = fs::read_to_string(&path).map_err(|e| Failure::Mesh(format!("{}: {e}", path.display())))?;
    let first = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .nth(1)
        .and_then(|l| l.split_whitespace().next())
        .and_then(|t| t.parse::<usize>().ok());
    Ok(usize::from(first != Some(0)))
}

pub fn cmd_prep(cfg: &RunConfig, obj: bool) -> Result<(), Failure> {
    let prefix = match cfg.mesh_source()? {
        MeshSource::TetGen(p) => p,
        MeshSource::Cube(_) => return Err(Failure::Config("prep needs a TetGen mesh prefix".into())),
    };
    let base = node_index_base(prefix)?;
    let raw = read_tetgen(prefix)?;
    let sorted = sort_mesh(&raw);
    let out = cfg.out_dir();
    create_dir(&out)?;
    cfg.echo(&out)?;

    let stem = prefix
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mesh".into());
    write_tetgen(&sorted, out.join(&stem), base).map_err(writing)?;

    let report = block_partition(sorted.nodes.len(), cfg.ranks)?.report();
    write_text(&out.join("partition.txt"), &format!("{report}\n"))?;
    println!("{report}");

    if obj {
        let complex = build_complex(&sorted)?;
        let geometry = DualGeometry::new(&complex)?;
        write_obj(out.join(format!("{stem}_primal.obj")), &complex, &geometry, ObjKind::Primal).map_err(writing)?;
        write_obj(out.join(format!("{stem}_dual.obj")), &complex, &geometry, ObjKind::Dual).map_err(writing)?;
    }
    Ok(())
}
