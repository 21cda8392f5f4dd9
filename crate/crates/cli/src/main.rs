//! `decsim`: steady-state solves, crack simulations, convergence studies
//! and mesh preprocessing on tetrahedral meshes.

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dec_core::crack_sim::CrackMode;
use dec_core::SchurPrecond;

use config::RunConfig;
use failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "decsim", version, about = "Heat conduction and crack simulation on tetrahedral meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the steady-state problem and write VTK, κ_e and residual log.
    Solve(Common),
    /// Insert cracks one face at a time and record κ_e histories.
    Crack(Common),
    /// RMS temperature error over a sequence of refined meshes.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// TetGen mesh prefixes, coarsest first.
        levels: Vec<PathBuf>,
    },
    /// Sort a TetGen mesh and print its block partition.
    Prep {
        #[command(flatten)]
        common: Common,
        /// Also write primal and dual OBJ files.
        #[arg(long)]
        obj: bool,
    },
}

/// Flags shared by all commands; they override the configuration file.
#[derive(Args, Debug, Default)]
struct Common {
    /// TOML configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// TetGen mesh prefix (reads PREFIX.node, .ele, .face).
    #[arg(long, conflicts_with = "cube_n")]
    mesh: Option<PathBuf>,
    /// Built-in unit cube with n³ sub-cubes.
    #[arg(long)]
    cube_n: Option<usize>,
    #[arg(long)]
    ranks: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    /// Lower bound on dual edge lengths in the Hodge star.
    #[arg(long)]
    limiter: Option<f64>,
    /// Schur preconditioner: jacobi, spai or ichol.
    #[arg(long)]
    schur: Option<SchurPrecond>,
    /// Inner CG iterations on the Schur complement.
    #[arg(long)]
    inner_iters: Option<usize>,
    /// deterministic or stochastic.
    #[arg(long)]
    mode: Option<CrackMode>,
    /// Number of Monte Carlo paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Base seed of the Monte Carlo paths.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_cracks: Option<usize>,
    #[arg(long)]
    stop_fraction: Option<f64>,
    /// Write VTK snapshots of the crack sequence.
    #[arg(long)]
    snapshots: bool,
    /// Output directory [default: $DECSIM_OUT_DIR, else ./decsim-out].
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(m) = &self.mesh {
            c.mesh = Some(m.clone());
            c.cube_n = None;
        }
        if let Some(n) = self.cube_n {
            c.cube_n = Some(n);
            c.mesh = None;
        }
        macro_rules! set {
            ($field:ident => $($target:tt)+) => {
                if let Some(v) = self.$field.clone() {
                    $($target)+ = v;
                }
            };
        }
        set!(ranks => c.ranks);
        set!(kappa => c.kappa);
        set!(rtol => c.solver.rtol);
        set!(atol => c.solver.atol);
        set!(limiter => c.limiter);
        set!(schur => c.solver.schur_precond);
        set!(inner_iters => c.solver.inner_iters);
        set!(mode => c.crack.mode);
        set!(paths => c.crack.paths);
        set!(seed => c.crack.seed);
        set!(stop_fraction => c.crack.stop_fraction);
        if let Some(m) = self.max_cracks {
            c.crack.max_cracks = Some(m);
        }
        if self.snapshots {
            c.crack.snapshots = true;
        }
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        c.resolve_boundary();
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve(common) => commands::cmd_solve(&common.resolve()?),
        Command::Crack(common) => commands::cmd_crack(&common.resolve()?),
        Command::Convergence { common, levels } => {
            let mut cfg = common.resolve()?;
            if !levels.is_empty() {
                cfg.levels = levels;
            }
            commands::cmd_convergence(&cfg)
        }
        Command::Prep { common, obj } => commands::cmd_prep(&common.resolve()?, obj),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("decsim: {e}");
            e.exit_code()
        }
    }
}
