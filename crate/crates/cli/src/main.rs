use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vortex_core::config::RunConfig;
use vortex_core::VortexError;

mod commands;

#[derive(Parser)]
#[command(name = "vortex", version, about = "Linearized Ginzburg-Landau vortex solver")]
struct Cli {
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the corpus seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the profile ODE and tabulate w, w'.
    Profile {
        /// Outer radius of the grid.
        #[arg(long)]
        rmax: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build the homogeneous basis of one Fourier mode.
    Kernel {
        #[arg(long)]
        mode: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Solve one mode system from a CSV with columns r,h1,h2.
    SolveMode {
        #[arg(long, alias = "k")]
        mode: usize,
        /// Parity family 1 or 2; omit for mode 0.
        #[arg(long, alias = "l")]
        family: Option<u8>,
        #[arg(long)]
        rhs: PathBuf,
        /// Impose ψ(R) = 0 instead of the whole-line representation.
        #[arg(long)]
        dirichlet: Option<f64>,
        /// Mode 1 only: use the representation valid for orthogonal data.
        #[arg(long)]
        assume_orthogonal: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Solve L[φ] = h for a polar field with columns r,theta,re,im.
    Solve {
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long = "K")]
        k_max: Option<usize>,
        #[arg(long)]
        project_orthogonal: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Finite-difference Dirichlet solve on a disk.
    Oracle {
        #[arg(long = "R")]
        radius: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write a family-by-family comparison with the mode Dirichlet solutions.
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long = "K")]
        k_max: Option<usize>,
    },
    /// Write a seeded corpus right-hand side as a polar field.
    Rhs {
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[arg(long)]
        project_orthogonal: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the acceptance criteria and write a JSON summary.
    Verify {
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Recompute the recorded golden constants.
    Golden {
        #[arg(long)]
        out: PathBuf,
    },
}

fn thread_pool() -> Result<(), VortexError> {
    let Ok(v) = std::env::var("VORTEX_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| VortexError::Config(format!("VORTEX_THREADS = {:?} is not a positive integer", v)))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| VortexError::Config(e.to_string()))
}

fn load_config(cli: &Cli) -> Result<RunConfig, VortexError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, VortexError> {
    thread_pool()?;
    let cfg = load_config(&cli)?;
    use commands as c;
    match cli.command {
        Command::Profile { rmax, tol, out, report } => {
            let mut cfg = cfg;
            cfg.grid.r_max = rmax.unwrap_or(cfg.grid.r_max);
            cfg.profile_tol = tol.unwrap_or(cfg.profile_tol);
            cfg.validate()?;
            c::profile(cfg, &out, report.as_deref())
        }
        Command::Kernel { mode, out, report } => c::kernel(cfg, mode, &out, report.as_deref()),
        Command::SolveMode { mode, family, rhs, dirichlet, assume_orthogonal, out, report } => {
            c::solve_mode(cfg, mode, family, &rhs, dirichlet, assume_orthogonal, &out, report.as_deref())
        }
        Command::Solve { rhs, k_max, project_orthogonal, out, report } => {
            c::solve(cfg, &rhs, k_max, project_orthogonal, &out, report.as_deref())
        }
        Command::Oracle { radius, n, rhs, out, compare, k_max } => {
            c::oracle(cfg, radius, n, &rhs, &out, compare.as_deref(), k_max)
        }
        Command::Rhs { index, project_orthogonal, out } => c::rhs(cfg, index, project_orthogonal, &out),
        Command::Verify { quick, report } => c::verify(cfg, quick, report.as_deref()),
        Command::Golden { out } => c::golden(cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        // verification ran but a criterion failed
        Ok(false) => ExitCode::from(5),
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
