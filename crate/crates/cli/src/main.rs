mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;
use crate::output::OutDir;

/// Travelling fronts of u_t = d u_xx - u + g(u(t-h)).
#[derive(Parser)]
#[command(name = "wavefront", version)]
struct Cli {
    /// JSON config for the subcommand; defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true, default_value = "wavefront-out")]
    out: PathBuf,
    /// worker threads for parallel sections
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// seed for randomized checks
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium, attractivity condition and oscillation criterion
    Analyze,
    /// Real roots, strip counts and the limit table of the characteristic equation
    Roots {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// random (p, h, epsilon) triples to check
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Heteroclinic orbit of the delay equation
    Hetero,
    /// Wave profile at a fixed epsilon = 1/c
    Wave {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// upper bound on the grid spacing
        #[arg(long)]
        spacing: Option<f64>,
        /// damping of the fixed-point iteration
        #[arg(long)]
        omega: Option<f64>,
    },
    /// Direct simulation of the delayed reaction-diffusion equation
    Pde,
    /// Classification of a (p, h) rectangle
    Sweep,
    /// Profiles along an ascending list of epsilon
    Continuation,
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let cfg = cli.config.as_deref();
    let mut out = OutDir::create(&cli.out, cli.seed)?;
    match cli.command {
        Command::Analyze => commands::analyze(config::load(cfg)?, &mut out)?,
        Command::Roots { p, h, epsilon, samples } => {
            let mut c: config::RootsConfig = config::load(cfg)?;
            c.p = p.unwrap_or(c.p);
            c.h = h.unwrap_or(c.h);
            c.epsilon = epsilon.unwrap_or(c.epsilon);
            c.samples = samples.unwrap_or(c.samples);
            commands::roots(c, cli.seed, &mut out)?
        }
        Command::Hetero => commands::hetero(config::load(cfg)?, &mut out)?,
        Command::Wave { p, h, epsilon, spacing, omega } => {
            let mut c: config::WaveConfig = config::load(cfg)?;
            if let Some(p) = p {
                c.birth = c.birth.with_p(p);
            }
            c.h = h.unwrap_or(c.h);
            c.epsilon = epsilon.unwrap_or(c.epsilon);
            c.grid.target_spacing = spacing.unwrap_or(c.grid.target_spacing);
            c.solver.omega = omega.unwrap_or(c.solver.omega);
            commands::wave(c, &mut out)?
        }
        Command::Pde => commands::pde(config::load(cfg)?, &mut out)?,
        Command::Sweep => commands::region_sweep(config::load(cfg)?, &mut out)?,
        Command::Continuation => commands::continuation(config::load(cfg)?, &mut out)?,
    }
    Ok(out.written)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
