use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use svmg::experiment::{emit, run_with, ExperimentConfig, OutputFormat, Variant};
use svmg::mesh::MeshHierarchy;
use svmg::Error;

/// Iteration counts of multigrid-preconditioned CG for nearly incompressible
/// elasticity over a sweep of penalty parameters, refinements and solver
/// variants.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Cells per side of the coarsest grid.
    #[arg(long, default_value_t = 4)]
    coarse_n: usize,

    /// Refinement levels above the coarse grid, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    refinements: Vec<usize>,

    /// Penalty parameters, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,1,10,1e2,1e3,1e4,1e6,1e8")]
    gammas: Vec<f64>,

    /// Solver variants (robust-robust, robust-standard, jacobi-robust, jacobi-standard).
    #[arg(long, value_delimiter = ',', default_value = "robust-robust,robust-standard,jacobi-robust,jacobi-standard")]
    variants: Vec<String>,

    #[arg(long, default_value_t = 1e-8)]
    rtol: f64,

    #[arg(long, default_value_t = 200)]
    maxit: usize,

    /// Seed of the eigenvalue-estimation start vectors.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// csv or json.
    #[arg(long, default_value = "csv")]
    format: String,

    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Single-threaded run with bit-reproducible results (default).
    #[arg(long, conflicts_with = "parallel")]
    serial: bool,

    /// Parallel local solves.
    #[arg(long)]
    parallel: bool,

    /// Write 0 in the seconds column so repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,

    /// Write the split mesh of the finest refinement to this file and exit.
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
}

fn config_from(cli: &Cli) -> svmg::Result<(ExperimentConfig, OutputFormat)> {
    let variants = cli
        .variants
        .iter()
        .map(|s| s.trim().parse::<Variant>())
        .collect::<svmg::Result<Vec<_>>>()?;
    let config = ExperimentConfig {
        coarse_n: cli.coarse_n,
        refinements: cli.refinements.clone(),
        gammas: cli.gammas.clone(),
        variants,
        rtol: cli.rtol,
        maxit: cli.maxit,
        seed: cli.seed,
        parallel: cli.parallel && !cli.serial,
        timing: !cli.no_timing,
    };
    config.validate()?;
    Ok((config, cli.format.parse()?))
}

fn execute(cli: &Cli) -> svmg::Result<()> {
    let (config, format) = config_from(cli)?;

    if let Some(path) = &cli.dump_mesh {
        let finest = *config.refinements.iter().max().unwrap();
        let h = MeshHierarchy::new(config.coarse_n, finest + 1)?;
        h.level(finest).split.mesh().dump_to_file(path)?;
        return Ok(());
    }

    // open the output first so a bad path fails before any solving
    let mut out: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let rows = run_with(&config, |r| {
        eprintln!(
            "{:<16} ref {} dofs {:>7} gamma {:<8e} iterations {:>5} ({:.2}s)",
            r.variant, r.refinement, r.dofs, r.gamma, r.iterations.to_string(), r.seconds
        );
    })?;
    emit(&rows, format, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
