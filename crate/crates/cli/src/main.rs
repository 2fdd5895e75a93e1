mod job;
mod reproduce;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use job::{Job, Mode, Overrides, Source};

/// Exit status for configuration, input and solver errors.
const EXIT_ERROR: u8 = 1;
/// Exit status when the shooting iteration stops without converging.
const EXIT_NOT_CONVERGED: u8 = 3;
/// Exit status when a reproduction row misses its thresholds.
const EXIT_REPRODUCE_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "fractvp", version, about = "Terminal value problems for Caputo fractional differential equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem.
    Solve(SolveArgs),
    /// Run the reference examples against a threshold manifest.
    Reproduce {
        /// Threshold manifest (TOML); the bundled manifest is used when omitted.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(short, long)]
        verbose: bool,
    },
    /// Precompute or inspect collocation table caches.
    #[command(subcommand)]
    Tables(tables::TablesCommand),
}

#[derive(Args)]
struct SolveArgs {
    /// Built-in problem 1..6.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    builtin: Option<usize>,
    /// Half the dimension of built-in problem 6.
    #[arg(long, requires = "builtin")]
    nu: Option<usize>,
    /// Problem configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Report file; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trajectory file (comma-separated, one row per knot).
    #[arg(long)]
    traj: Option<PathBuf>,
    /// Newton stopping tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Number of quadrature nodes.
    #[arg(long)]
    k: Option<usize>,
    /// Number of basis functions.
    #[arg(long)]
    s: Option<usize>,
    /// Table cache file, read when valid and written otherwise.
    #[arg(long)]
    tables: Option<PathBuf>,
    #[arg(short, long)]
    verbose: bool,
}

fn solve(args: SolveArgs) -> Result<bool, fractvp::Error> {
    let source = match (args.builtin, args.config) {
        (Some(id), _) => Source::Builtin { id, nu: args.nu },
        (None, Some(path)) => Source::Config(path),
        (None, None) => unreachable!("clap requires one of --builtin and --config"),
    };
    let overrides = Overrides {
        mode: args.mode,
        tol: args.tol,
        k: args.k,
        s: args.s,
        ..Default::default()
    };
    let job = Job::resolve(&source, &overrides)?;
    if args.verbose {
        eprintln!("{}: {} on {}", job.problem.name, job.mode.name(), job.mesh.signature());
    }
    let tables = job.tables(args.tables.as_deref(), args.verbose)?;
    let outcome = job.run(&tables)?;
    let report = outcome.report(&job.problem);
    match &args.out {
        Some(path) => std::fs::write(path, &report)?,
        None => print!("{report}"),
    }
    if let Some(path) = &args.traj {
        std::fs::write(path, outcome.trajectory_csv())?;
    }
    Ok(outcome.converged())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(args).map(|converged| {
            if converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("shooting iteration did not converge");
                ExitCode::from(EXIT_NOT_CONVERGED)
            }
        }),
        Command::Reproduce { manifest, verbose } => reproduce::run(manifest.as_deref(), verbose).map(|passed| {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_REPRODUCE_FAILED)
            }
        }),
        Command::Tables(cmd) => tables::run(cmd).map(|()| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_ERROR)
    })
}
