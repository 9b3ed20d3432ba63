use clap::{Parser, Subcommand, ValueEnum};
use grating_ddm_cli::config::PrecondName;
use grating_ddm_cli::{run_campaign, run_solve, run_spectrum, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "grating-ddm", version, about = "Domain decomposition solver for layered periodic gratings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Preconditioner for every run, overriding the config.
    #[arg(long, global = true, value_enum)]
    precond: Option<PrecondArg>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Number of worker threads.
    #[arg(long, global = true, default_value_t = default_workers())]
    workers: usize,
    /// Suppress per-cell progress on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Subcommand)]
enum Command {
    /// Solve every cell and write the table and per-order efficiencies.
    Solve { config: PathBuf },
    /// Run every cell in parallel and write the iteration table.
    Campaign { config: PathBuf },
    /// Write the eigenvalues of every cell's operator.
    Spectrum { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecondArg {
    None,
    Sweep,
    Exact,
}

impl From<PrecondArg> for PrecondName {
    fn from(p: PrecondArg) -> Self {
        match p {
            PrecondArg::None => PrecondName::None,
            PrecondArg::Sweep => PrecondName::Sweep,
            PrecondArg::Exact => PrecondName::Exact,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        precond: cli.precond.map(Into::into),
        out: cli.out,
        workers: cli.workers,
        verbose: !cli.quiet,
    };
    let result = match &cli.command {
        Command::Solve { config } => run_solve(config, &opts),
        Command::Campaign { config } => run_campaign(config, &opts),
        Command::Spectrum { config } => run_spectrum(config, &opts),
    };
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
