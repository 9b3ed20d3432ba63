//! Batch driver for layered grating transmission campaigns.

pub mod campaign;
pub mod config;

use campaign::{cell_spectrum, cells, run_cell, run_cells, write_efficiencies, write_spectra, write_table, CliResult};
use config::{ExperimentConfig, PrecondName};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub precond: Option<PrecondName>,
    pub out: PathBuf,
    pub workers: usize,
    pub verbose: bool,
}

fn prepare(config: &Path, opts: &RunOptions) -> CliResult<ExperimentConfig> {
    let cfg = ExperimentConfig::load(config)?;
    std::fs::create_dir_all(&opts.out)?;
    Ok(cfg)
}

/// Solves every cell in order and writes the table and per-order efficiencies.
pub fn run_solve(config: &Path, opts: &RunOptions) -> CliResult<Vec<PathBuf>> {
    let cfg = prepare(config, opts)?;
    let cs = cells(&cfg, opts.precond);
    let results: Vec<_> = cs
        .iter()
        .map(|c| {
            let r = run_cell(&cfg, c);
            if opts.verbose {
                eprintln!("[{}/{}] {}", c.index + 1, cs.len(), r.record().join(","));
            }
            r
        })
        .collect();
    let table = opts.out.join(format!("{}_solve.csv", cfg.name()));
    let effs = opts.out.join(format!("{}_efficiencies.csv", cfg.name()));
    write_table(&table, &results)?;
    write_efficiencies(&effs, &results)?;
    Ok(vec![table, effs])
}

/// Runs the cells in parallel across `workers` threads and writes the table.
pub fn run_campaign(config: &Path, opts: &RunOptions) -> CliResult<Vec<PathBuf>> {
    let cfg = prepare(config, opts)?;
    let cs = cells(&cfg, opts.precond);
    let results = run_cells(&cfg, &cs, opts.workers, opts.verbose)?;
    let table = opts.out.join(format!("{}.csv", cfg.name()));
    write_table(&table, &results)?;
    Ok(vec![table])
}

/// Writes the eigenvalues of every cell's operator.
pub fn run_spectrum(config: &Path, opts: &RunOptions) -> CliResult<Vec<PathBuf>> {
    let cfg = prepare(config, opts)?;
    let cs = cells(&cfg, opts.precond);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.workers.max(1)).build()?;
    let spectra: Vec<_> = pool.install(|| {
        use rayon::prelude::*;
        cs.par_iter().map(|c| cell_spectrum(&cfg, c)).collect()
    });
    let summary = write_spectra(&opts.out, cfg.name(), &spectra)?;
    Ok(vec![summary])
}
