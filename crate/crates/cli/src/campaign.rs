//! Campaign cells, their execution and CSV emission.

use crate::config::{ExperimentConfig, KLawSpec, PrecondName, ProfileSpec, RunSpec};
use grating_ddm::ddm::{assemble_system, dense_spectrum, strip_cuts, Scheme};
use grating_ddm::geometry::LayerStack;
use grating_ddm::precond::{preconditioned_spectrum, SweepMode};
use grating_ddm::solve::{solve, Preconditioner, SolveOptions, SolveOutcome};
use grating_ddm::C64;
use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub type CliResult<T> = Result<T, Box<dyn Error + Send + Sync>>;

/// Columns of the campaign table, in order.
pub const TABLE_HEADER: [&str; 13] = [
    "N",
    "epsilon",
    "k_law",
    "scheme",
    "L",
    "precond",
    "iterations",
    "converged",
    "energy_defect",
    "wall_time",
    "profile",
    "family",
    "status",
];

/// One point of the sweep grid.
#[derive(Clone, Debug)]
pub struct Cell {
    pub index: usize,
    pub profile: ProfileSpec,
    pub layers: usize,
    pub roughness: f64,
    pub law: KLawSpec,
    pub run: RunSpec,
}

impl Cell {
    fn precond(&self) -> Preconditioner {
        self.run.precond.precond()
    }

    fn key(&self) -> Vec<String> {
        vec![
            self.layers.to_string(),
            format!("{}", self.roughness),
            self.law.label(),
            self.run.scheme.as_str().to_string(),
            self.run.order.to_string(),
            self.precond().as_str().to_string(),
        ]
    }
}

/// Cells in the order profile, N, epsilon, k-law, run.
pub fn cells(cfg: &ExperimentConfig, precond: Option<PrecondName>) -> Vec<Cell> {
    let mut out = Vec::new();
    for profile in &cfg.geometry.profiles {
        for &layers in &cfg.sweep.layers {
            for &roughness in &cfg.sweep.roughness {
                for law in &cfg.sweep.k_laws {
                    for run in &cfg.runs {
                        let mut run = run.clone();
                        if let Some(p) = precond {
                            run.precond = p;
                        }
                        out.push(Cell {
                            index: out.len(),
                            profile: profile.clone(),
                            layers,
                            roughness,
                            law: law.clone(),
                            run,
                        });
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub enum CellStatus {
    Solved(Box<SolveOutcome>),
    Skipped(String),
    Failed(String),
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub cell: Cell,
    pub status: CellStatus,
    pub wall_time: f64,
}

impl CellResult {
    pub fn record(&self) -> Vec<String> {
        let mut row = self.cell.key();
        let (iters, conv, defect, status) = match &self.status {
            CellStatus::Solved(o) => (
                o.report.iterations.to_string(),
                o.report.converged.to_string(),
                o.energy_defect.map(|e| format!("{e:.3e}")).unwrap_or_default(),
                "ok".to_string(),
            ),
            CellStatus::Skipped(r) => (String::new(), String::new(), String::new(), format!("skipped: {r}")),
            CellStatus::Failed(r) => (String::new(), String::new(), String::new(), format!("failed: {r}")),
        };
        row.extend([iters, conv, defect, format!("{:.3}", self.wall_time)]);
        row.extend([
            self.cell.profile.label(),
            self.cell.run.family.as_str().to_string(),
            status,
        ]);
        row
    }
}

/// Stack of the cell, or the reason it cannot be run.
pub fn cell_stack(cfg: &ExperimentConfig, cell: &Cell) -> Result<LayerStack, String> {
    let stack = cfg
        .stack(&cell.profile, cell.layers, cell.roughness, &cell.law)
        .map_err(|e| e.to_string())?;
    let violations = stack.validate();
    if !violations.is_empty() {
        return Err(format!("invalid stack {violations:?}"));
    }
    if cell.run.scheme.scheme() == Scheme::Strip {
        let cuts = strip_cuts(&stack);
        let with_cuts = stack.clone().with_strip_cuts(cuts);
        if !with_cuts.validate().is_empty() {
            return Err("no horizontal strip separates the interfaces".into());
        }
    }
    Ok(stack)
}

pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> CellResult {
    let t0 = Instant::now();
    let status = match cell_stack(cfg, cell) {
        Err(reason) => CellStatus::Skipped(reason),
        Ok(stack) => {
            let opts = SolveOptions {
                system: cfg.system_config(&cell.run),
                gmres: cfg.gmres_config(),
                precond: cell.precond(),
            };
            match solve(&stack, &opts) {
                Ok(o) => CellStatus::Solved(Box::new(o)),
                Err(e) => CellStatus::Failed(e.to_string()),
            }
        }
    };
    CellResult { cell: cell.clone(), status, wall_time: t0.elapsed().as_secs_f64() }
}

/// Runs the cells on a pool of `workers` threads; results keep the cell order.
pub fn run_cells(cfg: &ExperimentConfig, cells: &[Cell], workers: usize, verbose: bool) -> CliResult<Vec<CellResult>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let total = cells.len();
    Ok(pool.install(|| {
        use rayon::prelude::*;
        cells
            .par_iter()
            .map(|c| {
                let r = run_cell(cfg, c);
                if verbose {
                    eprintln!("[{}/{total}] {}", c.index + 1, r.record().join(","));
                }
                r
            })
            .collect()
    }))
}

fn writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

pub fn write_table(path: &Path, results: &[CellResult]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(TABLE_HEADER)?;
    for r in results {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Per-order efficiencies of every solved cell.
pub fn write_efficiencies(path: &Path, results: &[CellResult]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(["cell", "N", "epsilon", "k_law", "scheme", "L", "precond", "side", "order", "efficiency"])?;
    for r in results {
        let CellStatus::Solved(o) = &r.status else { continue };
        let Some(exp) = &o.expansion else { continue };
        for (side, effs) in [("reflected", exp.efficiencies_up()), ("transmitted", exp.efficiencies_down())] {
            for (order, e) in effs.unwrap_or_default() {
                let mut row = vec![r.cell.index.to_string()];
                row.extend(r.cell.key());
                row.extend([side.to_string(), order.to_string(), format!("{e:.12e}")]);
                w.write_record(row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub struct SpectrumResult {
    pub cell: Cell,
    pub eigenvalues: Result<Vec<C64>, String>,
}

/// Eigenvalues of the DD operator, or of `B^{-1} A` under a preconditioner.
pub fn cell_spectrum(cfg: &ExperimentConfig, cell: &Cell) -> SpectrumResult {
    let eig = cell_stack(cfg, cell).and_then(|stack| {
        let system = assemble_system(&stack, &cfg.system_config(&cell.run)).map_err(|e| e.to_string())?;
        match cell.precond() {
            Preconditioner::None => dense_spectrum(&system),
            Preconditioner::Sweep => preconditioned_spectrum(&system, SweepMode::Approximate),
            Preconditioner::Exact => preconditioned_spectrum(&system, SweepMode::Exact),
        }
        .map_err(|e| e.to_string())
    });
    let eigenvalues = eig.map(|mut v| {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    });
    SpectrumResult { cell: cell.clone(), eigenvalues }
}

/// Fraction of eigenvalues in the disk `|lambda - 1| <= radius`.
pub fn cluster_fraction(eigenvalues: &[C64], radius: f64) -> f64 {
    if eigenvalues.is_empty() {
        return 0.0;
    }
    eigenvalues.iter().filter(|l| (*l - 1.0).norm() <= radius).count() as f64 / eigenvalues.len() as f64
}

pub const CLUSTER_RADIUS: f64 = 0.5;

/// Writes one `re,im` file per cell and a summary table; returns the summary path.
pub fn write_spectra(out: &Path, name: &str, spectra: &[SpectrumResult]) -> CliResult<PathBuf> {
    let summary = out.join(format!("{name}_spectrum.csv"));
    let mut w = writer(&summary)?;
    w.write_record(["cell", "N", "epsilon", "k_law", "scheme", "L", "precond", "profile", "family", "dim", "cluster_fraction", "file", "status"])?;
    for s in spectra {
        let mut row = vec![s.cell.index.to_string()];
        row.extend(s.cell.key());
        row.extend([s.cell.profile.label(), s.cell.run.family.as_str().to_string()]);
        match &s.eigenvalues {
            Ok(eig) => {
                let file = format!("{name}_spectrum_{}.csv", s.cell.index);
                let mut e = writer(&out.join(&file))?;
                e.write_record(["re", "im"])?;
                for l in eig {
                    e.write_record([format!("{:.12e}", l.re), format!("{:.12e}", l.im)])?;
                }
                e.flush()?;
                row.extend([
                    eig.len().to_string(),
                    format!("{:.6}", cluster_fraction(eig, CLUSTER_RADIUS)),
                    file,
                    "ok".into(),
                ]);
            }
            Err(reason) => row.extend([String::new(), String::new(), String::new(), format!("skipped: {reason}")]),
        }
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = r#"
        [geometry]
        profiles = [{ type = "cosine-series", coeffs = [2.5], label = "cosine" }]
        [sweep]
        layers = [0, 1]
        roughness = [0.05, 1.0]
        k_laws = [{ slope = 1.0, offset = 1.3 }]
        [discretization]
        n = 16
        [[runs]]
        scheme = "layer"
        [[runs]]
        scheme = "strip"
        precond = "sweep"
    "#;

    #[test]
    fn cells_enumerate_the_grid_in_order() {
        let cfg = ExperimentConfig::parse(CFG).unwrap();
        let cs = cells(&cfg, None);
        assert_eq!(cs.len(), 8);
        assert!(cs.iter().enumerate().all(|(i, c)| c.index == i));
        assert_eq!((cs[0].layers, cs[0].roughness, cs[0].run.scheme.as_str()), (0, 0.05, "layer"));
        assert_eq!((cs[1].layers, cs[1].run.scheme.as_str()), (0, "strip"));
        assert_eq!((cs[4].layers, cs[4].roughness), (1, 0.05));
        let forced = cells(&cfg, Some(PrecondName::Exact));
        assert!(forced.iter().all(|c| c.run.precond == PrecondName::Exact));
    }

    #[test]
    fn strips_are_skipped_when_interfaces_interlock() {
        let cfg = ExperimentConfig::parse(CFG).unwrap();
        let cs = cells(&cfg, None);
        let rough_strip = cs.iter().find(|c| c.layers == 1 && c.roughness == 1.0 && c.run.scheme.as_str() == "strip").unwrap();
        assert!(cell_stack(&cfg, rough_strip).is_err());
        let smooth_strip = cs.iter().find(|c| c.layers == 1 && c.roughness == 0.05 && c.run.scheme.as_str() == "strip").unwrap();
        assert!(cell_stack(&cfg, smooth_strip).is_ok());
        let rough_layer = cs.iter().find(|c| c.layers == 1 && c.roughness == 1.0 && c.run.scheme.as_str() == "layer").unwrap();
        assert!(cell_stack(&cfg, rough_layer).is_ok());
    }

    #[test]
    fn cluster_fraction_counts_the_disk() {
        let v = [C64::new(1.0, 0.0), C64::new(1.4, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.6)];
        assert_eq!(cluster_fraction(&v, 0.5), 0.5);
        assert_eq!(cluster_fraction(&[], 0.5), 0.0);
    }
}
