//! End-to-end solve: assembly, optional sweep preconditioning, GMRES and
//! post-processing.

use crate::ddm::{assemble_system, relative_residual, BlockTridiagonalSystem, SystemConfig};
use crate::error::{Error, Result};
use crate::geometry::LayerStack;
use crate::krylov::{gmres, GmresConfig, SolveReport};
use crate::post::{energy_balance, rayleigh_amplitudes, RayleighExpansion};
use crate::precond::{Preconditioned, SweepFactors, SweepMode};
use crate::C64;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preconditioner {
    None,
    Sweep,
    Exact,
}

impl Preconditioner {
    pub fn as_str(self) -> &'static str {
        match self {
            Preconditioner::None => "none",
            Preconditioner::Sweep => "sweep",
            Preconditioner::Exact => "exact",
        }
    }
}

impl fmt::Display for Preconditioner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preconditioner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Preconditioner::None),
            "sweep" => Ok(Preconditioner::Sweep),
            "exact" => Ok(Preconditioner::Exact),
            other => Err(Error::Config(format!("unknown preconditioner '{other}' (none, sweep, exact)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub system: SystemConfig,
    pub gmres: GmresConfig,
    pub precond: Preconditioner,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub dim: usize,
    pub report: SolveReport,
    pub solution: Vec<C64>,
    /// `|A x - b| / |b|` of the unpreconditioned system.
    pub residual: f64,
    pub expansion: Option<RayleighExpansion>,
    /// `None` when the balance is undefined (grazing incidence).
    pub energy_defect: Option<f64>,
    pub assembly_time: Duration,
    pub solve_time: Duration,
}

/// GMRES on `A x = b`, left-preconditioned by the chosen sweep.
pub fn solve_system(
    system: &BlockTridiagonalSystem,
    cfg: &GmresConfig,
    precond: Preconditioner,
) -> Result<(Vec<C64>, SolveReport)> {
    let mode = match precond {
        Preconditioner::None => return gmres(system, &system.rhs, cfg),
        Preconditioner::Sweep => SweepMode::Approximate,
        Preconditioner::Exact => SweepMode::Exact,
    };
    let factors = SweepFactors::new(system, mode)?;
    let b = factors.apply_sweep(&system.rhs);
    let op = Preconditioned { system, factors: &factors };
    gmres(&op, &b, cfg)
}

pub fn solve(stack: &LayerStack, opts: &SolveOptions) -> Result<SolveOutcome> {
    let t0 = Instant::now();
    let system = assemble_system(stack, &opts.system)?;
    let assembly_time = t0.elapsed();
    let t1 = Instant::now();
    let (solution, report) = solve_system(&system, &opts.gmres, opts.precond)?;
    let solve_time = t1.elapsed();
    let expansion = rayleigh_amplitudes(&system, &solution).ok();
    let energy_defect = expansion.as_ref().and_then(|e| energy_balance(e).ok());
    Ok(SolveOutcome {
        dim: system.dim(),
        residual: relative_residual(&system, &solution),
        report,
        solution,
        expansion,
        energy_defect,
        assembly_time,
        solve_time,
    })
}
