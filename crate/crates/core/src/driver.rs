//! Run orchestration: build the objects a config describes, execute the
//! simulation, and write the diagnostics CSV, the violation log and the
//! binary snapshots into the configured output directory.

use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

use crate::burgers::{burgers_run, BurgersRecord};
use crate::config::{ConfigError, RunConfig, RunMode};
use crate::diagnostics::{DiagnosticsError, DiagnosticsRecord};
use crate::dynamics::{build_initial, run, RunSetup, Termination};
use crate::field::{Field, FieldError, Grid};
use crate::kernel::{Kernel, KernelError, PeriodizedKernel};
use crate::snapshot::{write_snapshot, SnapshotError};
use crate::symbol::{SymbolError, SymbolTable};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything a run needs, built once from a config.
pub struct BuiltProblem {
    pub grid: Grid,
    pub kernel: Arc<dyn Kernel>,
    pub pk: PeriodizedKernel,
    pub symbol: SymbolTable,
    pub rho0: Field,
    pub u0: Field,
}

/// Construct grid, kernel, periodization and symbol table. The two-power
/// kernel gets its exact closed-form symbol; tabulated kernels go through
/// the Levy-Khintchine quadrature.
pub fn build_problem(cfg: &RunConfig) -> Result<BuiltProblem, DriverError> {
    let grid = Grid::new(cfg.grid_n)?;
    let kernel = cfg.build_kernel()?;
    let pk = PeriodizedKernel::new(kernel.clone(), cfg.kernel.images)?;
    let symbol = match cfg.kernel.kind {
        crate::config::KernelKind::PowerPair => {
            SymbolTable::closed_form(&grid, cfg.kernel.alpha, cfg.kernel.beta, cfg.kernel.mu)
        }
        crate::config::KernelKind::CustomTable => {
            SymbolTable::from_quadrature(&grid, kernel.as_ref(), 1e-8)?
        }
    };
    let (rho0, u0) = build_initial(&grid, &cfg.preset());
    Ok(BuiltProblem { grid, kernel, pk, symbol, rho0, u0 })
}

/// Scalar summary of one executed run (also one sweep row).
#[derive(Debug, Clone)]
pub struct ExecSummary {
    pub termination: String,
    pub exit_code: i32,
    pub final_t: f64,
    pub min_rho: f64,
    pub max_osc: f64,
    pub violations: usize,
}

/// Execute a config end to end, writing `diagnostics.csv`,
/// `violations.log` and `snap_NNNNNN.bin` under `output.dir`.
pub fn execute(cfg: &RunConfig) -> Result<ExecSummary, DriverError> {
    std::fs::create_dir_all(&cfg.output.dir)?;
    let problem = build_problem(cfg)?;
    match cfg.mode {
        RunMode::EulerAlignment => execute_alignment(cfg, problem),
        RunMode::Burgers => execute_burgers(cfg, problem),
    }
}

fn snapshot_path(dir: &std::path::Path, index: usize) -> PathBuf {
    dir.join(format!("snap_{index:06}.bin"))
}

fn execute_alignment(cfg: &RunConfig, p: BuiltProblem) -> Result<ExecSummary, DriverError> {
    let setup = RunSetup {
        symbol: &p.symbol,
        pk: &p.pk,
        control: cfg.step,
        t_end: cfg.t_end,
        diag_dt: cfg.output.diag_dt,
        snapshot_dt: cfg.output.snapshot_dt,
        energy_every: cfg.output.energy_every,
    };
    let result = run(p.rho0, p.u0, &setup)?;

    let mut csv = String::from(DiagnosticsRecord::CSV_HEADER);
    csv.push('\n');
    for r in &result.records {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    std::fs::write(cfg.output.dir.join("diagnostics.csv"), csv)?;

    let mut log = String::new();
    for v in &result.violations {
        log.push_str(&format!("{v}\n"));
    }
    std::fs::write(cfg.output.dir.join("violations.log"), log)?;

    for (i, snap) in result.snapshots.iter().enumerate() {
        write_snapshot(
            &snapshot_path(&cfg.output.dir, i),
            snap.t,
            &[snap.rho.values(), snap.g.values()],
        )?;
    }

    Ok(ExecSummary {
        termination: result.termination.label().to_string(),
        exit_code: result.termination.exit_code(),
        final_t: result.final_state.t,
        min_rho: result.min_rho_over_run,
        max_osc: result.max_osc_over_run,
        violations: result.violations.len(),
    })
}

fn execute_burgers(cfg: &RunConfig, p: BuiltProblem) -> Result<ExecSummary, DriverError> {
    // The companion equation evolves the preset's velocity component.
    let result = burgers_run(
        p.u0,
        &p.symbol,
        &cfg.step,
        cfg.t_end,
        cfg.output.diag_dt,
        cfg.output.snapshot_dt,
    );
    let mut csv = String::from(BurgersRecord::CSV_HEADER);
    csv.push('\n');
    for r in &result.records {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    std::fs::write(cfg.output.dir.join("diagnostics.csv"), csv)?;
    for (i, (t, u)) in result.snapshots.iter().enumerate() {
        write_snapshot(&snapshot_path(&cfg.output.dir, i), *t, &[u.values()])?;
    }
    let max_grad = result.max_grad;
    Ok(ExecSummary {
        termination: result.termination.label().to_string(),
        exit_code: result.termination.exit_code(),
        final_t: result.final_state.t,
        min_rho: f64::NAN,
        max_osc: max_grad,
        violations: 0,
    })
}

/// Like [`execute`], but returning the in-memory trajectory as well (used
/// by the verification suite and the moc subcommands).
pub fn execute_alignment_in_memory(
    cfg: &RunConfig,
) -> Result<(crate::dynamics::RunResult, BuiltProblem), DriverError> {
    let p = build_problem(cfg)?;
    let setup = RunSetup {
        symbol: &p.symbol,
        pk: &p.pk,
        control: cfg.step,
        t_end: cfg.t_end,
        diag_dt: cfg.output.diag_dt,
        snapshot_dt: cfg.output.snapshot_dt,
        energy_every: cfg.output.energy_every,
    };
    let result = run(p.rho0.clone(), p.u0.clone(), &setup)?;
    Ok((result, p))
}

/// Map a terminated run to the CLI exit-code contract (0 success, 3 run
/// aborted, 4 numeric failure).
pub fn exit_code_of(t: &Termination) -> i32 {
    t.exit_code()
}
