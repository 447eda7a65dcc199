//! Parameter sweeps: one independent run per axis value, executed by a
//! bounded worker pool. Rows are ordered by axis index, never by completion
//! order, and individual failures are recorded per row without aborting the
//! sweep.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::config::{ConfigError, RunConfig};
use crate::driver::{execute, DriverError};

/// One row of the sweep summary.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub termination: String,
    pub final_t: f64,
    pub min_rho: f64,
    pub max_osc: f64,
    pub violations: usize,
}

#[derive(Debug)]
pub struct SweepSummary {
    pub key: String,
    pub rows: Vec<SweepRow>,
}

impl SweepSummary {
    pub const CSV_HEADER: &'static str =
        "value, final_t, termination, min_rho, max_osc_norm, violation_count";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{:?}, {:.16e}, {}, {:.16e}, {:.16e}, {}\n",
                r.value, r.final_t, r.termination, r.min_rho, r.max_osc, r.violations
            ));
        }
        s
    }
}

/// Worker cap: the `SIM_THREADS` environment variable when set, otherwise
/// the machine parallelism.
pub fn worker_limit() -> usize {
    std::env::var("SIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Run one simulation per axis value. Each run gets its own output
/// subdirectory `run_NNN` under `out_dir`; the summary CSV is written to
/// `out_dir/sweep_summary.csv`.
pub fn sweep(
    base: &RunConfig,
    key: &str,
    values: &[f64],
    workers: usize,
    out_dir: &Path,
) -> Result<SweepSummary, ConfigError> {
    // Validate the axis key up front by probing an assignment.
    if !values.is_empty() {
        let mut probe = base.clone();
        probe.assign(key, &format!("{:?}", values[0]))?;
        probe.validate()?;
    }
    std::fs::create_dir_all(out_dir).map_err(ConfigError::Io)?;

    let configs: Result<Vec<RunConfig>, ConfigError> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut cfg = base.clone();
            cfg.assign(key, &format!("{v:?}"))?;
            cfg.output.dir = out_dir.join(format!("run_{i:03}"));
            cfg.validate()?;
            Ok(cfg)
        })
        .collect();
    let configs = configs?;

    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; values.len()]);
    let nworkers = workers.max(1).min(values.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..nworkers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= configs.len() {
                    break;
                }
                let row = match execute(&configs[i]) {
                    Ok(s) => SweepRow {
                        value: values[i],
                        termination: s.termination,
                        final_t: s.final_t,
                        min_rho: s.min_rho,
                        max_osc: s.max_osc,
                        violations: s.violations,
                    },
                    Err(e) => SweepRow {
                        value: values[i],
                        termination: error_label(&e),
                        final_t: f64::NAN,
                        min_rho: f64::NAN,
                        max_osc: f64::NAN,
                        violations: 0,
                    },
                };
                rows.lock().expect("row sink")[i] = Some(row);
            });
        }
    });

    let rows: Vec<SweepRow> =
        rows.into_inner().expect("row sink").into_iter().map(|r| r.expect("all rows filled")).collect();
    let summary = SweepSummary { key: key.to_string(), rows };
    std::fs::write(out_dir.join("sweep_summary.csv"), summary.to_csv())
        .map_err(ConfigError::Io)?;
    Ok(summary)
}

fn error_label(e: &DriverError) -> String {
    format!("error: {e}")
}
