//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 run aborted
//! (vacuum / blow-up signature), 4 internal numeric error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use easim::config::{parse_moc_spec, RunConfig, RunMode};
use easim::diagnostics::TheoryConstants;
use easim::driver::{build_problem, execute};
use easim::field::{Field, Grid};
use easim::kernel::levy_normalization;
use easim::moc::{check_obeys, reverify_parameters, select_parameters, select_parameters_with_rho_min};
use easim::snapshot::read_snapshot;
use easim::sweep::{sweep, worker_limit};
use easim::symbol::verify_symbol_bounds;

#[derive(Parser)]
#[command(name = "easim", about = "1D nonlocal alignment hydrodynamics simulator and verifier", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config file.
    Simulate { config: PathBuf },
    /// Run one simulation per value of a numeric config key.
    Sweep {
        config: PathBuf,
        /// Axis in the form key=v1,v2,...
        #[arg(long)]
        axis: String,
    },
    /// Tabulate the operator symbol on the configured grid and verify its
    /// power-law sandwich bounds.
    Symbol { config: PathBuf },
    /// Select the modulus-of-continuity parameters for a horizon T.
    MocParams(MocParamsArgs),
    /// Check a stored density snapshot against a modulus spec file.
    MocCheck { snapshot: PathBuf, spec: PathBuf },
    /// Run the constant-density companion equation.
    Burgers { config: PathBuf },
}

#[derive(Args)]
struct MocParamsArgs {
    config: PathBuf,
    /// Time horizon for the theoretical density floor.
    #[arg(long = "T")]
    t_horizon: f64,
    /// Use this density floor instead of the theoretical envelope.
    #[arg(long)]
    empirical_rho_min: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Simulate { config } => cmd_simulate(&config, None),
        Command::Sweep { config, axis } => cmd_sweep(&config, &axis),
        Command::Symbol { config } => cmd_symbol(&config),
        Command::MocParams(args) => cmd_moc_params(&args),
        Command::MocCheck { snapshot, spec } => cmd_moc_check(&snapshot, &spec),
        Command::Burgers { config } => cmd_simulate(&config, Some(RunMode::Burgers)),
    };
    ExitCode::from(code)
}

fn load_config(path: &PathBuf) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    RunConfig::parse(&text).map_err(|e| e.to_string())
}

fn cmd_simulate(path: &PathBuf, force_mode: Option<RunMode>) -> u8 {
    let mut cfg = match load_config(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    if let Some(mode) = force_mode {
        cfg.mode = mode;
    }
    match execute(&cfg) {
        Ok(summary) => {
            println!(
                "termination = {}  t = {:.6}  min_rho = {:.6e}  max_osc = {:.6e}  violations = {}",
                summary.termination, summary.final_t, summary.min_rho, summary.max_osc,
                summary.violations
            );
            let log = cfg.output.dir.join("violations.log");
            if let Ok(text) = std::fs::read_to_string(&log) {
                print!("{text}");
            }
            summary.exit_code as u8
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            4
        }
    }
}

fn cmd_sweep(path: &PathBuf, axis: &str) -> u8 {
    let cfg = match load_config(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    let Some((key, list)) = axis.split_once('=') else {
        eprintln!("config error: --axis expects key=v1,v2,...");
        return 2;
    };
    let values: Result<Vec<f64>, _> =
        list.split(',').map(|v| v.trim().parse::<f64>()).collect();
    let values = match values {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: bad axis value: {e}");
            return 2;
        }
    };
    match sweep(&cfg, key.trim(), &values, worker_limit(), &cfg.output.dir.clone()) {
        Ok(summary) => {
            print!("{}", summary.to_csv());
            0
        }
        Err(e) => {
            eprintln!("config error: {e}");
            2
        }
    }
}

fn cmd_symbol(path: &PathBuf) -> u8 {
    let cfg = match load_config(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    let p = match build_problem(&cfg) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.output.dir) {
        eprintln!("cannot create output dir: {e}");
        return 2;
    }
    let mut csv = String::from("zeta, A\n");
    let n = p.grid.n();
    // Ascending wavenumber order: k = -N/2 .. N/2 - 1.
    for k in -(n as i64) / 2..(n as i64) / 2 {
        let j = if k < 0 { (k + n as i64) as usize } else { k as usize };
        csv.push_str(&format!("{:.16e}, {:.16e}\n", p.grid.zeta(j), p.symbol.value(j)));
    }
    let out = cfg.output.dir.join("symbol.csv");
    if let Err(e) = std::fs::write(&out, csv) {
        eprintln!("cannot write {}: {e}", out.display());
        return 4;
    }
    let analytic = levy_normalization(cfg.kernel.alpha)
        .ok()
        .map(|c_alpha| p.kernel.c1() * c_alpha);
    match verify_symbol_bounds(&p.symbol, cfg.kernel.alpha, p.kernel.a0(), analytic) {
        Ok(report) => {
            print!("{}", report.text_block());
            println!("table = {}", out.display());
            0
        }
        Err(e) => {
            eprintln!("symbol verification failed: {e}");
            4
        }
    }
}

fn cmd_moc_params(args: &MocParamsArgs) -> u8 {
    let cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    let p = match build_problem(&cfg) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    let g0 = match easim::dynamics::compute_g0(&p.rho0, &p.u0, &p.symbol) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("numeric error: {e}");
            return 4;
        }
    };
    let consts = match TheoryConstants::compute(&p.pk, &p.rho0, &g0) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    let selected = match args.empirical_rho_min {
        Some(rm) => select_parameters_with_rho_min(rm, &consts),
        None => select_parameters(args.t_horizon, &consts),
    };
    match selected {
        Ok((spec, ledger)) => {
            print!("{}", ledger.text_block());
            println!("delta = {:.12e}", spec.delta);
            println!("gamma = {:.12e}", spec.gamma);
            println!("ln_lambda = {:.12e} (lambda = {:.6e})", spec.ln_lambda(), spec.lambda());
            if let Some(lx) = spec.ln_xi() {
                println!("ln_Xi = {:.12e} (Xi = {:.6e})", lx, lx.exp());
            }
            let rho_min = args
                .empirical_rho_min
                .unwrap_or_else(|| consts.lower_envelope(args.t_horizon));
            let mut ok = true;
            for (name, holds) in reverify_parameters(&spec, &consts, rho_min) {
                println!("check[{name}] = {holds}");
                ok &= holds;
            }
            if ok {
                0
            } else {
                4
            }
        }
        Err(e) => {
            eprintln!("selection failed: {e}");
            2
        }
    }
}

fn cmd_moc_check(snapshot: &PathBuf, spec_path: &PathBuf) -> u8 {
    let raw = match read_snapshot(snapshot) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("snapshot error: {e}");
            return 2;
        }
    };
    let spec_text = match std::fs::read_to_string(spec_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read spec {}: {e}", spec_path.display());
            return 2;
        }
    };
    let spec = match parse_moc_spec(&spec_text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("spec error: {e}");
            return 2;
        }
    };
    let grid = match Grid::new(raw.n) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("snapshot error: {e}");
            return 2;
        }
    };
    let rho = match Field::from_values(&grid, raw.fields[0].clone()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("snapshot error: {e}");
            return 2;
        }
    };
    let report = check_obeys(&rho, &spec);
    println!("t = {:.9e}", raw.t);
    println!("obeys = {}", report.obeys);
    println!("margin = {:.9e}", report.margin);
    println!(
        "worst_pair = ({}, {})  distance = {:.9e}  |delta_f| = {:.9e}  omega = {:.9e}",
        report.worst_i, report.worst_j, report.worst_dist, report.worst_delta, report.worst_omega
    );
    if report.obeys {
        0
    } else {
        3
    }
}
