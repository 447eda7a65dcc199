//! Flat key-value run configuration (`section.key = value`, `#` comments).
//!
//! The format is deliberately line-oriented so parameter sweeps can address
//! keys by exact string. Unknown keys are rejected; every numeric field is
//! range-checked against its documented domain.

use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

use crate::dynamics::{InitPreset, StepControl};
use crate::kernel::{GeneralKernel, Kernel, KernelError, PowerLawPairKernel};
use crate::moc::{MocError, MocSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: syntax error (expected `key = value`): {text}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("key `{key}`: {message}")]
    Range { key: String, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("kernel table `{path}`: {message}")]
    Table { path: String, message: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Moc(#[from] MocError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    PowerPair,
    CustomTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    EulerAlignment,
    Burgers,
}

#[derive(Debug, Clone)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    /// Number of periodic images summed on each side.
    pub images: usize,
    pub table: Option<PathBuf>,
    pub a0: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct InitConfig {
    pub preset: String,
    pub rho_bar: f64,
    pub amplitude: f64,
    pub mode_m: u32,
    pub u_amplitude: f64,
    pub mode_n: u32,
    pub modes: u32,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub diag_dt: f64,
    pub snapshot_dt: f64,
    pub energy_every: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kernel: KernelConfig,
    pub grid_n: usize,
    pub t_end: f64,
    pub mode: RunMode,
    pub step: StepControl,
    pub init: InitConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kernel: KernelConfig {
                kind: KernelKind::PowerPair,
                alpha: 1.5,
                beta: 0.75,
                mu: 0.0,
                images: 64,
                table: None,
                a0: None,
                c1: None,
                c2: None,
            },
            grid_n: 256,
            t_end: 1.0,
            mode: RunMode::EulerAlignment,
            step: StepControl::default(),
            init: InitConfig {
                preset: "cosine".into(),
                rho_bar: 1.0,
                amplitude: 0.1,
                mode_m: 1,
                u_amplitude: 0.1,
                mode_n: 1,
                modes: 8,
                seed: 1,
            },
            output: OutputConfig {
                dir: PathBuf::from("out"),
                diag_dt: 0.01,
                snapshot_dt: 0.1,
                energy_every: 50,
            },
        }
    }
}

/// The full key set, for unknown-key rejection and serialization order.
const KEYS: &[&str] = &[
    "kernel.type",
    "kernel.alpha",
    "kernel.beta",
    "kernel.mu",
    "kernel.images",
    "kernel.table",
    "kernel.a0",
    "kernel.c1",
    "kernel.c2",
    "grid.N",
    "run.T",
    "run.mode",
    "step.cfl",
    "step.dt_min",
    "step.dt_max",
    "step.vacuum_eps",
    "step.gradient_cap",
    "init.preset",
    "init.rho_bar",
    "init.amplitude",
    "init.mode_m",
    "init.u_amplitude",
    "init.mode_n",
    "init.modes",
    "init.seed",
    "output.dir",
    "output.diag_dt",
    "output.snapshot_dt",
    "output.energy_every",
];

fn range_err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Range { key: key.into(), message: message.into() }
}

impl RunConfig {
    /// Parse the documented flat format; unknown keys are errors, later
    /// assignments to the same key win, and defaults fill the rest.
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut beta_set = false;
        let mut saw = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line, text: raw.trim().into() })?;
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey { line, key: key.into() });
            }
            cfg.assign(key, value)?;
            if key == "kernel.beta" {
                beta_set = true;
            }
            saw.insert(key.to_string());
        }
        if !beta_set {
            cfg.kernel.beta = 0.5 * cfg.kernel.alpha;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Assign one key from its string form (also the sweep-axis entry
    /// point). Does not re-run cross-field validation.
    pub fn assign(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let f = |v: &str| -> Result<f64, ConfigError> {
            v.parse::<f64>().map_err(|_| range_err(key, format!("`{v}` is not a number")))
        };
        let u = |v: &str| -> Result<u64, ConfigError> {
            v.parse::<u64>().map_err(|_| range_err(key, format!("`{v}` is not an integer")))
        };
        match key {
            "kernel.type" => {
                self.kernel.kind = match value {
                    "power_pair" => KernelKind::PowerPair,
                    "custom_table" => KernelKind::CustomTable,
                    other => {
                        return Err(range_err(key, format!("`{other}` not in {{power_pair, custom_table}}")))
                    }
                }
            }
            "kernel.alpha" => {
                let v = f(value)?;
                if !(v > 0.0 && v < 2.0) {
                    return Err(range_err(key, format!("{v} outside (0, 2)")));
                }
                self.kernel.alpha = v;
            }
            "kernel.beta" => {
                let v = f(value)?;
                if !(v > 0.0 && v < 2.0) {
                    return Err(range_err(key, format!("{v} outside (0, 2)")));
                }
                self.kernel.beta = v;
            }
            "kernel.mu" => {
                let v = f(value)?;
                if v < 0.0 {
                    return Err(range_err(key, format!("{v} is negative")));
                }
                self.kernel.mu = v;
            }
            "kernel.images" => {
                let v = u(value)?;
                if v == 0 {
                    return Err(range_err(key, "must be >= 1"));
                }
                self.kernel.images = v as usize;
            }
            "kernel.table" => self.kernel.table = Some(PathBuf::from(value)),
            "kernel.a0" => {
                let v = f(value)?;
                if !(v > 0.0 && v <= 0.5) {
                    return Err(range_err(key, format!("{v} outside (0, 1/2]")));
                }
                self.kernel.a0 = Some(v);
            }
            "kernel.c1" => {
                let v = f(value)?;
                if v < 1.0 {
                    return Err(range_err(key, format!("{v} must be >= 1")));
                }
                self.kernel.c1 = Some(v);
            }
            "kernel.c2" => {
                let v = f(value)?;
                if v < 0.0 {
                    return Err(range_err(key, format!("{v} is negative")));
                }
                self.kernel.c2 = Some(v);
            }
            "grid.N" => {
                let v = u(value)? as usize;
                if v < 16 || v % 2 != 0 {
                    return Err(range_err(key, format!("{v} must be even and >= 16")));
                }
                self.grid_n = v;
            }
            "run.T" => {
                let v = f(value)?;
                if !(v > 0.0) {
                    return Err(range_err(key, format!("{v} must be positive")));
                }
                self.t_end = v;
            }
            "run.mode" => {
                self.mode = match value {
                    "euler_alignment" => RunMode::EulerAlignment,
                    "burgers" => RunMode::Burgers,
                    other => {
                        return Err(range_err(key, format!("`{other}` not in {{euler_alignment, burgers}}")))
                    }
                }
            }
            "step.cfl" => {
                let v = f(value)?;
                if !(v > 0.0 && v <= 1.0) {
                    return Err(range_err(key, format!("{v} outside (0, 1]")));
                }
                self.step.cfl = v;
            }
            "step.dt_min" => {
                let v = f(value)?;
                if !(v > 0.0) {
                    return Err(range_err(key, "must be positive"));
                }
                self.step.dt_min = v;
            }
            "step.dt_max" => {
                let v = f(value)?;
                if !(v > 0.0) {
                    return Err(range_err(key, "must be positive"));
                }
                self.step.dt_max = v;
            }
            "step.vacuum_eps" => {
                let v = f(value)?;
                if !(v > 0.0) {
                    return Err(range_err(key, "must be positive"));
                }
                self.step.vacuum_eps = v;
            }
            "step.gradient_cap" => {
                let v = f(value)?;
                if !(v > 0.0) {
                    return Err(range_err(key, "must be positive"));
                }
                self.step.gradient_cap = v;
            }
            "init.preset" => {
                if !["cosine", "near_vacuum", "random_bandlimited"].contains(&value) {
                    return Err(range_err(key, format!("`{value}` not a known preset")));
                }
                self.init.preset = value.into();
            }
            "init.rho_bar" => {
                let v = f(value)?;
                if !(v > 0.0) {
                    return Err(range_err(key, "must be positive"));
                }
                self.init.rho_bar = v;
            }
            "init.amplitude" => {
                let v = f(value)?;
                if v < 0.0 {
                    return Err(range_err(key, "must be nonnegative"));
                }
                self.init.amplitude = v;
            }
            "init.mode_m" => self.init.mode_m = u(value)?.max(1) as u32,
            "init.u_amplitude" => {
                let v = f(value)?;
                if !v.is_finite() {
                    return Err(range_err(key, "must be finite"));
                }
                self.init.u_amplitude = v;
            }
            "init.mode_n" => self.init.mode_n = u(value)?.max(1) as u32,
            "init.modes" => {
                let v = u(value)?;
                if v == 0 {
                    return Err(range_err(key, "must be >= 1"));
                }
                self.init.modes = v as u32;
            }
            "init.seed" => self.init.seed = u(value)?,
            "output.dir" => self.output.dir = PathBuf::from(value),
            "output.diag_dt" => {
                let v = f(value)?;
                if !(v > 0.0) {
                    return Err(range_err(key, "must be positive"));
                }
                self.output.diag_dt = v;
            }
            "output.snapshot_dt" => {
                let v = f(value)?;
                if !(v > 0.0) {
                    return Err(range_err(key, "must be positive"));
                }
                self.output.snapshot_dt = v;
            }
            "output.energy_every" => {
                let v = u(value)?;
                if v == 0 {
                    return Err(range_err(key, "must be >= 1"));
                }
                self.output.energy_every = v as usize;
            }
            other => {
                return Err(ConfigError::UnknownKey { line: 0, key: other.into() });
            }
        }
        Ok(())
    }

    /// Cross-field checks.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.kernel.kind == KernelKind::PowerPair && self.kernel.beta >= self.kernel.alpha {
            return Err(range_err(
                "kernel.beta",
                format!("{} must be below kernel.alpha = {}", self.kernel.beta, self.kernel.alpha),
            ));
        }
        if self.kernel.kind == KernelKind::CustomTable {
            if self.kernel.table.is_none() {
                return Err(ConfigError::Missing("kernel.table"));
            }
            if self.kernel.a0.is_none() {
                return Err(ConfigError::Missing("kernel.a0"));
            }
            if self.kernel.c1.is_none() {
                return Err(ConfigError::Missing("kernel.c1"));
            }
            if self.kernel.c2.is_none() {
                return Err(ConfigError::Missing("kernel.c2"));
            }
        }
        self.step.validate().map_err(|m| range_err("step.dt_min", m))?;
        if self.init.amplitude >= self.init.rho_bar
            && self.init.preset != "near_vacuum"
            && self.mode == RunMode::EulerAlignment
        {
            return Err(range_err(
                "init.amplitude",
                format!("{} must stay below init.rho_bar = {}", self.init.amplitude, self.init.rho_bar),
            ));
        }
        Ok(())
    }

    /// Canonical text form; `parse(serialize(c))` reproduces `c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let kind = match self.kernel.kind {
            KernelKind::PowerPair => "power_pair",
            KernelKind::CustomTable => "custom_table",
        };
        s.push_str(&format!("kernel.type = {kind}\n"));
        s.push_str(&format!("kernel.alpha = {:?}\n", self.kernel.alpha));
        s.push_str(&format!("kernel.beta = {:?}\n", self.kernel.beta));
        s.push_str(&format!("kernel.mu = {:?}\n", self.kernel.mu));
        s.push_str(&format!("kernel.images = {}\n", self.kernel.images));
        if let Some(t) = &self.kernel.table {
            s.push_str(&format!("kernel.table = {}\n", t.display()));
        }
        if let Some(v) = self.kernel.a0 {
            s.push_str(&format!("kernel.a0 = {v:?}\n"));
        }
        if let Some(v) = self.kernel.c1 {
            s.push_str(&format!("kernel.c1 = {v:?}\n"));
        }
        if let Some(v) = self.kernel.c2 {
            s.push_str(&format!("kernel.c2 = {v:?}\n"));
        }
        s.push_str(&format!("grid.N = {}\n", self.grid_n));
        s.push_str(&format!("run.T = {:?}\n", self.t_end));
        let mode = match self.mode {
            RunMode::EulerAlignment => "euler_alignment",
            RunMode::Burgers => "burgers",
        };
        s.push_str(&format!("run.mode = {mode}\n"));
        s.push_str(&format!("step.cfl = {:?}\n", self.step.cfl));
        s.push_str(&format!("step.dt_min = {:?}\n", self.step.dt_min));
        s.push_str(&format!("step.dt_max = {:?}\n", self.step.dt_max));
        s.push_str(&format!("step.vacuum_eps = {:?}\n", self.step.vacuum_eps));
        s.push_str(&format!("step.gradient_cap = {:?}\n", self.step.gradient_cap));
        s.push_str(&format!("init.preset = {}\n", self.init.preset));
        s.push_str(&format!("init.rho_bar = {:?}\n", self.init.rho_bar));
        s.push_str(&format!("init.amplitude = {:?}\n", self.init.amplitude));
        s.push_str(&format!("init.mode_m = {}\n", self.init.mode_m));
        s.push_str(&format!("init.u_amplitude = {:?}\n", self.init.u_amplitude));
        s.push_str(&format!("init.mode_n = {}\n", self.init.mode_n));
        s.push_str(&format!("init.modes = {}\n", self.init.modes));
        s.push_str(&format!("init.seed = {}\n", self.init.seed));
        s.push_str(&format!("output.dir = {}\n", self.output.dir.display()));
        s.push_str(&format!("output.diag_dt = {:?}\n", self.output.diag_dt));
        s.push_str(&format!("output.snapshot_dt = {:?}\n", self.output.snapshot_dt));
        s.push_str(&format!("output.energy_every = {}\n", self.output.energy_every));
        s
    }

    /// Build the influence kernel this config describes.
    pub fn build_kernel(&self) -> Result<Arc<dyn Kernel>, ConfigError> {
        match self.kernel.kind {
            KernelKind::PowerPair => Ok(Arc::new(PowerLawPairKernel::new(
                self.kernel.alpha,
                self.kernel.beta,
                self.kernel.mu,
            )?)),
            KernelKind::CustomTable => {
                let path = self.kernel.table.as_ref().expect("validated");
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Table {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                let table = parse_kernel_table(&text).map_err(|m| ConfigError::Table {
                    path: path.display().to_string(),
                    message: m,
                })?;
                let alpha = self.kernel.alpha;
                let a0 = self.kernel.a0.expect("validated");
                let c1 = self.kernel.c1.expect("validated");
                let c2 = self.kernel.c2.expect("validated");
                Ok(Arc::new(GeneralKernel::new(
                    alpha,
                    a0,
                    c1,
                    c2,
                    table_evaluator(table, alpha),
                )?))
            }
        }
    }

    /// The initial-data preset this config describes.
    pub fn preset(&self) -> InitPreset {
        match self.init.preset.as_str() {
            "cosine" => InitPreset::Cosine {
                rho_bar: self.init.rho_bar,
                amplitude: self.init.amplitude,
                mode_m: self.init.mode_m,
                u_amplitude: self.init.u_amplitude,
                mode_n: self.init.mode_n,
            },
            "near_vacuum" => InitPreset::NearVacuum {
                rho_bar: self.init.rho_bar,
                amplitude: self.init.amplitude,
                u_amplitude: self.init.u_amplitude,
            },
            "random_bandlimited" => InitPreset::RandomBandlimited {
                rho_bar: self.init.rho_bar,
                amplitude: self.init.amplitude,
                u_amplitude: self.init.u_amplitude,
                modes: self.init.modes,
                seed: self.init.seed,
            },
            other => unreachable!("validated preset {other}"),
        }
    }
}

/// Parse a two-column `x phi(x)` text table (whitespace or comma separated,
/// `#` comments, x strictly increasing and positive).
pub fn parse_kernel_table(text: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let stripped = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        let parts: Vec<&str> =
            stripped.split(|c: char| c == ',' || c.is_whitespace()).filter(|p| !p.is_empty()).collect();
        if parts.len() != 2 {
            return Err(format!("line {}: expected two columns", idx + 1));
        }
        let x: f64 = parts[0].parse().map_err(|_| format!("line {}: bad x", idx + 1))?;
        let phi: f64 = parts[1].parse().map_err(|_| format!("line {}: bad phi", idx + 1))?;
        if x <= 0.0 {
            return Err(format!("line {}: x must be positive", idx + 1));
        }
        if let Some(&(px, _)) = rows.last() {
            if x <= px {
                return Err(format!("line {}: x must be strictly increasing", idx + 1));
            }
        }
        rows.push((x, phi));
    }
    if rows.len() < 4 {
        return Err("table needs at least 4 rows".into());
    }
    Ok(rows)
}

/// Evaluator for a tabulated kernel: linear interpolation inside the table,
/// the declared power law below its first point, zero beyond its last.
fn table_evaluator(table: Vec<(f64, f64)>, alpha: f64) -> impl Fn(f64) -> f64 + Send + Sync {
    move |x: f64| {
        let r = x.abs();
        let (x0, phi0) = table[0];
        if r < x0 {
            return phi0 * (r / x0).powf(-1.0 - alpha);
        }
        let (xl, _) = *table.last().expect("nonempty");
        if r > xl {
            return 0.0;
        }
        let pos = table.partition_point(|&(x, _)| x <= r).min(table.len() - 1);
        let (xa, pa) = table[pos - 1];
        let (xb, pb) = table[pos];
        pa + (pb - pa) * (r - xa) / (xb - xa)
    }
}

/// Parse a standalone modulus-of-continuity spec file
/// (`moc.delta`, `moc.gamma`, `moc.lambda` or `moc.ln_lambda`, `moc.alpha`).
pub fn parse_moc_spec(text: &str) -> Result<MocSpec, ConfigError> {
    let mut delta = None;
    let mut gamma = None;
    let mut lambda = None;
    let mut ln_lambda = None;
    let mut alpha = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line, text: raw.trim().into() })?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| range_err(key.trim(), format!("`{}` is not a number", value.trim())))?;
        match key.trim() {
            "moc.delta" => delta = Some(v),
            "moc.gamma" => gamma = Some(v),
            "moc.lambda" => lambda = Some(v),
            "moc.ln_lambda" => ln_lambda = Some(v),
            "moc.alpha" => alpha = Some(v),
            other => return Err(ConfigError::UnknownKey { line, key: other.into() }),
        }
    }
    let delta = delta.ok_or(ConfigError::Missing("moc.delta"))?;
    let gamma = gamma.ok_or(ConfigError::Missing("moc.gamma"))?;
    let alpha = alpha.ok_or(ConfigError::Missing("moc.alpha"))?;
    let spec = match (lambda, ln_lambda) {
        (Some(l), _) => MocSpec::new(delta, gamma, l, alpha)?,
        (None, Some(ll)) => MocSpec::from_ln_lambda(delta, gamma, ll, alpha)?,
        (None, None) => return Err(ConfigError::Missing("moc.lambda")),
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::parse("kernel.type = power_pair\ngrid.N = 64\nrun.T = 0.5\n").unwrap();
        assert_eq!(cfg.grid_n, 64);
        assert_eq!(cfg.t_end, 0.5);
        assert_eq!(cfg.kernel.alpha, 1.5);
        assert_eq!(cfg.kernel.beta, 0.75);
        assert_eq!(cfg.output.energy_every, 50);
        assert_eq!(cfg.mode, RunMode::EulerAlignment);
    }

    #[test]
    fn out_of_range_alpha_names_key() {
        let err = RunConfig::parse("kernel.alpha = 2.5\n").unwrap_err();
        match err {
            ConfigError::Range { key, .. } => assert_eq!(key, "kernel.alpha"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_key_and_syntax_errors_carry_lines() {
        let err = RunConfig::parse("grid.N = 64\nkernel.spice = 1\n").unwrap_err();
        match err {
            ConfigError::UnknownKey { line, key } => {
                assert_eq!(line, 2);
                assert_eq!(key, "kernel.spice");
            }
            other => panic!("unexpected {other}"),
        }
        let err = RunConfig::parse("grid.N 64\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
    }

    #[test]
    fn serialize_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.kernel.alpha = 1.2;
        cfg.kernel.beta = 0.4;
        cfg.kernel.mu = 1.0;
        cfg.init.preset = "random_bandlimited".into();
        cfg.init.seed = 777;
        cfg.t_end = 2.5;
        let text = cfg.serialize();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(text, back.serialize());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = RunConfig::parse(
            "# a comment\n\nkernel.type = power_pair # trailing\n  grid.N = 32  \nrun.T = 1\n",
        )
        .unwrap();
        assert_eq!(cfg.grid_n, 32);
    }

    #[test]
    fn custom_table_requires_declarations() {
        let err = RunConfig::parse("kernel.type = custom_table\nrun.T = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Missing("kernel.table")));
    }

    #[test]
    fn kernel_table_parsing_and_evaluation() {
        let rows = parse_kernel_table("# x phi\n0.01 100.0\n0.1, 10.0\n0.2 5.0\n0.4 0.0\n").unwrap();
        assert_eq!(rows.len(), 4);
        let ev = table_evaluator(rows, 1.0);
        assert!((ev(0.15) - 7.5).abs() < 1e-12);
        assert_eq!(ev(0.5), 0.0);
        // Power extension below the first point.
        assert!((ev(0.005) - 100.0 * 2f64.powf(2.0)).abs() < 1e-9);
        assert!(parse_kernel_table("0.1 1\n0.05 2\n0.2 1\n0.3 1\n").is_err());
    }

    #[test]
    fn moc_spec_file_round_trip() {
        let s = parse_moc_spec("moc.delta = 0.2\nmoc.gamma = 0.05\nmoc.lambda = 0.02\nmoc.alpha = 1.0\n")
            .unwrap();
        assert_eq!(s.delta, 0.2);
        let s2 = parse_moc_spec(
            "moc.delta = 1e-4\nmoc.gamma = 4e-5\nmoc.ln_lambda = -25000\nmoc.alpha = 1.2\n",
        )
        .unwrap();
        assert_eq!(s2.ln_lambda(), -25000.0);
        assert!(parse_moc_spec("moc.delta = 0.1\n").is_err());
    }
}
