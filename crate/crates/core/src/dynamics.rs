//! Evolution of the reformulated system: the state is `(rho, G)` with
//! `G = du/dx - L rho`, both satisfying continuity equations, and the
//! velocity is reconstructed from mean-free primitives plus the conserved
//! momentum. Classical RK4 in time with a density-weighted dissipative
//! step bound and a CFL advective bound.

use thiserror::Error;

use crate::field::{Field, FieldError, Grid};
use crate::rng::SplitMix64;
use crate::symbol::SymbolTable;

/// RK4 stability extent along the negative real axis, rounded down.
const RK4_STAB: f64 = 2.5;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("vacuum state: min rho = {0:.6e}")]
    Vacuum(f64),
    #[error("non-finite field values at t = {0:.6e}")]
    NonFinite(f64),
    #[error("stable step {dt:.3e} fell below dt_min = {dt_min:.3e} at t = {t:.6e} (blow-up suspected)")]
    DtCollapse { t: f64, dt: f64, dt_min: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Time plus the generating pair of the reformulated system.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub rho: Field,
    pub g: Field,
}

impl SimState {
    pub fn new(rho: Field, g: Field) -> SimState {
        SimState { t: 0.0, rho, g }
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.g.is_finite()
    }
}

/// Everything reconstructed from `(rho, G)`: primitives, velocity, and the
/// transported ratio `F = G / rho`.
#[derive(Debug, Clone)]
pub struct DerivedFields {
    /// Mean-free primitive of `theta = rho - mean(rho)`.
    pub varphi: Field,
    /// Mean-free primitive of `G`.
    pub psi: Field,
    pub u: Field,
    pub dxu: Field,
    pub f: Field,
    /// Constant mode of the velocity fixed by momentum conservation.
    pub i0: f64,
}

/// Step-size policy and abort thresholds.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub vacuum_eps: f64,
    /// Abort threshold for the oscillation monitor (`|d_x rho|_inf` for
    /// `alpha <= 1`, `|d_x^2 rho|_inf` for `alpha > 1`).
    pub gradient_cap: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            cfl: 0.4,
            dt_min: 1e-11,
            dt_max: 1e-2,
            vacuum_eps: 1e-6,
            gradient_cap: 1e6,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max) {
            return Err(format!(
                "need 0 < dt_min <= dt_max, got {} and {}",
                self.dt_min, self.dt_max
            ));
        }
        if self.vacuum_eps <= 0.0 {
            return Err(format!("vacuum_eps = {} must be positive", self.vacuum_eps));
        }
        if self.cfl <= 0.0 || self.gradient_cap <= 0.0 {
            return Err("cfl and gradient_cap must be positive".into());
        }
        Ok(())
    }
}

/// `G0 = du0/dx - L rho0`. Both terms kill the mean mode, so the output is
/// mean-free to round-off.
pub fn compute_g0(rho0: &Field, u0: &Field, a: &SymbolTable) -> Result<Field, DynamicsError> {
    let mut g = u0.derivative();
    g.axpy(-1.0, &rho0.apply_multiplier(a)?);
    Ok(g)
}

/// Rebuild `u = psi + L varphi + I0` with `I0` fixed so that the discrete
/// momentum equals `p0` exactly.
pub fn reconstruct_velocity(
    state: &SimState,
    a: &SymbolTable,
    p0: f64,
) -> Result<DerivedFields, DynamicsError> {
    let min_rho = state.rho.min();
    if min_rho <= 0.0 {
        return Err(DynamicsError::Vacuum(min_rho));
    }
    let mass = state.rho.mean();
    let varphi = state.rho.add_scalar(-mass).mean_free_primitive()?;
    let psi = state.g.add_scalar(-state.g.mean()).mean_free_primitive()?;
    let mut u = psi.clone();
    u.axpy(1.0, &varphi.apply_multiplier(a)?);
    let rho_psi = state.rho.zip(&psi, |r, p| r * p)?.integral();
    let i0 = (p0 - rho_psi) / mass;
    let u = u.add_scalar(i0);
    let dxu = u.derivative();
    let f = state.g.zip(&state.rho, |g, r| g / r)?;
    Ok(DerivedFields { varphi, psi, u, dxu, f, i0 })
}

/// Right-hand side of the continuity pair:
/// `(d rho/dt, d G/dt) = (-(rho u)_x, -(G u)_x)` with dealiased products.
pub fn rhs(
    state: &SimState,
    a: &SymbolTable,
    p0: f64,
) -> Result<(Field, Field), DynamicsError> {
    let derived = reconstruct_velocity(state, a, p0)?;
    rhs_with_velocity(state, &derived.u)
}

fn rhs_with_velocity(state: &SimState, u: &Field) -> Result<(Field, Field), DynamicsError> {
    let flux_rho = state.rho.dealiased_product(u)?;
    let flux_g = state.g.dealiased_product(u)?;
    Ok((flux_rho.derivative().scaled(-1.0), flux_g.derivative().scaled(-1.0)))
}

/// Stable step `min(cfl dx / |u|_inf, stab / (max rho * max A+))`,
/// before clamping.
pub fn stable_dt(state: &SimState, u_inf: f64, a: &SymbolTable, cfl: f64) -> f64 {
    let dx = state.rho.grid().dx();
    let adv = if u_inf > 0.0 { cfl * dx / u_inf } else { f64::INFINITY };
    let diss_scale = state.rho.max() * a.max_positive();
    let diss = if diss_scale > 0.0 { RK4_STAB / diss_scale } else { f64::INFINITY };
    adv.min(diss)
}

/// One classical RK4 step. `dt_cap` additionally limits the step (used to
/// land exactly on output times); the cap never triggers the collapse error.
pub fn advance_capped(
    state: &SimState,
    control: &StepControl,
    a: &SymbolTable,
    p0: f64,
    dt_cap: f64,
) -> Result<(SimState, f64), DynamicsError> {
    let derived = reconstruct_velocity(state, a, p0)?;
    let raw = stable_dt(state, derived.u.linf(), a, control.cfl);
    if raw < control.dt_min {
        return Err(DynamicsError::DtCollapse { t: state.t, dt: raw, dt_min: control.dt_min });
    }
    let dt = raw.min(control.dt_max).min(dt_cap);

    let (k1r, k1g) = rhs_with_velocity(state, &derived.u)?;
    let probe = |rho: &Field, g: &Field, t: f64| SimState { t, rho: rho.clone(), g: g.clone() };

    let mut rho2 = state.rho.clone();
    rho2.axpy(0.5 * dt, &k1r);
    let mut g2 = state.g.clone();
    g2.axpy(0.5 * dt, &k1g);
    let (k2r, k2g) = rhs(&probe(&rho2, &g2, state.t + 0.5 * dt), a, p0)?;

    let mut rho3 = state.rho.clone();
    rho3.axpy(0.5 * dt, &k2r);
    let mut g3 = state.g.clone();
    g3.axpy(0.5 * dt, &k2g);
    let (k3r, k3g) = rhs(&probe(&rho3, &g3, state.t + 0.5 * dt), a, p0)?;

    let mut rho4 = state.rho.clone();
    rho4.axpy(dt, &k3r);
    let mut g4 = state.g.clone();
    g4.axpy(dt, &k3g);
    let (k4r, k4g) = rhs(&probe(&rho4, &g4, state.t + dt), a, p0)?;

    let sixth = dt / 6.0;
    let mut rho = state.rho.clone();
    rho.axpy(sixth, &k1r);
    rho.axpy(2.0 * sixth, &k2r);
    rho.axpy(2.0 * sixth, &k3r);
    rho.axpy(sixth, &k4r);
    let mut g = state.g.clone();
    g.axpy(sixth, &k1g);
    g.axpy(2.0 * sixth, &k2g);
    g.axpy(2.0 * sixth, &k3g);
    g.axpy(sixth, &k4g);

    let next = SimState { t: state.t + dt, rho, g };
    if !next.is_finite() {
        return Err(DynamicsError::NonFinite(next.t));
    }
    Ok((next, dt))
}

/// One step with only the policy bounds.
pub fn advance(
    state: &SimState,
    control: &StepControl,
    a: &SymbolTable,
    p0: f64,
) -> Result<(SimState, f64), DynamicsError> {
    advance_capped(state, control, a, p0, f64::INFINITY)
}

/// Why a run stopped.
#[derive(Debug, Clone)]
pub enum Termination {
    Completed,
    Vacuum { t: f64, min_rho: f64 },
    GradientBlowup { t: f64, value: f64 },
    DtCollapse { t: f64, dt: f64 },
    NonFinite { t: f64 },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Vacuum { .. } => "vacuum",
            Termination::GradientBlowup { .. } => "gradient_blowup",
            Termination::DtCollapse { .. } => "dt_collapse",
            Termination::NonFinite { .. } => "non_finite",
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }

    /// Process exit code contract: 3 for physical aborts, 4 for numeric ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            Termination::Completed => 0,
            Termination::Vacuum { .. }
            | Termination::GradientBlowup { .. }
            | Termination::DtCollapse { .. } => 3,
            Termination::NonFinite { .. } => 4,
        }
    }
}

/// A stored `(t, rho, G)` sample.
#[derive(Debug, Clone)]
pub struct StateSnapshot {
    pub t: f64,
    pub rho: Field,
    pub g: Field,
}

/// Output cadence and stopping data for [`run`].
pub struct RunSetup<'a> {
    pub symbol: &'a SymbolTable,
    pub pk: &'a crate::kernel::PeriodizedKernel,
    pub control: StepControl,
    pub t_end: f64,
    pub diag_dt: f64,
    pub snapshot_dt: f64,
    /// Energy fluctuation is measured every this many diagnostic samples.
    pub energy_every: usize,
}

/// Full trajectory output of one run.
#[derive(Debug)]
pub struct RunResult {
    pub termination: Termination,
    pub records: Vec<crate::diagnostics::DiagnosticsRecord>,
    pub snapshots: Vec<StateSnapshot>,
    pub violations: Vec<crate::diagnostics::Violation>,
    pub consts: crate::diagnostics::TheoryConstants,
    pub final_state: SimState,
    pub mass0: f64,
    pub p0: f64,
    /// Per-step running minimum of the density.
    pub min_rho_over_run: f64,
    /// Per-step running maximum of the oscillation monitor.
    pub max_osc_over_run: f64,
}

/// Integrate from `t = 0` to `t_end`, emitting diagnostics every `diag_dt`
/// and snapshots every `snapshot_dt` (steps land exactly on those times).
/// Terminates early on vacuum, oscillation-cap, step-collapse or
/// non-finite events; the terminal sample is always recorded.
#[allow(unused_assignments)] // the emit_diag! bookkeeping outlives its last expansion
pub fn run(
    rho0: Field,
    u0: Field,
    setup: &RunSetup,
) -> Result<RunResult, crate::diagnostics::DiagnosticsError> {
    use crate::diagnostics::{
        bound_report, conservation_report, oscillation_report, DiagnosticsRecord, EnergyDiag,
        TheoryConstants, Violation, BOUND_TOL,
    };

    let g0 = compute_g0(&rho0, &u0, setup.symbol)?;
    let consts = TheoryConstants::compute(setup.pk, &rho0, &g0)?;
    let mass0 = rho0.integral();
    let p0 = rho0.zip(&u0, |r, u| r * u).map_err(DynamicsError::from)?.integral();
    // The monitor follows the blow-up-criterion split on alpha.
    let monitor_second = consts.alpha > 1.0;

    let mut state = SimState::new(rho0, g0);
    let mut energy = EnergyDiag::new(setup.pk, state.rho.grid().n());
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let mut snapshots: Vec<StateSnapshot> = Vec::new();
    let mut violations: Vec<Violation> = Vec::new();
    let mut prev_f: Option<(f64, f64)> = None;
    let mut prev_h: Option<(f64, f64)> = None;
    let mut last_energy = (0.0, 0.0);
    let mut diag_count = 0usize;
    let mut next_diag = 0.0f64;
    let mut next_snap = 0.0f64;
    let mut last_diag_t = f64::NEG_INFINITY;
    let mut last_dt = 0.0f64;
    let mut min_rho_run = f64::INFINITY;
    let mut max_osc_run = 0.0f64;
    let eps = 1e-12 * setup.t_end.max(1.0);

    macro_rules! emit_diag {
        () => {{
            if state.t > last_diag_t + eps && state.rho.min() > 0.0 {
                let derived = reconstruct_velocity(&state, setup.symbol, p0)?;
                let cons = conservation_report(&state, &derived, mass0, p0);
                let bounds = bound_report(&state, &derived, &consts);
                violations.extend(bounds.violations.iter().cloned());
                if let Some((tp, fp)) = prev_f {
                    if bounds.max_abs_f > fp + BOUND_TOL * (state.t - tp) {
                        violations.push(Violation {
                            name: "max_principle_F",
                            t: state.t,
                            value: bounds.max_abs_f,
                            bound: fp,
                        });
                    }
                }
                if let Some((tp, hp)) = prev_h {
                    if bounds.max_abs_h > hp + BOUND_TOL * (state.t - tp) {
                        violations.push(Violation {
                            name: "max_principle_H",
                            t: state.t,
                            value: bounds.max_abs_h,
                            bound: hp,
                        });
                    }
                }
                prev_f = Some((state.t, bounds.max_abs_f));
                prev_h = Some((state.t, bounds.max_abs_h));
                let (d1, d2) = oscillation_report(&state.rho);
                let (e, res) = if diag_count % setup.energy_every == 0 {
                    let (e, _r, res) = energy.measure(&state, &derived.u);
                    last_energy = (e, res);
                    (e, res)
                } else {
                    last_energy
                };
                records.push(DiagnosticsRecord {
                    t: state.t,
                    mass: cons.mass,
                    momentum: cons.momentum,
                    int_g: cons.int_g,
                    min_rho: bounds.min_rho,
                    max_rho: bounds.max_rho,
                    lower_bound: bounds.lower_bound,
                    upper_bound_m1: bounds.upper_bound_m1,
                    max_abs_f: bounds.max_abs_f,
                    max_abs_h: bounds.max_abs_h,
                    max_abs_dxrho: d1,
                    max_abs_dx2rho: d2,
                    energy_fluct: e,
                    energy_fluct_rate_residual: res,
                    linf_u: derived.u.linf(),
                    linf_dxu: derived.dxu.linf(),
                    dt: last_dt,
                });
                diag_count += 1;
                last_diag_t = state.t;
            }
        }};
    }

    let termination = loop {
        if state.t + eps >= next_diag {
            emit_diag!();
            next_diag += setup.diag_dt;
        }
        if state.t + eps >= next_snap {
            snapshots.push(StateSnapshot { t: state.t, rho: state.rho.clone(), g: state.g.clone() });
            next_snap += setup.snapshot_dt;
        }

        let min_rho = state.rho.min();
        min_rho_run = min_rho_run.min(min_rho);
        let (d1, d2) = oscillation_report(&state.rho);
        let osc = if monitor_second { d2 } else { d1 };
        max_osc_run = max_osc_run.max(osc);
        if min_rho < setup.control.vacuum_eps {
            break Termination::Vacuum { t: state.t, min_rho };
        }
        if osc > setup.control.gradient_cap {
            break Termination::GradientBlowup { t: state.t, value: osc };
        }
        if state.t + eps >= setup.t_end {
            break Termination::Completed;
        }

        let next_event = next_diag.min(next_snap).min(setup.t_end);
        let cap = (next_event - state.t).max(0.0);
        match advance_capped(&state, &setup.control, setup.symbol, p0, cap) {
            Ok((mut s, dt)) => {
                if (s.t - next_event).abs() < eps {
                    s.t = next_event;
                }
                last_dt = dt;
                state = s;
            }
            Err(DynamicsError::DtCollapse { t, dt, .. }) => {
                break Termination::DtCollapse { t, dt };
            }
            Err(DynamicsError::NonFinite(t)) => break Termination::NonFinite { t },
            Err(DynamicsError::Vacuum(m)) => {
                break Termination::Vacuum { t: state.t, min_rho: m };
            }
            Err(e @ DynamicsError::Field(_)) => return Err(e.into()),
        }
    };

    // Terminal sample, if the loop broke between scheduled emissions.
    if state.is_finite() {
        emit_diag!();
        if snapshots.last().map(|s| state.t > s.t + eps).unwrap_or(true) {
            snapshots.push(StateSnapshot { t: state.t, rho: state.rho.clone(), g: state.g.clone() });
        }
    }

    Ok(RunResult {
        termination,
        records,
        snapshots,
        violations,
        consts,
        final_state: state,
        mass0,
        p0,
        min_rho_over_run: min_rho_run,
        max_osc_over_run: max_osc_run,
    })
}

/// Initial-data presets. `G0` is always computed from `(rho0, u0)`, never
/// supplied directly.
#[derive(Debug, Clone)]
pub enum InitPreset {
    Cosine { rho_bar: f64, amplitude: f64, mode_m: u32, u_amplitude: f64, mode_n: u32 },
    NearVacuum { rho_bar: f64, amplitude: f64, u_amplitude: f64 },
    RandomBandlimited { rho_bar: f64, amplitude: f64, u_amplitude: f64, modes: u32, seed: u64 },
}

/// Build `(rho0, u0)` on a grid.
pub fn build_initial(grid: &Grid, preset: &InitPreset) -> (Field, Field) {
    use std::f64::consts::PI;
    match *preset {
        InitPreset::Cosine { rho_bar, amplitude, mode_m, u_amplitude, mode_n } => {
            let rho = Field::from_fn(grid, |x| {
                rho_bar + amplitude * (2.0 * PI * mode_m as f64 * x).cos()
            });
            let u = Field::from_fn(grid, |x| {
                u_amplitude * (2.0 * PI * mode_n as f64 * x).sin()
            });
            (rho, u)
        }
        InitPreset::NearVacuum { rho_bar, amplitude, u_amplitude } => {
            let rho = Field::from_fn(grid, |x| rho_bar + amplitude * (2.0 * PI * x).cos());
            // A small velocity kick; the exact rest state (rho0, 0) is an
            // equilibrium of the pressureless dynamics.
            let u = Field::from_fn(grid, |x| u_amplitude * (2.0 * PI * x).sin());
            (rho, u)
        }
        InitPreset::RandomBandlimited { rho_bar, amplitude, u_amplitude, modes, seed } => {
            let mut rng = SplitMix64::new(seed);
            let draw_bump = |rng: &mut SplitMix64| {
                let coeffs: Vec<(f64, f64)> = (1..=modes)
                    .map(|k| {
                        let s = 1.0 / k as f64;
                        (s * rng.next_symmetric(), s * rng.next_symmetric())
                    })
                    .collect();
                let raw = Field::from_fn(grid, |x| {
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(i, &(a, b))| {
                            let w = 2.0 * PI * (i + 1) as f64 * x;
                            a * w.cos() + b * w.sin()
                        })
                        .sum()
                });
                let sup = raw.linf();
                if sup > 0.0 {
                    raw.scaled(1.0 / sup)
                } else {
                    raw
                }
            };
            let bump_rho = draw_bump(&mut rng);
            let bump_u = draw_bump(&mut rng);
            (bump_rho.scaled(amplitude).add_scalar(rho_bar), bump_u.scaled(u_amplitude))
        }
    }
}


#[cfg(test)]
mod run_tests {
    use super::*;
    use crate::field::Grid;
    use crate::kernel::{Kernel, PeriodizedKernel, PowerLawPairKernel};
    use std::sync::Arc;

    fn full_setup(
        n: usize,
        alpha: f64,
        beta: f64,
        mu: f64,
    ) -> (Grid, PeriodizedKernel, SymbolTable) {
        let g = Grid::new(n).unwrap();
        let k = PowerLawPairKernel::new(alpha, beta, mu).unwrap();
        let a = SymbolTable::closed_form(&g, alpha, beta, mu);
        let pk = PeriodizedKernel::new(Arc::new(k) as Arc<dyn Kernel>, 64).unwrap();
        (g, pk, a)
    }

    #[test]
    fn constant_run_completes_unchanged() {
        let (g, pk, a) = full_setup(64, 1.2, 0.4, 1.0);
        let setup = RunSetup {
            symbol: &a,
            pk: &pk,
            control: StepControl::default(),
            t_end: 0.5,
            diag_dt: 0.1,
            snapshot_dt: 0.25,
            energy_every: 2,
        };
        let res = run(Field::constant(&g, 1.0), Field::zeros(&g), &setup).unwrap();
        assert!(res.termination.is_completed());
        assert!((res.final_state.t - 0.5).abs() < 1e-9);
        for v in res.final_state.rho.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!(res.violations.is_empty());
        // Diagnostics at 0, 0.1, ..., 0.5.
        assert_eq!(res.records.len(), 6);
        assert!(res.records.iter().all(|r| r.all_finite()));
        // Snapshots at 0, 0.25, 0.5.
        assert_eq!(res.snapshots.len(), 3);
    }

    #[test]
    fn smooth_run_conserves_and_respects_bounds() {
        let (g, pk, a) = full_setup(128, 1.2, 0.4, 1.0);
        let (rho0, u0) = build_initial(
            &g,
            &InitPreset::Cosine {
                rho_bar: 1.0,
                amplitude: 0.2,
                mode_m: 1,
                u_amplitude: 0.1,
                mode_n: 1,
            },
        );
        let setup = RunSetup {
            symbol: &a,
            pk: &pk,
            control: StepControl::default(),
            t_end: 0.2,
            diag_dt: 0.02,
            snapshot_dt: 0.1,
            energy_every: 5,
        };
        let res = run(rho0, u0, &setup).unwrap();
        assert!(res.termination.is_completed(), "{:?}", res.termination);
        assert!(res.violations.is_empty(), "{:?}", res.violations);
        for r in &res.records {
            assert!((r.mass - res.mass0).abs() / res.mass0 < 1e-10);
            assert!((r.momentum - res.p0).abs() < 1e-10);
            assert!(r.int_g.abs() < 1e-10);
        }
    }

    #[test]
    fn vacuum_abort_is_reported() {
        let (g, pk, a) = full_setup(64, 1.2, 0.4, 1.0);
        // Start barely above the vacuum threshold with a compressive wave.
        let rho0 = Field::from_fn(&g, |x| {
            1.0 + (1.0 - 2e-4) * (2.0 * std::f64::consts::PI * x).cos()
        });
        let u0 = Field::from_fn(&g, |x| -(2.0 * std::f64::consts::PI * x).sin());
        let control = StepControl { vacuum_eps: 1e-4, ..Default::default() };
        let setup = RunSetup {
            symbol: &a,
            pk: &pk,
            control,
            t_end: 5.0,
            diag_dt: 0.05,
            snapshot_dt: 1.0,
            energy_every: 10,
        };
        let res = run(rho0, u0, &setup).unwrap();
        assert!(matches!(res.termination, Termination::Vacuum { .. }));
        assert!(res.min_rho_over_run < 2e-4);
    }
}
