//! Constant-density companion equation `u_t + u u_x = -(L u)` with the
//! two-power symbol, sharing the spectral and stepping machinery. Exists to
//! contrast the full system: the flat-state dynamics are linearly unstable
//! at misaligned wavenumbers, and for weak short-range dissipation steep
//! data steepen into a step-collapse blow-up signature.

use crate::dynamics::{DynamicsError, StepControl, Termination};
use crate::field::Field;
use crate::symbol::SymbolTable;

/// RK4 stability extent along the negative real axis (matches dynamics).
const RK4_STAB: f64 = 2.5;

#[derive(Debug, Clone)]
pub struct BurgersState {
    pub t: f64,
    pub u: Field,
}

/// `-dealias(u u_x) - L u`; mean-free by the product pairing and `A(0) = 0`.
pub fn burgers_rhs(u: &Field, a: &SymbolTable) -> Result<Field, DynamicsError> {
    let mut out = u.dealiased_product(&u.derivative())?.scaled(-1.0);
    out.axpy(-1.0, &u.apply_multiplier(a)?);
    Ok(out)
}

/// One RK4 step with `dt = min(cfl dx / |u|_inf, stab / max A+)`, capped.
pub fn burgers_advance(
    state: &BurgersState,
    control: &StepControl,
    a: &SymbolTable,
    dt_cap: f64,
) -> Result<(BurgersState, f64), DynamicsError> {
    let dx = state.u.grid().dx();
    let u_inf = state.u.linf();
    let adv = if u_inf > 0.0 { control.cfl * dx / u_inf } else { f64::INFINITY };
    let amax = a.max_positive();
    let diss = if amax > 0.0 { RK4_STAB / amax } else { f64::INFINITY };
    let raw = adv.min(diss);
    if raw < control.dt_min {
        return Err(DynamicsError::DtCollapse { t: state.t, dt: raw, dt_min: control.dt_min });
    }
    let dt = raw.min(control.dt_max).min(dt_cap);

    let k1 = burgers_rhs(&state.u, a)?;
    let mut u2 = state.u.clone();
    u2.axpy(0.5 * dt, &k1);
    let k2 = burgers_rhs(&u2, a)?;
    let mut u3 = state.u.clone();
    u3.axpy(0.5 * dt, &k2);
    let k3 = burgers_rhs(&u3, a)?;
    let mut u4 = state.u.clone();
    u4.axpy(dt, &k3);
    let k4 = burgers_rhs(&u4, a)?;

    let sixth = dt / 6.0;
    let mut u = state.u.clone();
    u.axpy(sixth, &k1);
    u.axpy(2.0 * sixth, &k2);
    u.axpy(2.0 * sixth, &k3);
    u.axpy(sixth, &k4);
    let next = BurgersState { t: state.t + dt, u };
    if !next.u.is_finite() {
        return Err(DynamicsError::NonFinite(next.t));
    }
    Ok((next, dt))
}

/// One diagnostics row of the companion run (no density columns).
#[derive(Debug, Clone, Copy)]
pub struct BurgersRecord {
    pub t: f64,
    pub mean_u: f64,
    pub linf_u: f64,
    pub linf_dxu: f64,
    pub linf_dx2u: f64,
    pub dt: f64,
}

impl BurgersRecord {
    pub const CSV_HEADER: &'static str = "t, mean_u, linf_u, linf_dxu, linf_dx2u, dt";

    pub fn csv_row(&self) -> String {
        [self.t, self.mean_u, self.linf_u, self.linf_dxu, self.linf_dx2u, self.dt]
            .iter()
            .map(|x| format!("{x:.16e}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug)]
pub struct BurgersRunResult {
    pub termination: Termination,
    pub records: Vec<BurgersRecord>,
    pub snapshots: Vec<(f64, Field)>,
    pub final_state: BurgersState,
    /// Running maximum of the gradient monitor `|u_x|_inf`.
    pub max_grad: f64,
    /// Time of the blow-up signature (dt collapse or gradient cap), if hit.
    pub blowup_time: Option<f64>,
}

/// Integrate the companion equation to `t_end` with the same cadence and
/// abort rules as the full system; the gradient monitor is `|u_x|_inf`.
pub fn burgers_run(
    u0: Field,
    a: &SymbolTable,
    control: &StepControl,
    t_end: f64,
    diag_dt: f64,
    snapshot_dt: f64,
) -> BurgersRunResult {
    let mut state = BurgersState { t: 0.0, u: u0 };
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut next_diag = 0.0f64;
    let mut next_snap = 0.0f64;
    let mut last_diag_t = f64::NEG_INFINITY;
    let mut last_dt = 0.0;
    let mut max_grad = 0.0f64;
    let eps = 1e-12 * t_end.max(1.0);

    let emit = |state: &BurgersState, last_dt: f64, records: &mut Vec<BurgersRecord>| {
        let dxu = state.u.derivative();
        records.push(BurgersRecord {
            t: state.t,
            mean_u: state.u.mean(),
            linf_u: state.u.linf(),
            linf_dxu: dxu.linf(),
            linf_dx2u: dxu.derivative().linf(),
            dt: last_dt,
        });
    };

    let termination = loop {
        if state.t + eps >= next_diag {
            emit(&state, last_dt, &mut records);
            last_diag_t = state.t;
            next_diag += diag_dt;
        }
        if state.t + eps >= next_snap {
            snapshots.push((state.t, state.u.clone()));
            next_snap += snapshot_dt;
        }
        let grad = state.u.derivative().linf();
        max_grad = max_grad.max(grad);
        if grad > control.gradient_cap {
            break Termination::GradientBlowup { t: state.t, value: grad };
        }
        if state.t + eps >= t_end {
            break Termination::Completed;
        }
        let next_event = next_diag.min(next_snap).min(t_end);
        let cap = (next_event - state.t).max(0.0);
        match burgers_advance(&state, control, a, cap) {
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
            Err(_) => break Termination::NonFinite { t: state.t },
        }
    };

    if state.u.is_finite() && state.t > last_diag_t + eps {
        emit(&state, last_dt, &mut records);
    }
    let blowup_time = match termination {
        Termination::DtCollapse { t, .. } | Termination::GradientBlowup { t, .. } => Some(t),
        _ => None,
    };
    BurgersRunResult {
        termination,
        records,
        snapshots,
        final_state: state,
        max_grad,
        blowup_time,
    }
}
