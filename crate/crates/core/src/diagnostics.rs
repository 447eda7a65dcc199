//! Runtime verification: conserved quantities, the explicit density
//! envelopes with the constants from the bound proofs, the transported
//! maximum principles on `F = G/rho` and `H = F_x/rho`, the energy
//! fluctuation identity, and the blow-up-criterion monitors.

use thiserror::Error;

use crate::dynamics::{DerivedFields, DynamicsError, SimState};
use crate::field::Field;
use crate::kernel::PeriodizedKernel;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("initial density not positive: min rho0 = {0:.6e}")]
    NonpositiveDensity(f64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Absolute slack separating genuine bound violations from discretization
/// noise.
pub const BOUND_TOL: f64 = 1e-6;

/// Every constant entering the explicit a priori bounds, frozen at t = 0.
#[derive(Debug, Clone)]
pub struct TheoryConstants {
    pub rho_bar0: f64,
    pub min_rho0: f64,
    pub max_rho0: f64,
    /// Sup norm of `d rho0 / dx` (enters the scaling-factor threshold).
    pub drho0_inf: f64,
    pub f0_inf: f64,
    pub h0_inf: f64,
    pub alpha: f64,
    pub a0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub r0: f64,
    /// Lower-bound prefactor: `M0 = c3 rho_bar / (c3 rho_bar / min rho0 + |F0|_inf)`.
    pub m0: f64,
    /// Uniform upper bound
    /// `M1 = max(max rho0, rho_bar (1e6 (c3 a + 2 c1 r0^-a + |F0|_inf a) / c1)^{1/a})`.
    pub m1: f64,
    /// Nonnegative sampled floor of the periodized kernel, when one exists.
    pub phi_m: Option<f64>,
}

impl TheoryConstants {
    pub fn compute(
        pk: &PeriodizedKernel,
        rho0: &Field,
        g0: &Field,
    ) -> Result<TheoryConstants, DiagnosticsError> {
        let min_rho0 = rho0.min();
        if min_rho0 <= 0.0 {
            return Err(DiagnosticsError::NonpositiveDensity(min_rho0));
        }
        let rho_bar0 = rho0.mean();
        let f0 = g0.zip(rho0, |g, r| g / r).map_err(DynamicsError::from)?;
        let h0 = f0.derivative().zip(rho0, |df, r| df / r).map_err(DynamicsError::from)?;
        let (alpha, a0, c1, c2) =
            (pk.base().alpha(), pk.base().a0(), pk.base().c1(), pk.base().c2());
        let (r0, c3) = (pk.r0(), pk.c3());
        let f0_inf = f0.linf();
        let m0 = c3 * rho_bar0 / (c3 * rho_bar0 / min_rho0 + f0_inf);
        let m1 = rho0.max().max(
            rho_bar0
                * (1e6 / c1 * (c3 * alpha + 2.0 * c1 * r0.powf(-alpha) + f0_inf * alpha))
                    .powf(1.0 / alpha),
        );
        Ok(TheoryConstants {
            rho_bar0,
            min_rho0,
            max_rho0: rho0.max(),
            drho0_inf: rho0.derivative().linf(),
            f0_inf,
            h0_inf: h0.linf(),
            alpha,
            a0,
            c1,
            c2,
            c3,
            r0,
            m0,
            m1,
            phi_m: pk.floor_phi_m(),
        })
    }

    /// Exponential lower envelope `M0 exp(-c3 rho_bar t)`.
    pub fn lower_envelope(&self, t: f64) -> f64 {
        self.m0 * (-self.c3 * self.rho_bar0 * t).exp()
    }

    /// Uniform-in-time floor available when the periodized kernel is
    /// nonnegative: `min(min rho0, phi_m rho_bar / (|F0|_inf + phi_m rho_bar))`.
    pub fn uniform_floor(&self) -> Option<f64> {
        self.phi_m.map(|pm| {
            self.min_rho0.min(pm * self.rho_bar0 / (self.f0_inf + pm * self.rho_bar0))
        })
    }
}

/// One CSV row of monitored scalars.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub momentum: f64,
    pub int_g: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub lower_bound: f64,
    pub upper_bound_m1: f64,
    pub max_abs_f: f64,
    pub max_abs_h: f64,
    pub max_abs_dxrho: f64,
    pub max_abs_dx2rho: f64,
    pub energy_fluct: f64,
    pub energy_fluct_rate_residual: f64,
    pub linf_u: f64,
    pub linf_dxu: f64,
    pub dt: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str = "t, mass, momentum, int_G, min_rho, max_rho, lower_bound, upper_bound_M1, max_abs_F, max_abs_H, max_abs_dxrho, max_abs_dx2rho, energy_fluct, energy_fluct_rate_residual, linf_u, linf_dxu, dt";

    pub fn csv_row(&self) -> String {
        let v = [
            self.t,
            self.mass,
            self.momentum,
            self.int_g,
            self.min_rho,
            self.max_rho,
            self.lower_bound,
            self.upper_bound_m1,
            self.max_abs_f,
            self.max_abs_h,
            self.max_abs_dxrho,
            self.max_abs_dx2rho,
            self.energy_fluct,
            self.energy_fluct_rate_residual,
            self.linf_u,
            self.linf_dxu,
            self.dt,
        ];
        v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(", ")
    }

    pub fn all_finite(&self) -> bool {
        [
            self.t,
            self.mass,
            self.momentum,
            self.int_g,
            self.min_rho,
            self.max_rho,
            self.lower_bound,
            self.upper_bound_m1,
            self.max_abs_f,
            self.max_abs_h,
            self.max_abs_dxrho,
            self.max_abs_dx2rho,
            self.energy_fluct,
            self.energy_fluct_rate_residual,
            self.linf_u,
            self.linf_dxu,
            self.dt,
        ]
        .iter()
        .all(|x| x.is_finite())
    }
}

/// A monitored bound broken by more than its tolerance.
#[derive(Debug, Clone)]
pub struct Violation {
    pub name: &'static str,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "VIOLATION {} t={:.9e} value={:.9e} bound={:.9e}", self.name, self.t, self.value, self.bound)
    }
}

/// Conserved quantities and their drifts from the initial values.
#[derive(Debug, Clone, Copy)]
pub struct ConservationReport {
    pub mass: f64,
    pub momentum: f64,
    pub int_g: f64,
    pub mass_drift_rel: f64,
    pub momentum_drift_rel: f64,
    pub int_g_drift: f64,
}

pub fn conservation_report(
    state: &SimState,
    derived: &DerivedFields,
    mass0: f64,
    p0: f64,
) -> ConservationReport {
    let mass = state.rho.integral();
    let momentum = state.rho.zip(&derived.u, |r, u| r * u).expect("same grid").integral();
    let int_g = state.g.integral();
    ConservationReport {
        mass,
        momentum,
        int_g,
        mass_drift_rel: (mass - mass0).abs() / mass0.abs().max(1e-300),
        momentum_drift_rel: (momentum - p0).abs() / p0.abs().max(1.0),
        int_g_drift: int_g.abs(),
    }
}

/// Density bounds and transported sup norms at one sample, with violation
/// events for every envelope broken by more than [`BOUND_TOL`].
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub min_rho: f64,
    pub max_rho: f64,
    pub lower_bound: f64,
    pub upper_bound_m1: f64,
    pub max_abs_f: f64,
    pub max_abs_h: f64,
    pub violations: Vec<Violation>,
}

pub fn bound_report(
    state: &SimState,
    derived: &DerivedFields,
    consts: &TheoryConstants,
) -> BoundReport {
    let min_rho = state.rho.min();
    let max_rho = state.rho.max();
    let lower = consts.lower_envelope(state.t);
    // Interpolated sups: the transported maximum principles are cleanest on
    // the band-limited interpolant, where peak drift between nodes does not
    // alias into the monitored norm.
    let max_abs_f = derived.f.sup_interpolated();
    let max_abs_h = derived
        .f
        .derivative()
        .zip(&state.rho, |df, r| df / r)
        .expect("same grid")
        .sup_interpolated();
    let mut violations = Vec::new();
    if min_rho < lower - BOUND_TOL {
        violations.push(Violation { name: "lower_bound", t: state.t, value: min_rho, bound: lower });
    }
    if max_rho > consts.m1 + BOUND_TOL {
        violations.push(Violation {
            name: "upper_bound_M1",
            t: state.t,
            value: max_rho,
            bound: consts.m1,
        });
    }
    if let Some(floor) = consts.uniform_floor() {
        if min_rho < floor - BOUND_TOL {
            violations.push(Violation {
                name: "uniform_floor",
                t: state.t,
                value: min_rho,
                bound: floor,
            });
        }
    }
    BoundReport {
        min_rho,
        max_rho,
        lower_bound: lower,
        upper_bound_m1: consts.m1,
        max_abs_f,
        max_abs_h,
        violations,
    }
}

/// Blow-up-criterion monitors: sup norms of the first two density
/// derivatives.
pub fn oscillation_report(rho: &Field) -> (f64, f64) {
    let d1 = rho.derivative();
    let d2 = d1.derivative();
    (d1.linf(), d2.linf())
}

/// Energy fluctuation `E = iint |u(x)-u(y)|^2 rho(x) rho(y)` and its
/// dissipation rate `R = -iint phi_S(x-y) |u(x)-u(y)|^2 rho(x) rho(y)`,
/// by direct double sums on the grid. The diagonal vanishes identically
/// (`|u(x)-u(x)| = 0`), so skipping `i = j` is exact.
pub struct EnergyDiag {
    /// `phi_S(m dx)` for lattice distance `m = 1..N/2`.
    phis_table: Vec<f64>,
    /// Last measured `(t, E, R)`, for the finite-difference rate residual.
    last: Option<(f64, f64, f64)>,
}

impl EnergyDiag {
    pub fn new(pk: &PeriodizedKernel, n: usize) -> EnergyDiag {
        let dx = 1.0 / n as f64;
        let phis_table =
            (1..=n / 2).map(|m| pk.eval(m as f64 * dx)).collect();
        EnergyDiag { phis_table, last: None }
    }

    /// Measure `(E, R)` and the rate residual against the previous sample
    /// (trapezoid-consistent difference; zero at the first sample).
    ///
    /// The continuity structure gives `dE/dt = 2 (int rho) R` exactly, so
    /// the residual is `|dE/dt - 2 mass R|` with `R` averaged across the
    /// sampling interval.
    pub fn measure(&mut self, state: &SimState, u: &Field) -> (f64, f64, f64) {
        let n = state.rho.grid().n();
        let dx = state.rho.grid().dx();
        let rho = state.rho.values();
        let uv = u.values();
        let mut e = 0.0;
        let mut r = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let m = (j - i).min(n - (j - i));
                let du = uv[i] - uv[j];
                let w = du * du * rho[i] * rho[j];
                e += w;
                r -= self.phis_table[m - 1] * w;
            }
        }
        // Unordered pairs counted once above; the double integral counts both.
        let e = 2.0 * e * dx * dx;
        let r = 2.0 * r * dx * dx;
        let mass = state.rho.mean();
        let residual = match self.last {
            Some((tp, ep, rp)) if state.t > tp => {
                ((e - ep) / (state.t - tp) - mass * (r + rp)).abs()
            }
            _ => 0.0,
        };
        self.last = Some((state.t, e, r));
        (e, r, residual)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{compute_g0, reconstruct_velocity};
    use crate::field::Grid;
    use crate::kernel::{Kernel, PeriodizedKernel, PowerLawPairKernel};
    use crate::symbol::SymbolTable;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn setup(n: usize, alpha: f64, beta: f64, mu: f64) -> (Grid, PeriodizedKernel, SymbolTable) {
        let g = Grid::new(n).unwrap();
        let k = PowerLawPairKernel::new(alpha, beta, mu).unwrap();
        let a = SymbolTable::closed_form(&g, alpha, beta, mu);
        let pk = PeriodizedKernel::new(Arc::new(k) as Arc<dyn Kernel>, 64).unwrap();
        (g, pk, a)
    }

    #[test]
    fn constants_for_flat_data() {
        // rho0 = 1, u0 = 0: F0 = -L rho0 / rho0 = 0, M0 = 1 / (1/1) ... = min rho0.
        let (g, pk, a) = setup(64, 1.2, 0.4, 1.0);
        let rho0 = Field::constant(&g, 1.0);
        let u0 = Field::zeros(&g);
        let g0 = compute_g0(&rho0, &u0, &a).unwrap();
        let c = TheoryConstants::compute(&pk, &rho0, &g0).unwrap();
        assert!((c.m0 - 1.0).abs() < 1e-12);
        assert!(c.f0_inf < 1e-12);
        assert!((c.lower_envelope(0.0) - 1.0).abs() < 1e-12);
        assert!(c.m1 >= 1.0);
        // Envelope decays like exp(-c3 t).
        let t = 0.01;
        assert!((c.lower_envelope(t) - (-c.c3 * t).exp()).abs() < 1e-9);
    }

    #[test]
    fn constants_reject_vacuum_data() {
        let (g, pk, _) = setup(64, 1.2, 0.4, 1.0);
        let rho0 = Field::from_fn(&g, |x| (2.0 * PI * x).cos());
        let g0 = Field::zeros(&g);
        assert!(TheoryConstants::compute(&pk, &rho0, &g0).is_err());
    }

    #[test]
    fn conservation_zero_drift_at_t0() {
        let (g, pk, a) = setup(64, 1.2, 0.4, 1.0);
        let rho0 = Field::from_fn(&g, |x| 1.0 + 0.2 * (2.0 * PI * x).cos());
        let u0 = Field::from_fn(&g, |x| 0.1 * (2.0 * PI * x).sin());
        let g0 = compute_g0(&rho0, &u0, &a).unwrap();
        let state = SimState::new(rho0.clone(), g0.clone());
        let p0 = rho0.zip(&u0, |r, u| r * u).unwrap().integral();
        let d = reconstruct_velocity(&state, &a, p0).unwrap();
        let rep = conservation_report(&state, &d, rho0.mean(), p0);
        assert!(rep.mass_drift_rel < 1e-14);
        assert!(rep.momentum_drift_rel < 1e-14);
        assert!(rep.int_g_drift < 1e-12);
        let _ = TheoryConstants::compute(&pk, &rho0, &g0).unwrap();
    }

    #[test]
    fn oscillation_of_cosine() {
        let g = Grid::new(128).unwrap();
        let rho = Field::from_fn(&g, |x| 1.0 + 0.1 * (2.0 * PI * x).cos());
        let (d1, d2) = oscillation_report(&rho);
        assert!((d1 - 0.2 * PI).abs() < 1e-10);
        assert!((d2 - 0.4 * PI * PI).abs() < 1e-9);
        let flat = Field::constant(&g, 2.0);
        let (z1, z2) = oscillation_report(&flat);
        assert!(z1 < 1e-13 && z2 < 1e-12);
    }

    #[test]
    fn energy_zero_for_constant_velocity() {
        let (g, pk, _) = setup(64, 1.2, 0.4, 0.0);
        let rho = Field::from_fn(&g, |x| 1.0 + 0.3 * (2.0 * PI * x).cos());
        let u = Field::constant(&g, 0.7);
        let mut ed = EnergyDiag::new(&pk, g.n());
        let state = SimState::new(rho, Field::zeros(&g));
        let (e, r, res) = ed.measure(&state, &u);
        assert!(e.abs() < 1e-14);
        assert!(r.abs() < 1e-14);
        assert_eq!(res, 0.0);
    }

    #[test]
    fn energy_positive_and_dissipative_for_positive_kernel() {
        let (g, pk, _) = setup(64, 1.2, 0.4, 0.0);
        let rho = Field::constant(&g, 1.0);
        let u = Field::from_fn(&g, |x| (2.0 * PI * x).sin());
        let mut ed = EnergyDiag::new(&pk, g.n());
        let state = SimState::new(rho, Field::zeros(&g));
        let (e, r, _) = ed.measure(&state, &u);
        assert!(e > 0.0);
        // phi_S > 0 everywhere for the pure power: the rate is negative.
        assert!(r < 0.0);
    }

    #[test]
    fn bound_report_flags_artificial_violation() {
        let (g, pk, a) = setup(64, 1.2, 0.4, 1.0);
        let rho0 = Field::from_fn(&g, |x| 1.0 + 0.2 * (2.0 * PI * x).cos());
        let g0 = compute_g0(&rho0, &Field::zeros(&g), &a).unwrap();
        let consts = TheoryConstants::compute(&pk, &rho0, &g0).unwrap();
        let state = SimState::new(rho0, g0);
        let derived = reconstruct_velocity(&state, &a, 0.0).unwrap();
        let rep = bound_report(&state, &derived, &consts);
        assert!(rep.violations.is_empty());
        // Squash the density far below the envelope: must flag.
        let squashed = SimState::new(state.rho.scaled(1e-9), state.g.clone());
        let derived2 = reconstruct_velocity(&squashed, &a, 0.0).unwrap();
        let rep2 = bound_report(&squashed, &derived2, &consts);
        assert!(rep2.violations.iter().any(|v| v.name == "lower_bound"));
        let msg = format!("{}", rep2.violations[0]);
        assert!(msg.starts_with("VIOLATION lower_bound t="));
    }
}
