//! Modulus-of-continuity machinery: the piecewise concave template, the
//! explicit parameter-selection chain, discrete obedience checks, the
//! short-range dissipation integral with its tabulated lower bounds, and
//! the induced velocity modulus.
//!
//! The scaling factor `lambda` is carried in log form: the selection chain
//! multiplies thresholds like `exp(-2 |rho0|_inf / gamma)` whose exponents
//! run to many thousands, far past f64 range, while every downstream
//! evaluation (the log branch of `omega`, the breakthrough radius, the
//! re-verification of the chain) only ever needs `ln lambda`.

use thiserror::Error;

use crate::diagnostics::TheoryConstants;
use crate::field::{Field, FieldError};
use crate::kernel::Kernel;
use crate::quad;

#[derive(Debug, Error)]
pub enum MocError {
    #[error("xi = {0} outside the admissible range")]
    Domain(f64),
    #[error("invalid modulus parameters: {0}")]
    InvalidParameters(String),
    #[error("parameter selection degenerate: condition {condition} gives ln lambda = {ln_value}")]
    Range { condition: &'static str, ln_value: f64 },
    #[error("generated profile fails the obedience check (margin {margin:.3e} at distance {dist:.3e})")]
    ProfileRejected { margin: f64, dist: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Quad(#[from] quad::QuadError),
}

/// Scaling-critical constant of the one-sided operator estimate:
/// `1/(alpha^2 (1-alpha))` below one, `2` at one (within 1e-3), and
/// `1/(alpha-1) + 5/4` above.
pub fn c_bar_alpha(alpha: f64) -> f64 {
    if (alpha - 1.0).abs() <= 1e-3 {
        2.0
    } else if alpha < 1.0 {
        1.0 / (alpha * alpha * (1.0 - alpha))
    } else {
        1.0 / (alpha - 1.0) + 1.25
    }
}

/// The piecewise modulus
/// `omega(xi) = delta xi/lambda - delta (xi/lambda)^{1+alpha/2} / 4` up to
/// `lambda`, then `3 delta/4 + gamma log(xi/lambda)`.
#[derive(Debug, Clone)]
pub struct MocSpec {
    pub delta: f64,
    pub gamma: f64,
    pub alpha: f64,
    ln_lambda: f64,
    /// `ln Xi` with `Xi = lambda exp((M - 3 delta/4)/gamma)` for the range
    /// bound `M` of the field the modulus is applied to.
    ln_xi: Option<f64>,
}

impl MocSpec {
    pub fn new(delta: f64, gamma: f64, lambda: f64, alpha: f64) -> Result<MocSpec, MocError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(MocError::InvalidParameters(format!("lambda = {lambda}")));
        }
        MocSpec::from_ln_lambda(delta, gamma, lambda.ln(), alpha)
    }

    pub fn from_ln_lambda(
        delta: f64,
        gamma: f64,
        ln_lambda: f64,
        alpha: f64,
    ) -> Result<MocSpec, MocError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(MocError::InvalidParameters(format!("delta = {delta}")));
        }
        if !(gamma > 0.0 && gamma < 0.5 * delta) {
            return Err(MocError::InvalidParameters(format!(
                "gamma = {gamma} must lie in (0, delta/2) for concavity"
            )));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(MocError::InvalidParameters(format!("alpha = {alpha}")));
        }
        if !ln_lambda.is_finite() {
            return Err(MocError::InvalidParameters(format!("ln lambda = {ln_lambda}")));
        }
        let spec = MocSpec { delta, gamma, alpha, ln_lambda, ln_xi: None };
        spec.validate()?;
        Ok(spec)
    }

    /// `lambda` itself; may underflow to zero for selection-chain output.
    pub fn lambda(&self) -> f64 {
        self.ln_lambda.exp()
    }

    pub fn ln_lambda(&self) -> f64 {
        self.ln_lambda
    }

    /// Fix the breakthrough radius from a range bound `m` on the field.
    pub fn with_breakthrough_radius(mut self, m: f64) -> MocSpec {
        self.ln_xi = Some(self.ln_lambda + (m - 0.75 * self.delta) / self.gamma);
        self
    }

    /// Breakthrough radius `Xi`; may overflow to infinity.
    pub fn xi(&self) -> Option<f64> {
        self.ln_xi.map(f64::exp)
    }

    pub fn ln_xi(&self) -> Option<f64> {
        self.ln_xi
    }

    /// Slope at the origin `delta / lambda`; may overflow to infinity.
    pub fn lipschitz_bound(&self) -> f64 {
        (self.delta.ln() - self.ln_lambda).exp()
    }

    /// `omega(xi)`.
    pub fn omega(&self, xi: f64) -> f64 {
        self.omega_eval(xi).map(|(w, _)| w).unwrap_or(f64::NAN)
    }

    /// `(omega(xi), omega'(xi))`; the derivative is one-sided (left) at the
    /// knot.
    pub fn omega_eval(&self, xi: f64) -> Result<(f64, f64), MocError> {
        if !(xi > 0.0) {
            return Err(MocError::Domain(xi));
        }
        let ln_ratio = xi.ln() - self.ln_lambda;
        if ln_ratio <= 0.0 {
            // Short branch, in terms of r = xi / lambda <= 1.
            let r = ln_ratio.exp();
            let w = self.delta * (r - 0.25 * r.powf(1.0 + 0.5 * self.alpha));
            // omega' = (delta/lambda) (1 - (1 + alpha/2) r^{alpha/2} / 4).
            let wp = (self.delta.ln() - self.ln_lambda).exp()
                * (1.0 - 0.25 * (1.0 + 0.5 * self.alpha) * r.powf(0.5 * self.alpha));
            Ok((w, wp))
        } else {
            let w = 0.75 * self.delta + self.gamma * ln_ratio;
            Ok((w, self.gamma / xi))
        }
    }

    /// Structural checks: continuity at the knot, positivity, increase, and
    /// concavity on a sample of `(0, 1]`.
    fn validate(&self) -> Result<(), MocError> {
        // Continuity at the knot (checked where the knot is representable).
        let lambda = self.lambda();
        if lambda.is_normal() {
            let (left, _) = self.omega_eval(lambda)?;
            if (left - 0.75 * self.delta).abs() > 1e-12 * self.delta {
                return Err(MocError::InvalidParameters(format!(
                    "omega not continuous at the knot: {left} vs {}",
                    0.75 * self.delta
                )));
            }
        }
        // Sampled monotonicity and concavity on (0, 1]. For selection-chain
        // output gamma can sit 100 orders below omega itself, making the
        // sampled increase unresolvable in f64; only genuine decreases and
        // convexity beyond f64 resolution are rejected.
        let m = 128;
        let mut prev: Option<(f64, f64)> = None;
        let mut prev_slope: Option<f64> = None;
        for i in 0..=m {
            let xi = ((i as f64 / m as f64) * 13.8).exp() * 1e-6; // 1e-6 .. ~1
            let (w, _) = self.omega_eval(xi)?;
            if w <= 0.0 {
                return Err(MocError::InvalidParameters(format!("omega({xi}) = {w} <= 0")));
            }
            if let Some((pxi, pw)) = prev {
                let resolution = 1e-13 * w.abs().max(pw.abs());
                if w < pw - resolution {
                    return Err(MocError::InvalidParameters(format!(
                        "omega not increasing near xi = {xi}"
                    )));
                }
                let slope = (w - pw) / (xi - pxi);
                if let Some(ps) = prev_slope {
                    if slope > ps + 1e-12 * (1.0 + resolution / (xi - pxi)) {
                        return Err(MocError::InvalidParameters(format!(
                            "omega not concave near xi = {xi}"
                        )));
                    }
                }
                prev_slope = Some(slope);
            }
            prev = Some((xi, w));
        }
        Ok(())
    }
}

/// `(omega, omega')` at `xi` (operation-level entry point).
pub fn omega_eval(spec: &MocSpec, xi: f64) -> Result<(f64, f64), MocError> {
    spec.omega_eval(xi)
}

/// Outcome of the sufficient scaling-factor threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    /// Constant functions obey every modulus.
    Any,
    Value(f64),
}

/// Scaling factor guaranteeing that a Lipschitz function with the given sup
/// norms obeys the modulus: `lambda = (2 f / f') exp(-2 f / gamma)`.
pub fn select_lambda(f_inf: f64, fprime_inf: f64, gamma: f64) -> Result<LambdaChoice, MocError> {
    if !(f_inf > 0.0) || !(gamma > 0.0) {
        return Err(MocError::InvalidParameters(format!(
            "need positive sup norm and gamma, got {f_inf}, {gamma}"
        )));
    }
    if fprime_inf == 0.0 {
        return Ok(LambdaChoice::Any);
    }
    Ok(LambdaChoice::Value(2.0 * f_inf / fprime_inf * (-2.0 * f_inf / gamma).exp()))
}

/// One named threshold of the selection chain, in log form.
#[derive(Debug, Clone)]
pub struct LedgerEntry {
    pub condition: &'static str,
    pub ln_value: f64,
}

/// Every intermediate of the parameter chain, for reporting.
#[derive(Debug, Clone)]
pub struct ParameterLedger {
    pub rho_min: f64,
    pub delta_candidates: Vec<(&'static str, f64)>,
    pub gamma_candidates: Vec<(&'static str, f64)>,
    pub lambda_thresholds: Vec<LedgerEntry>,
    pub c_bar: f64,
}

impl ParameterLedger {
    pub fn text_block(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("rho_min = {:.12e}\n", self.rho_min));
        s.push_str(&format!("c_bar_alpha = {:.12e}\n", self.c_bar));
        for (name, v) in &self.delta_candidates {
            s.push_str(&format!("delta[{name}] = {v:.12e}\n"));
        }
        for (name, v) in &self.gamma_candidates {
            s.push_str(&format!("gamma[{name}] = {v:.12e}\n"));
        }
        for e in &self.lambda_thresholds {
            s.push_str(&format!(
                "ln_lambda[{}] = {:.12e} (lambda = {:.6e})\n",
                e.condition,
                e.ln_value,
                e.ln_value.exp()
            ));
        }
        s
    }
}

/// Strict-inequality thresholds are shrunk by this factor to obtain
/// attained values.
const STRICT_MARGIN: f64 = 1e-3;

/// The full selection chain at the theoretical density floor
/// `rho_min = M0 exp(-c3 rho_bar T)`.
pub fn select_parameters(
    t_horizon: f64,
    consts: &TheoryConstants,
) -> Result<(MocSpec, ParameterLedger), MocError> {
    if !(t_horizon > 0.0) {
        return Err(MocError::Domain(t_horizon));
    }
    select_parameters_with_rho_min(consts.lower_envelope(t_horizon), consts)
}

/// The same chain with an explicit (for instance empirically observed)
/// density floor.
pub fn select_parameters_with_rho_min(
    rho_min: f64,
    consts: &TheoryConstants,
) -> Result<(MocSpec, ParameterLedger), MocError> {
    let alpha = consts.alpha;
    let c1 = consts.c1;
    if !(rho_min > 0.0) {
        return Err(MocError::Range { condition: "rho_min_positive", ln_value: f64::NEG_INFINITY });
    }
    let c_bar = c_bar_alpha(alpha);

    // delta: short-range drift control, one-sided-estimate control, and the
    // open unit bound.
    let delta_candidates = vec![
        ("rho_min_over_16c1sq", rho_min / (16.0 * c1 * c1)),
        (
            "alpha_rho_min_over_2816_c1sq_cbar",
            alpha * rho_min / (128.0 * 22.0 * c1 * c1 * c_bar),
        ),
        ("unit_interval", 1.0 - STRICT_MARGIN),
    ];
    let delta = delta_candidates.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);

    // gamma: concavity, the enhanced-estimate condition, and the
    // log-branch drift control; all strict, so shrink the minimum.
    let gamma_candidates = vec![
        ("half_delta", 0.5 * delta),
        ("three_alpha_quarters_delta", 0.75 * alpha * delta),
        (
            "pow2_alpha_rho_min_over_512c1sq",
            (2f64.powf(alpha) - 1.0) * alpha * rho_min / (512.0 * c1 * c1),
        ),
    ];
    let gamma =
        (1.0 - STRICT_MARGIN) * gamma_candidates.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);

    if !(delta > 0.0 && gamma > 0.0) {
        return Err(MocError::Range { condition: "delta_gamma_positive", ln_value: f64::NEG_INFINITY });
    }

    // lambda thresholds, all in log form.
    let q_misalign = consts.m1
        * (2.0 * consts.c2
            + 10.0 * consts.c3
            + 3.0 * consts.f0_inf
            + consts.m1 * consts.m1 * consts.h0_inf);
    let mut lambda_thresholds = Vec::new();
    if consts.drho0_inf > 0.0 {
        lambda_thresholds.push(LedgerEntry {
            condition: "initial_data_scaling",
            ln_value: (2.0 * consts.max_rho0 / consts.drho0_inf).ln()
                - 2.0 * consts.max_rho0 / gamma,
        });
    }
    lambda_thresholds.push(LedgerEntry {
        condition: "breakthrough_radius_r0_over_4",
        ln_value: (0.25 * consts.r0).ln() - consts.m1 / gamma,
    });
    lambda_thresholds.push(LedgerEntry { condition: "lambda_le_delta", ln_value: delta.ln() });
    lambda_thresholds.push(LedgerEntry {
        condition: "short_branch_subcritical",
        ln_value: ((alpha * rho_min / (128.0 * c1 * q_misalign)).ln()
            + (1.0 - STRICT_MARGIN).ln())
            / alpha,
    });
    lambda_thresholds.push(LedgerEntry {
        condition: "log_branch_subcritical",
        ln_value: ((2f64.powf(alpha) - 1.0) * rho_min / (8.0 * alpha * c1 * q_misalign)).ln()
            / alpha
            - consts.m1 / gamma,
    });
    lambda_thresholds.push(LedgerEntry {
        condition: "lambda_le_gamma_exp",
        ln_value: gamma.ln() - consts.m1 / gamma,
    });

    let mut ln_lambda = f64::INFINITY;
    for e in &lambda_thresholds {
        if e.ln_value.is_nan() || e.ln_value == f64::NEG_INFINITY {
            return Err(MocError::Range { condition: e.condition, ln_value: e.ln_value });
        }
        ln_lambda = ln_lambda.min(e.ln_value);
    }

    let spec = MocSpec::from_ln_lambda(delta, gamma, ln_lambda, alpha)?
        .with_breakthrough_radius(consts.m1);
    let ledger =
        ParameterLedger { rho_min, delta_candidates, gamma_candidates, lambda_thresholds, c_bar };
    Ok((spec, ledger))
}

/// Independent re-evaluation of every inequality in the chain, in log
/// space. Returns `(condition, holds)` pairs.
pub fn reverify_parameters(
    spec: &MocSpec,
    consts: &TheoryConstants,
    rho_min: f64,
) -> Vec<(&'static str, bool)> {
    let (delta, gamma, ll) = (spec.delta, spec.gamma, spec.ln_lambda);
    let (alpha, c1) = (consts.alpha, consts.c1);
    let c_bar = c_bar_alpha(alpha);
    let q = consts.m1
        * (2.0 * consts.c2
            + 10.0 * consts.c3
            + 3.0 * consts.f0_inf
            + consts.m1 * consts.m1 * consts.h0_inf);
    // Non-strict thresholds may be attained exactly, and the log-space
    // inequalities cancel intermediates of size alpha M1 / gamma; the
    // comparison slack must scale with those magnitudes, not the O(1)
    // result.
    let big = 1.0 + alpha * consts.m1 / gamma;
    let leq = move |a: f64, b: f64| a <= b + 1e-12 * a.abs().max(b.abs()).max(big);
    let mut out = vec![
        ("delta_le_rho_min_over_16c1sq", leq(delta, rho_min / (16.0 * c1 * c1))),
        (
            "22c1_cbar_delta_le_alpha_rho_min_over_128c1",
            leq(22.0 * c1 * c_bar * delta, alpha * rho_min / (128.0 * c1)),
        ),
        ("delta_below_one", delta < 1.0),
        ("gamma_below_half_delta", gamma < 0.5 * delta),
        ("gamma_below_3alpha4_delta", gamma < 0.75 * alpha * delta),
        (
            "64c1_gamma_over_alpha2_lt_dissipation",
            64.0 * c1 * gamma / (alpha * alpha)
                < (2f64.powf(alpha) - 1.0) / (8.0 * alpha * c1) * rho_min,
        ),
        ("lambda_le_r0_over_4_exp", leq(ll, (0.25 * consts.r0).ln() - consts.m1 / gamma)),
        ("lambda_le_delta", leq(ll, delta.ln())),
        (
            "short_branch_subcritical",
            alpha * ll + q.ln() < (alpha * rho_min / (128.0 * c1)).ln(),
        ),
        (
            "log_branch_subcritical",
            leq(
                alpha * ll + q.ln() + alpha * consts.m1 / gamma,
                ((2f64.powf(alpha) - 1.0) * rho_min / (8.0 * alpha * c1)).ln(),
            ),
        ),
        ("lambda_le_gamma_exp", leq(ll, gamma.ln() - consts.m1 / gamma)),
    ];
    if consts.drho0_inf > 0.0 {
        out.push((
            "initial_data_scaling",
            leq(ll, (2.0 * consts.max_rho0 / consts.drho0_inf).ln() - 2.0 * consts.max_rho0 / gamma),
        ));
    }
    out
}

/// Result of a discrete obedience scan.
#[derive(Debug, Clone)]
pub struct MocReport {
    pub obeys: bool,
    /// `min over pairs of omega(d) - |f_i - f_j|`; obedience means > 0.
    pub margin: f64,
    pub worst_i: usize,
    pub worst_j: usize,
    pub worst_dist: f64,
    pub worst_delta: f64,
    pub worst_omega: f64,
}

/// Scan all unordered node pairs (periodic distance in `(0, 1/2]`).
pub fn check_obeys(f: &Field, spec: &MocSpec) -> MocReport {
    check_obeys_refined(f, spec, 1)
}

/// Same scan on a `refine`-times denser grid via trigonometric
/// interpolation (`refine = 1` scans the native nodes).
pub fn check_obeys_refined(f: &Field, spec: &MocSpec, refine: usize) -> MocReport {
    let n0 = f.grid().n();
    let n = n0 * refine.max(1);
    let vals: Vec<f64> = if refine <= 1 {
        f.values().to_vec()
    } else {
        let it = f.interpolant();
        (0..n).map(|j| it.eval(-0.5 + j as f64 / n as f64)).collect()
    };
    let dx = 1.0 / n as f64;
    // omega depends only on the lattice distance; precompute.
    let omega_by_m: Vec<f64> =
        (1..=n / 2).map(|m| spec.omega(m as f64 * dx)).collect();
    let mut best = MocReport {
        obeys: true,
        margin: f64::INFINITY,
        worst_i: 0,
        worst_j: 0,
        worst_dist: 0.0,
        worst_delta: 0.0,
        worst_omega: 0.0,
    };
    for i in 0..n {
        for j in (i + 1)..n {
            let m = (j - i).min(n - (j - i));
            let d = (vals[i] - vals[j]).abs();
            let w = omega_by_m[m - 1];
            let margin = w - d;
            if margin < best.margin {
                best.margin = margin;
                best.worst_i = i;
                best.worst_j = j;
                best.worst_dist = m as f64 * dx;
                best.worst_delta = d;
                best.worst_omega = w;
            }
        }
    }
    best.obeys = best.margin > 0.0;
    best
}

/// Preservation scan over a trajectory of density snapshots.
#[derive(Debug)]
pub struct PreservationReport {
    pub reports: Vec<(f64, MocReport)>,
    pub first_breakthrough: Option<f64>,
    /// Sup over snapshots of the spectral `|d_x rho|_inf`.
    pub sup_dxrho: f64,
    /// `omega'(0+) = delta / lambda` (may be infinite).
    pub lipschitz_bound: f64,
    pub lipschitz_ok: bool,
}

pub fn verify_preservation(snapshots: &[(f64, Field)], spec: &MocSpec) -> PreservationReport {
    let mut reports = Vec::with_capacity(snapshots.len());
    let mut first_breakthrough = None;
    let mut sup_dxrho = 0.0f64;
    for (t, rho) in snapshots {
        let rep = check_obeys(rho, spec);
        if !rep.obeys && first_breakthrough.is_none() {
            first_breakthrough = Some(*t);
        }
        sup_dxrho = sup_dxrho.max(rho.derivative().linf());
        reports.push((*t, rep));
    }
    let lipschitz_bound = spec.lipschitz_bound();
    PreservationReport {
        reports,
        first_breakthrough,
        sup_dxrho,
        lipschitz_bound,
        lipschitz_ok: sup_dxrho <= lipschitz_bound,
    }
}

/// Dissipation integral and its tabulated lower bound at one configuration.
#[derive(Debug, Clone, Copy)]
pub struct D1Result {
    pub value: f64,
    pub error: f64,
    pub xi: f64,
    pub omega_xi: f64,
    /// Whether `rho(x) - rho(y)` matches `omega(xi)` within tolerance.
    pub breakthrough: bool,
    /// The piecewise lower bound, reported when `breakthrough` holds.
    pub bound: Option<f64>,
}

/// Tabulated lower bound for the dissipation integral:
/// `alpha delta lambda^{-1-alpha/2} xi^{1-alpha/2} / (32 c1)` on the short
/// branch, `(2^alpha - 1) omega(xi) xi^{-alpha} / (2 alpha c1)` beyond.
pub fn d1_lower_bound(spec: &MocSpec, c1: f64, xi: f64) -> f64 {
    let alpha = spec.alpha;
    if xi.ln() <= spec.ln_lambda() {
        alpha / (32.0 * c1)
            * (spec.delta.ln() - (1.0 + 0.5 * alpha) * spec.ln_lambda()
                + (1.0 - 0.5 * alpha) * xi.ln())
            .exp()
    } else {
        (2f64.powf(alpha) - 1.0) / (2.0 * alpha * c1) * spec.omega(xi) * xi.powf(-alpha)
    }
}

/// Evaluate `D1(x, y) = p.v. int_{|z| <= a0} phi(z) (omega(xi) - rho(x+z)
/// + rho(y+z)) dz` at the grid nodes `i, j`, by graded adaptive quadrature
/// of the symmetrized integrand with trigonometric interpolation of `rho`.
pub fn d1_dissipation(
    rho: &Field,
    i: usize,
    j: usize,
    kernel: &dyn Kernel,
    spec: &MocSpec,
) -> Result<D1Result, MocError> {
    let n = rho.grid().n();
    if i == j || i >= n || j >= n {
        return Err(MocError::Domain(0.0));
    }
    let a0 = kernel.a0();
    let m = (i.max(j) - i.min(j)).min(n - (i.max(j) - i.min(j)));
    let xi = m as f64 * rho.grid().dx();
    if !(xi > 0.0 && xi <= 0.5 * a0) {
        return Err(MocError::Domain(xi));
    }
    let x = rho.grid().node(i);
    let y = rho.grid().node(j);
    let omega_xi = spec.omega(xi);
    let jump = rho.values()[i] - rho.values()[j];
    let breakthrough = (jump - omega_xi).abs() <= 1e-8 * omega_xi.abs().max(1.0);

    // Symmetrized principal value: int_0^{a0} phi(z) S(z) dz with
    // S(z) = 2 omega - [rho(x+z) - rho(y+z)] - [rho(x-z) - rho(y-z)].
    //
    // Evaluating the four interpolants independently leaves O(eps) noise in
    // S that the non-integrable phi mass amplifies without bound. Instead
    // write S through second differences of the band-limited modes,
    //   S(z) = sum_k w_k sin^2(pi k z) - 2 (rho_i - rho_j - omega),
    // which vanishes quadratically at z = 0 with relative-class accuracy.
    let spec_modes = rho.spectrum();
    let nn = rho.grid().n();
    let mut w_modes = Vec::with_capacity(nn / 2);
    for k in 1..=nn / 2 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let c = spec_modes[k] * sign;
        let (ax, bx) = if k == nn / 2 { (c.re, 0.0) } else { (2.0 * c.re, -2.0 * c.im) };
        let tk = 2.0 * std::f64::consts::PI * k as f64;
        let m_x = ax * (tk * x).cos() + bx * (tk * x).sin();
        let m_y = ax * (tk * y).cos() + bx * (tk * y).sin();
        w_modes.push(4.0 * (m_x - m_y));
    }
    // A defect below f64 resolution of the node values is an artifact of
    // rounding `rho_bar +- h`; the kernel mass near the cutoff would blow
    // it up to O(eps * z_cut^-alpha), so snap it to the exact breakthrough.
    let defect_raw = jump - omega_xi;
    let defect = if defect_raw.abs() <= 1e-12 * omega_xi.abs().max(jump.abs()).max(1.0) {
        0.0
    } else {
        defect_raw
    };
    let s_of = move |z: f64| {
        let t = std::f64::consts::PI * z;
        let (s1, c1) = t.sin_cos();
        let (mut sk, mut ck) = (s1, c1);
        let mut acc = 0.0;
        for &w in &w_modes {
            acc += w * sk * sk;
            let sn = sk * c1 + ck * s1;
            let cn = ck * c1 - sk * s1;
            sk = sn;
            ck = cn;
        }
        acc - 2.0 * defect
    };
    let integrand = move |z: f64| kernel.eval(z) * s_of(z);
    // Graded substitution z = a0 t^q flattens the z^{-alpha/2} envelope at
    // breakthrough; the tiny cutoff only excises the sub-roundoff core.
    let q = 4.0 / (2.0 - kernel.alpha());
    let t_cut = (1e-16f64 / a0).powf(1.0 / q);
    let r = quad::integrate_best_effort(
        |t| {
            let z = a0 * t.powf(q);
            if z <= 0.0 {
                return 0.0;
            }
            integrand(z) * a0 * q * t.powf(q - 1.0)
        },
        t_cut,
        1.0,
        1e-7,
        40_000,
    )?;
    let bound = breakthrough.then(|| d1_lower_bound(spec, kernel.c1(), xi));
    Ok(D1Result { value: r.value, error: r.error, xi, omega_xi, breakthrough, bound })
}

/// Build a density profile attaining the modulus with equality at one node
/// pair and obeying it elsewhere: an odd bump pair climbing along
/// `omega(2d)/2` to the designated points and tapering smoothly to a
/// constant at the antipode. Verified by [`check_obeys`] before returning.
///
/// `center` is the midpoint node index and `xi_nodes` the (even) node
/// separation of the pair. Returns `(rho, i, j)` with `rho(x_i) - rho(x_j)
/// = omega(xi)` exactly.
pub fn breakthrough_profile(
    grid: &crate::field::Grid,
    spec: &MocSpec,
    rho_bar: f64,
    center: usize,
    xi_nodes: usize,
) -> Result<(Field, usize, usize), MocError> {
    let n = grid.n();
    if xi_nodes == 0 || xi_nodes % 2 != 0 || xi_nodes >= n / 2 {
        return Err(MocError::Domain(xi_nodes as f64));
    }
    let xi = xi_nodes as f64 * grid.dx();
    let half = 0.5 * xi;
    // Taper the half-amplitude omega envelope to zero on [half, d_end] with
    // a C^1 cosine window (slope continuous at the peak).
    let d_end = 0.45f64;
    if half >= 0.8 * d_end {
        return Err(MocError::Domain(xi));
    }
    let climb = |d: f64| 0.5 * spec.omega(2.0 * d);
    let h = |d: f64| -> f64 {
        if d <= 0.0 {
            0.0
        } else if d <= half {
            climb(d)
        } else if d < d_end {
            let t = (d - half) / (d_end - half);
            climb(d) * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
        } else {
            0.0
        }
    };
    let center_x = grid.node(center);
    let vals: Vec<f64> = (0..n)
        .map(|s| {
            let mut d = grid.node(s) - center_x;
            // Signed periodic displacement in [-1/2, 1/2).
            d -= d.round();
            rho_bar + d.signum() * h(d.abs())
        })
        .collect();
    let field = Field::from_values(grid, vals)?;
    let i = (center + xi_nodes / 2) % n;
    let j = (center + n - xi_nodes / 2) % n;

    // The designated pair must attain equality exactly...
    let jump = field.values()[i] - field.values()[j];
    let w = spec.omega(xi);
    if (jump - w).abs() > 1e-12 * w.max(1.0) {
        return Err(MocError::ProfileRejected { margin: jump - w, dist: xi });
    }
    // ...and every other pair must obey (margin vanishes only at ties of
    // the climb region; reject anything genuinely below).
    let rep = check_obeys(&field, spec);
    if rep.margin < -1e-12 {
        return Err(MocError::ProfileRejected { margin: rep.margin, dist: rep.worst_dist });
    }
    Ok((field, i, j))
}

/// Induced velocity modulus
/// `Omega(xi) = (52 c1/alpha) int_0^xi omega(eta) eta^{-alpha} d eta
///  + 8 c1 xi int_xi^{r0+xi} omega(eta) eta^{-1-alpha} d eta
///  + M1 (8 c3 + |F0|_inf) xi`, for `0 < xi <= r0/4`.
///
/// Integrals by graded adaptive quadrature when the knot is representable;
/// closed forms of the piecewise integrands (in log-lambda form) otherwise.
pub fn omega_velocity(spec: &MocSpec, consts: &TheoryConstants, xi: f64) -> Result<f64, MocError> {
    if !(xi > 0.0 && xi <= 0.25 * consts.r0) {
        return Err(MocError::Domain(xi));
    }
    let (alpha, c1) = (spec.alpha, consts.c1);
    let lambda = spec.lambda();
    let quadrature_ok = lambda.is_normal() && xi / lambda < 1e9;
    let (i1, i2) = if quadrature_ok {
        let q = (2.0 / (2.0 - alpha)).max(1.0 / (2.0 - alpha).min(1.0));
        let i1 = quad::integrate_graded(
            |eta| spec.omega(eta) * eta.powf(-alpha),
            xi,
            q.max(2.0 / (2.0 - alpha)),
            1e-10,
            20_000,
        )?
        .value;
        let i2 = quad::integrate(
            |eta| spec.omega(eta) * eta.powf(-1.0 - alpha),
            xi,
            consts.r0 + xi,
            1e-10,
            20_000,
        )?
        .value;
        (i1, i2)
    } else {
        (omega_power_integral_closed(spec, xi, alpha), tail_integral_closed(spec, xi, consts.r0, alpha))
    };
    Ok(52.0 * c1 / alpha * i1 + 8.0 * c1 * xi * i2 + consts.m1 * (8.0 * consts.c3 + consts.f0_inf) * xi)
}

/// Closed form of `int_0^xi omega(eta) eta^{-alpha} d eta` for `xi` beyond
/// the knot, in log-lambda form. Overflows to infinity when the short-branch
/// contribution `lambda^{1-alpha}` does (alpha > 1 with subnormal lambda).
fn omega_power_integral_closed(spec: &MocSpec, xi: f64, alpha: f64) -> f64 {
    let (delta, gamma, ll) = (spec.delta, spec.gamma, spec.ln_lambda());
    debug_assert!(xi.ln() > ll);
    // Short-branch part int_0^lambda: delta lambda^{1-alpha} (1/(2-alpha)
    // - 1/(4 (2-alpha/2))).
    let head = delta
        * ((1.0 - alpha) * ll).exp()
        * (1.0 / (2.0 - alpha) - 0.25 / (2.0 - 0.5 * alpha));
    let lxi = xi.ln() - ll; // log(xi/lambda) > 0
    let tail = if (alpha - 1.0).abs() < 1e-12 {
        0.75 * delta * lxi + 0.5 * gamma * lxi * lxi
    } else {
        let om = 1.0 - alpha;
        // int_lambda^xi eta^{-alpha} = (xi^{1-alpha} - lambda^{1-alpha})/(1-alpha)
        let xi_pow = xi.powf(om);
        let lam_pow = (om * ll).exp();
        0.75 * delta * (xi_pow - lam_pow) / om
            + gamma / om * (xi_pow * lxi - (xi_pow - lam_pow) / om)
    };
    head + tail
}

/// Closed form of `int_xi^{r0+xi} omega(eta) eta^{-1-alpha} d eta` for `xi`
/// beyond the knot.
fn tail_integral_closed(spec: &MocSpec, xi: f64, r0: f64, alpha: f64) -> f64 {
    let (delta, gamma, ll) = (spec.delta, spec.gamma, spec.ln_lambda());
    debug_assert!(xi.ln() > ll);
    // Antiderivative of (3 delta/4 + gamma log(eta/lambda)) eta^{-1-alpha}:
    // -eta^{-alpha}/alpha (3 delta/4 + gamma log(eta/lambda) + gamma/alpha).
    let anti = |eta: f64| {
        -eta.powf(-alpha) / alpha * (0.75 * delta + gamma * (eta.ln() - ll) + gamma / alpha)
    };
    anti(r0 + xi) - anti(xi)
}
