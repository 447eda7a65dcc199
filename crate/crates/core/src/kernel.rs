//! Influence kernels: the two-power model kernel, general user-supplied
//! kernels under the short-range/long-range structural assumptions, and
//! their periodization onto the unit torus.
//!
//! Every kernel is even, blows up like `|x|^{-1-alpha}` at the origin and
//! has an absolutely integrable (possibly sign-changing) tail. The
//! structural constants `(alpha, a0, c1, c2)` quantify exactly that:
//!
//! * `phi(x) |x|^{1+alpha}` stays in `[1/c1, c1]` for `0 < |x| <= a0`,
//! * `phi` is non-increasing on `(0, a0]`,
//! * the tail integral `int_{|x| >= a0} |phi|` is at most `c2`.

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use crate::quad;

/// Tolerance slack used by the sampled structural checks.
const CHECK_SLACK: f64 = 1e-8;
/// Points per decade-ish in the log-spaced validation sample.
const CHECK_SAMPLES: usize = 256;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("alpha = {0} outside (0, 2)")]
    AlphaRange(f64),
    #[error("beta = {beta} must satisfy 0 < beta < alpha = {alpha}")]
    BetaRange { alpha: f64, beta: f64 },
    #[error("mu = {0} must be nonnegative")]
    MuRange(f64),
    #[error("kernel evaluated at x = 0 (non-integrable singularity)")]
    SingularPoint,
    #[error("structural radii need mu > 0")]
    NoMisalignment,
    #[error("kernel declaration invalid: {0}")]
    Declaration(String),
    #[error("short-range comparability failed at x = {x:.6e}: phi |x|^(1+alpha) = {ratio:.6e} outside [{lo:.6e}, {hi:.6e}]")]
    Comparability { x: f64, ratio: f64, lo: f64, hi: f64 },
    #[error("phi not non-increasing on (0, a0]: phi({x1:.6e}) = {v1:.6e} < phi({x2:.6e}) = {v2:.6e}")]
    NotMonotone { x1: f64, v1: f64, x2: f64, v2: f64 },
    #[error("tail integral {value:.6e} exceeds declared c2 = {c2:.6e}")]
    TailBound { value: f64, c2: f64 },
    #[error("periodized kernel bound failed at x = {x:.6e}: {what}")]
    PeriodizedBound { x: f64, what: String },
    #[error(transparent)]
    Quad(#[from] quad::QuadError),
}

/// Normalization constant of the fractional Laplacian in one dimension:
/// `c_alpha = 2^alpha Gamma((1+alpha)/2) / (sqrt(pi) |Gamma(-alpha/2)|)`.
pub fn levy_normalization(alpha: f64) -> Result<f64, KernelError> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(KernelError::AlphaRange(alpha));
    }
    let num = 2f64.powf(alpha) * libm::tgamma(0.5 * (1.0 + alpha));
    let den = PI.sqrt() * libm::tgamma(-0.5 * alpha).abs();
    Ok(num / den)
}

/// Shared view of any admissible influence kernel.
pub trait Kernel: Send + Sync {
    fn alpha(&self) -> f64;
    fn a0(&self) -> f64;
    fn c1(&self) -> f64;
    fn c2(&self) -> f64;
    /// Pointwise value; callers guarantee `x != 0`.
    fn eval(&self, x: f64) -> f64;
    /// `(phi, phi', phi'', phi''')` at a tail point `x >= a0`.
    fn tail_derivs(&self, x: f64) -> [f64; 4] {
        // Central differences; only used away from the singularity.
        let h = 1e-2 * x.max(1.0);
        let f = |y: f64| self.eval(y);
        let (fm2, fm1, f0, fp1, fp2) =
            (f(x - 2.0 * h), f(x - h), f(x), f(x + h), f(x + 2.0 * h));
        let d1 = (fp1 - fm1) / (2.0 * h);
        let d2 = (fp1 - 2.0 * f0 + fm1) / (h * h);
        let d3 = (fp2 - 2.0 * fp1 + 2.0 * fm1 - fm2) / (2.0 * h * h * h);
        [f0, d1, d2, d3]
    }
    /// One-sided signed tail integral `int_from^inf phi`.
    fn tail_integral(&self, from: f64) -> f64;
    /// One-sided absolute tail integral `int_from^inf |phi|`.
    fn tail_abs_integral(&self, from: f64) -> f64;
    /// Upper bound on `int_from^inf |phi''''|`, used as an integration-by-parts
    /// remainder. Defaults to the declared envelope `c2 / from^4`.
    fn tail_abs_quartic(&self, from: f64) -> f64 {
        self.c2() / from.powi(4)
    }
}

/// Checked evaluation of a kernel at `x`; rejects the singular point.
pub fn eval_phi(kernel: &dyn Kernel, x: f64) -> Result<f64, KernelError> {
    if x == 0.0 {
        return Err(KernelError::SingularPoint);
    }
    Ok(kernel.eval(x))
}

/// The two-power model kernel
/// `phi(x) = c_alpha |x|^{-1-alpha} - mu c_beta |x|^{-1-beta}`.
#[derive(Debug, Clone)]
pub struct PowerLawPairKernel {
    alpha: f64,
    beta: f64,
    mu: f64,
    c_alpha: f64,
    c_beta: f64,
    a0: f64,
    c1: f64,
    c2: f64,
}

impl PowerLawPairKernel {
    pub fn new(alpha: f64, beta: f64, mu: f64) -> Result<Self, KernelError> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(KernelError::AlphaRange(alpha));
        }
        if !(beta > 0.0 && beta < alpha) {
            return Err(KernelError::BetaRange { alpha, beta });
        }
        if mu < 0.0 {
            return Err(KernelError::MuRange(mu));
        }
        let c_alpha = levy_normalization(alpha)?;
        let c_beta = levy_normalization(beta)?;
        let mut k = PowerLawPairKernel {
            alpha,
            beta,
            mu,
            c_alpha,
            c_beta,
            a0: 0.0,
            c1: 0.0,
            c2: 0.0,
        };
        // Effective structural triple. Below the alignment radius the kernel
        // sits in the two-sided envelope (c_alpha/2, c_alpha) |x|^{-1-alpha},
        // so the comparability constant against the bare power is
        // max(c_alpha, 2/c_alpha).
        k.a0 = k.alignment_radius().min(0.5);
        k.c1 = (2.0 / c_alpha).max(c_alpha);
        k.c2 = 2.0 * k.tail_abs_integral(k.a0);
        Ok(k)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn c_alpha(&self) -> f64 {
        self.c_alpha
    }
    pub fn c_beta(&self) -> f64 {
        self.c_beta
    }

    /// Largest radius below which `phi > c_alpha / (2 |x|^{1+alpha})`.
    pub fn alignment_radius(&self) -> f64 {
        if self.mu == 0.0 {
            return f64::INFINITY;
        }
        (self.c_alpha / (2.0 * self.mu * self.c_beta)).powf(1.0 / (self.alpha - self.beta))
    }

    /// Radius beyond which the kernel is negative.
    pub fn misalignment_radius(&self) -> f64 {
        if self.mu == 0.0 {
            return f64::INFINITY;
        }
        (self.c_alpha / (self.mu * self.c_beta)).powf(1.0 / (self.alpha - self.beta))
    }

    /// Signed antiderivative of the tail: `F(x) = int_x^inf phi`.
    fn tail_antideriv(&self, x: f64) -> f64 {
        self.c_alpha * x.powf(-self.alpha) / self.alpha
            - self.mu * self.c_beta * x.powf(-self.beta) / self.beta
    }
}

/// Both structural radii of a two-power kernel, with sampled sign checks.
pub fn structural_radii(kernel: &PowerLawPairKernel) -> (f64, f64) {
    (kernel.alignment_radius(), kernel.misalignment_radius())
}

impl Kernel for PowerLawPairKernel {
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn a0(&self) -> f64 {
        self.a0
    }
    fn c1(&self) -> f64 {
        self.c1
    }
    fn c2(&self) -> f64 {
        self.c2
    }

    fn eval(&self, x: f64) -> f64 {
        let r = x.abs();
        self.c_alpha * r.powf(-1.0 - self.alpha) - self.mu * self.c_beta * r.powf(-1.0 - self.beta)
    }

    fn tail_derivs(&self, x: f64) -> [f64; 4] {
        let r = x.abs();
        let mut out = [0.0; 4];
        let mut fa = 1.0;
        let mut fb = 1.0;
        for (j, slot) in out.iter_mut().enumerate() {
            let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
            *slot = sgn
                * (self.c_alpha * fa * r.powf(-1.0 - self.alpha - j as f64)
                    - self.mu * self.c_beta * fb * r.powf(-1.0 - self.beta - j as f64));
            fa *= 1.0 + self.alpha + j as f64;
            fb *= 1.0 + self.beta + j as f64;
        }
        out
    }

    fn tail_integral(&self, from: f64) -> f64 {
        self.tail_antideriv(from)
    }

    fn tail_abs_integral(&self, from: f64) -> f64 {
        let r0 = self.misalignment_radius();
        if from >= r0 {
            -self.tail_antideriv(from)
        } else {
            // Positive up to the sign change, negative beyond.
            self.tail_antideriv(from) - 2.0 * self.tail_antideriv(r0)
        }
    }

    fn tail_abs_quartic(&self, from: f64) -> f64 {
        let p4 = |g: f64| (1.0 + g) * (2.0 + g) * (3.0 + g) * (4.0 + g);
        self.c_alpha * p4(self.alpha) * from.powf(-4.0 - self.alpha) / (4.0 + self.alpha)
            + self.mu * self.c_beta * p4(self.beta) * from.powf(-4.0 - self.beta)
                / (4.0 + self.beta)
    }
}

/// A user-supplied even kernel with declared structural constants.
///
/// The short-range comparability, monotonicity and the tail-integral bound
/// are verified on construction; the derivative conditions are accepted
/// from the declaration.
#[derive(Clone)]
pub struct GeneralKernel {
    alpha: f64,
    a0: f64,
    c1: f64,
    c2: f64,
    evaluator: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for GeneralKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneralKernel")
            .field("alpha", &self.alpha)
            .field("a0", &self.a0)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .finish()
    }
}

impl GeneralKernel {
    pub fn new<F>(alpha: f64, a0: f64, c1: f64, c2: f64, evaluator: F) -> Result<Self, KernelError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(KernelError::AlphaRange(alpha));
        }
        if !(a0 > 0.0 && a0 <= 0.5) {
            return Err(KernelError::Declaration(format!("a0 = {a0} outside (0, 1/2]")));
        }
        if c1 < 1.0 {
            return Err(KernelError::Declaration(format!("c1 = {c1} must be >= 1")));
        }
        if c2 < 0.0 {
            return Err(KernelError::Declaration(format!("c2 = {c2} must be >= 0")));
        }
        let k = GeneralKernel { alpha, a0, c1, c2, evaluator: Arc::new(evaluator) };
        k.validate()?;
        Ok(k)
    }

    /// Log-spaced sample of `(0, a0]` used by the structural checks.
    fn sample_points(&self) -> Vec<f64> {
        let lo: f64 = 1e-6 * self.a0;
        let ratio = (self.a0 / lo).ln() / (CHECK_SAMPLES - 1) as f64;
        (0..CHECK_SAMPLES).map(|i| (lo * (ratio * i as f64).exp()).min(self.a0)).collect()
    }

    fn validate(&self) -> Result<(), KernelError> {
        let pts = self.sample_points();
        let mut prev: Option<(f64, f64)> = None;
        for &x in &pts {
            let v = (self.evaluator)(x);
            let ratio = v * x.powf(1.0 + self.alpha);
            let lo = 1.0 / self.c1;
            let hi = self.c1;
            if !(ratio >= lo * (1.0 - CHECK_SLACK) - CHECK_SLACK
                && ratio <= hi * (1.0 + CHECK_SLACK) + CHECK_SLACK)
            {
                return Err(KernelError::Comparability { x, ratio, lo, hi });
            }
            if let Some((px, pv)) = prev {
                if v > pv * (1.0 + CHECK_SLACK) + CHECK_SLACK {
                    return Err(KernelError::NotMonotone { x1: px, v1: pv, x2: x, v2: v });
                }
            }
            prev = Some((x, v));
        }
        let tail = 2.0 * self.tail_abs_integral(self.a0);
        if tail > self.c2 + 1e-8 {
            return Err(KernelError::TailBound { value: tail, c2: self.c2 });
        }
        Ok(())
    }
}

impl Kernel for GeneralKernel {
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn a0(&self) -> f64 {
        self.a0
    }
    fn c1(&self) -> f64 {
        self.c1
    }
    fn c2(&self) -> f64 {
        self.c2
    }

    fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x.abs())
    }

    fn tail_integral(&self, from: f64) -> f64 {
        tail_quad(|x| self.eval(x), from)
    }

    fn tail_abs_integral(&self, from: f64) -> f64 {
        tail_quad(|x| self.eval(x).abs(), from)
    }
}

/// `int_from^inf g` for an integrable tail, via the map `x = from / t`.
fn tail_quad<F: Fn(f64) -> f64>(g: F, from: f64) -> f64 {
    quad::integrate_best_effort(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            let x = from / t;
            g(x) * from / (t * t)
        },
        0.0,
        1.0,
        1e-10,
        4000,
    )
    .map(|r| r.value)
    .unwrap_or(f64::NAN)
}

/// Periodization constants `(r0, c3)` for the unit torus:
/// `r0 = min(a0, (1/(6 c1 c2))^{1/(1+alpha)})` and
/// `c3 = c1 r0^{-(1+alpha)} + c2 (1 + 1/a0)`.
pub fn periodic_constants(kernel: &dyn Kernel) -> (f64, f64) {
    let (alpha, a0, c1, c2) = (kernel.alpha(), kernel.a0(), kernel.c1(), kernel.c2());
    let r0 = if c2 == 0.0 {
        a0
    } else {
        a0.min((1.0 / (6.0 * c1 * c2)).powf(1.0 / (1.0 + alpha)))
    };
    let c3 = c1 * r0.powf(-(1.0 + alpha)) + c2 * (1.0 + 1.0 / a0);
    (r0, c3)
}

/// Lattice-summed kernel on the torus: `phi_S(x) = sum_k phi(x + k)`,
/// truncated at `|k| <= truncation_k` with a reported tail bound.
#[derive(Clone)]
pub struct PeriodizedKernel {
    base: Arc<dyn Kernel>,
    r0: f64,
    c3: f64,
    truncation_k: usize,
}

impl std::fmt::Debug for PeriodizedKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodizedKernel")
            .field("r0", &self.r0)
            .field("c3", &self.c3)
            .field("truncation_k", &self.truncation_k)
            .finish()
    }
}

impl PeriodizedKernel {
    pub fn new(base: Arc<dyn Kernel>, truncation_k: usize) -> Result<Self, KernelError> {
        let (r0, c3) = periodic_constants(base.as_ref());
        let pk = PeriodizedKernel { base, r0, c3, truncation_k: truncation_k.max(1) };
        pk.validate()?;
        Ok(pk)
    }

    pub fn base(&self) -> &dyn Kernel {
        self.base.as_ref()
    }
    pub fn base_arc(&self) -> Arc<dyn Kernel> {
        self.base.clone()
    }
    pub fn r0(&self) -> f64 {
        self.r0
    }
    pub fn c3(&self) -> f64 {
        self.c3
    }
    pub fn truncation_k(&self) -> usize {
        self.truncation_k
    }

    /// Lattice sum at `x` in `[-1/2, 1/2] \ {0}`: images with `|k| <= K`
    /// summed directly, the rest by the midpoint Euler-Maclaurin formula
    /// `sum_{k > K} g(k) = int_{K+1/2}^inf g + g'(K+1/2)/24 + O(g''')`.
    pub fn eval(&self, x: f64) -> f64 {
        let mut s = self.base.eval(x);
        for k in 1..=self.truncation_k {
            s += self.base.eval(x + k as f64) + self.base.eval(x - k as f64);
        }
        let edge = self.truncation_k as f64 + 0.5;
        for cut in [edge + x, edge - x] {
            s += self.base.tail_integral(cut) + self.base.tail_derivs(cut)[1] / 24.0;
        }
        s
    }

    /// Checked lattice sum plus a bound on the dropped Euler-Maclaurin
    /// remainder (the `7 g'''(K+1/2)/5760` term, with a factor-2 margin).
    pub fn eval_with_tail(&self, x: f64) -> Result<(f64, f64), KernelError> {
        if x == 0.0 {
            return Err(KernelError::SingularPoint);
        }
        if !(-0.5..=0.5).contains(&x) {
            return Err(KernelError::Declaration(format!("x = {x} outside [-1/2, 1/2]")));
        }
        let edge = self.truncation_k as f64 + 0.5;
        let tail: f64 = [edge + x, edge - x]
            .iter()
            .map(|&cut| 2.0 * 7.0 / 5760.0 * self.base.tail_derivs(cut)[3].abs())
            .sum();
        Ok((self.eval(x), tail))
    }

    /// Sampled lower bound of `phi_S` on the torus, clamped at zero.
    /// `Some(m)` with `m >= 0` only when the sampled minimum is nonnegative.
    pub fn floor_phi_m(&self) -> Option<f64> {
        let mut min = f64::INFINITY;
        let n = 2048;
        for i in 1..=n {
            let x = 0.5 * i as f64 / n as f64;
            min = min.min(self.eval(x));
        }
        if min >= 0.0 {
            Some(min)
        } else {
            None
        }
    }

    fn validate(&self) -> Result<(), KernelError> {
        let alpha = self.base.alpha();
        let c1 = self.base.c1();
        // (A1^S): two-sided comparability up to r0, with the doubled constant.
        let lo: f64 = 1e-5 * self.r0;
        let m = 64;
        let ratio = (self.r0 / lo).ln() / (m - 1) as f64;
        for i in 0..m {
            let x = (lo * (ratio * i as f64).exp()).min(self.r0);
            let v = self.eval(x) * x.powf(1.0 + alpha);
            if v < 0.5 / c1 * (1.0 - 1e-6) || v > 2.0 * c1 * (1.0 + 1e-6) {
                return Err(KernelError::PeriodizedBound {
                    x,
                    what: format!("phi_S |x|^(1+alpha) = {v:.6e} outside [1/(2 c1), 2 c1]"),
                });
            }
        }
        // (A2^S): sup bound between r0 and 1/2.
        for i in 0..=m {
            let x = self.r0 + (0.5 - self.r0) * i as f64 / m as f64;
            if x <= 0.0 || x > 0.5 {
                continue;
            }
            let v = self.eval(x).abs();
            if v > self.c3 * (1.0 + 1e-6) {
                return Err(KernelError::PeriodizedBound {
                    x,
                    what: format!("|phi_S| = {v:.6e} exceeds c3 = {:.6e}", self.c3),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_matches_known_values() {
        // Reference values from a 40-digit gamma evaluation.
        assert!((levy_normalization(1.0).unwrap() - 1.0 / PI).abs() < 1e-14);
        assert!((levy_normalization(0.5).unwrap() - 0.19947114020071634).abs() < 1e-15);
        assert!((levy_normalization(1.5).unwrap() - 0.29920671030107451).abs() < 1e-15);
        assert!((levy_normalization(0.25).unwrap() - 0.11041062584210533).abs() < 1e-15);
    }

    #[test]
    fn normalization_vanishes_at_zero() {
        assert!(levy_normalization(1e-6).unwrap() < 1e-6);
        assert!(levy_normalization(2.1).is_err());
        assert!(levy_normalization(0.0).is_err());
    }

    #[test]
    fn eval_even_and_signed() {
        let k = PowerLawPairKernel::new(1.5, 0.5, 2.0).unwrap();
        for &x in &[0.037, 0.21, 0.9, 3.4] {
            let v = eval_phi(&k, x).unwrap();
            assert_eq!(v, eval_phi(&k, -x).unwrap());
        }
        assert!(eval_phi(&k, 0.0).is_err());
        // Negative beyond the misalignment radius, positive below alignment.
        let (ra, rm) = structural_radii(&k);
        assert!(k.eval(0.5 * ra) > 0.0);
        assert!(k.eval(1.5 * rm) < 0.0);
        assert!((ra - rm * 2f64.powf(-1.0 / (1.5 - 0.5))).abs() < 1e-14);
    }

    #[test]
    fn pure_power_at_one() {
        let k = PowerLawPairKernel::new(1.5, 0.5, 0.0).unwrap();
        assert!((k.eval(1.0) - k.c_alpha()).abs() < 1e-15);
        assert_eq!(k.alignment_radius(), f64::INFINITY);
    }

    #[test]
    fn misalignment_radius_unit() {
        // mu chosen so c_alpha / (mu c_beta) = 1.
        let (alpha, beta) = (1.5, 0.5);
        let ca = levy_normalization(alpha).unwrap();
        let cb = levy_normalization(beta).unwrap();
        let k = PowerLawPairKernel::new(alpha, beta, ca / cb).unwrap();
        assert!((k.misalignment_radius() - 1.0).abs() < 1e-12);
        assert!((k.alignment_radius() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn model_kernel_satisfies_own_declaration() {
        // The derived (a0, c1, c2) triple must pass the same sampled checks
        // applied to user kernels.
        for &(alpha, beta, mu) in &[(1.2, 0.4, 1.0), (0.5, 0.25, 2.0), (1.9, 0.3, 0.5)] {
            let k = PowerLawPairKernel::new(alpha, beta, mu).unwrap();
            let k2 = k.clone();
            GeneralKernel::new(alpha, k.a0(), k.c1(), k.c2() * (1.0 + 1e-9), move |x| k2.eval(x))
                .unwrap();
        }
    }

    #[test]
    fn power_pair_tail_integrals_match_quadrature() {
        let k = PowerLawPairKernel::new(1.2, 0.4, 1.0).unwrap();
        for &from in &[0.5, 1.0, 3.0] {
            let q = tail_quad(|x| k.eval(x).abs(), from);
            assert!(
                (q - k.tail_abs_integral(from)).abs() < 1e-8,
                "abs tail mismatch at {from}: {q} vs {}",
                k.tail_abs_integral(from)
            );
            let qs = tail_quad(|x| k.eval(x), from);
            assert!((qs - k.tail_integral(from)).abs() < 1e-8);
        }
    }

    #[test]
    fn general_kernel_rejects_bad_declarations() {
        // Too-tight c1 for a kernel that actually varies by a factor 4.
        let r = GeneralKernel::new(1.0, 0.4, 1.0, 1.0, |x: f64| {
            let r = x.abs();
            if r <= 0.4 {
                4.0 * r.powf(-2.0)
            } else {
                0.0
            }
        });
        assert!(matches!(r, Err(KernelError::Comparability { .. })));
        // Tail exceeding declared c2.
        let r = GeneralKernel::new(1.0, 0.4, 10.0, 0.01, |x: f64| x.abs().powf(-2.0));
        assert!(matches!(r, Err(KernelError::TailBound { .. })));
    }

    #[test]
    fn periodic_constants_worked_example() {
        // a0 = 0.5, c1 = 1, c2 = 1, alpha = 1.
        let k = GeneralKernel::new(1.0, 0.5, 1.0, 1.0, |x: f64| {
            let r = x.abs();
            if r <= 0.5 {
                r.powf(-2.0)
            } else {
                // Tail slightly inside the declared two-sided integral 1.
                0.25 * (1.0 - 1e-6) / (r * r)
            }
        })
        .unwrap();
        let (r0, c3) = periodic_constants(&k);
        assert!((r0 - (1.0f64 / 6.0).sqrt()).abs() < 1e-10, "r0 = {r0}");
        assert!((c3 - 9.0).abs() < 1e-10, "c3 = {c3}");
    }

    #[test]
    fn r0_shrinks_with_c1() {
        let mk = |c1: f64| {
            let (r0, _) = periodic_constants(&ScaledPower { c1 });
            r0
        };
        assert!(mk(1.0) > mk(10.0));
        assert!(mk(10.0) > mk(1000.0));
    }

    /// Minimal stub used by `r0_shrinks_with_c1`.
    struct ScaledPower {
        c1: f64,
    }
    impl Kernel for ScaledPower {
        fn alpha(&self) -> f64 {
            1.0
        }
        fn a0(&self) -> f64 {
            0.5
        }
        fn c1(&self) -> f64 {
            self.c1
        }
        fn c2(&self) -> f64 {
            1.0
        }
        fn eval(&self, x: f64) -> f64 {
            x.abs().powf(-2.0)
        }
        fn tail_integral(&self, from: f64) -> f64 {
            1.0 / from
        }
        fn tail_abs_integral(&self, from: f64) -> f64 {
            1.0 / from
        }
    }

    #[test]
    fn periodized_compact_support_is_identity() {
        // Compactly supported kernel: all shifted images vanish on the torus.
        let k = GeneralKernel::new(0.8, 0.4, 1.0, 1e-12, |x: f64| {
            let r = x.abs();
            if r <= 0.4 {
                r.powf(-1.8)
            } else {
                0.0
            }
        })
        .unwrap();
        let base: Arc<dyn Kernel> = Arc::new(k);
        let pk = PeriodizedKernel::new(base.clone(), 64).unwrap();
        for &x in &[0.05, 0.2, 0.39, 0.45] {
            assert_eq!(pk.eval(x), base.eval(x));
        }
    }

    #[test]
    fn periodization_truncation_converges() {
        let k: Arc<dyn Kernel> = Arc::new(PowerLawPairKernel::new(1.5, 0.5, 1.0).unwrap());
        let p64 = PeriodizedKernel::new(k.clone(), 64).unwrap();
        let p128 = PeriodizedKernel::new(k, 128).unwrap();
        let d = (p64.eval(0.3) - p128.eval(0.3)).abs();
        assert!(d < 1e-10, "truncation gap {d}");
        let (v, tail) = p64.eval_with_tail(0.3).unwrap();
        assert!(d <= tail, "reported tail bound {tail} < observed gap {d}");
        assert_eq!(p64.eval(0.25), p64.eval(-0.25));
        assert!((v - p64.eval(0.3)).abs() == 0.0);
    }

    #[test]
    fn phi_m_floor_for_nonnegative_kernel() {
        let k: Arc<dyn Kernel> = Arc::new(PowerLawPairKernel::new(1.2, 0.4, 0.0).unwrap());
        let pk = PeriodizedKernel::new(k, 64).unwrap();
        let m = pk.floor_phi_m().expect("pure power periodization is positive");
        assert!(m > 0.0);
        let k: Arc<dyn Kernel> = Arc::new(PowerLawPairKernel::new(1.0, 0.5, 6.0).unwrap());
        let pk = PeriodizedKernel::new(k, 64).unwrap();
        assert!(pk.floor_phi_m().is_none());
    }
}
