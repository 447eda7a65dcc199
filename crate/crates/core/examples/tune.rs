use easim::burgers::burgers_run;
use easim::dynamics::*;
use easim::field::{Field, Grid};
use easim::kernel::{Kernel, PeriodizedKernel, PowerLawPairKernel};
use easim::symbol::SymbolTable;
use std::sync::Arc;

fn main2() {}

#[allow(clippy::excessive_precision)]
fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    if which == "richardson" {
        let g = Grid::new(64).unwrap();
        let alpha = 0.8;
        let a = SymbolTable::pure_power(&g, alpha);
        let k = PowerLawPairKernel::new(alpha, 0.4, 0.0).unwrap();
        let pk = PeriodizedKernel::new(Arc::new(k) as Arc<dyn Kernel>, 64).unwrap();
        let mut finals = Vec::new();
        for dt in [4e-3, 2e-3, 1e-3] {
            let (rho0, u0) = build_initial(&g, &InitPreset::Cosine {
                rho_bar: 1.0, amplitude: 0.2, mode_m: 1, u_amplitude: 0.1, mode_n: 1 });
            let control = StepControl { cfl: 1.0, dt_max: dt, ..Default::default() };
            let setup = RunSetup { symbol: &a, pk: &pk, control, t_end: 0.1,
                diag_dt: 0.1, snapshot_dt: 0.1, energy_every: 1 };
            let res = run(rho0, u0, &setup).unwrap();
            assert!(res.termination.is_completed());
            finals.push(res.final_state.rho.clone());
        }
        let err = |a: &Field, b: &Field| -> f64 {
            a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max)
        };
        let e1 = err(&finals[0], &finals[1]);
        let e2 = err(&finals[1], &finals[2]);
        println!("richardson: e1={e1:.3e} e2={e2:.3e} ratio={:.2}", e1 / e2);
    }
    if which == "rates" {
        let g = Grid::new(64).unwrap();
        let (alpha, beta, mu) = (1.0, 0.5, 4.0);
        let a = SymbolTable::closed_form(&g, alpha, beta, mu);
        let k = PowerLawPairKernel::new(alpha, beta, mu).unwrap();
        let pk = PeriodizedKernel::new(Arc::new(k) as Arc<dyn Kernel>, 64).unwrap();
        for m in [1u32, 2, 4] {
            let eps = 1e-6;
            let rho0 = Field::from_fn(&g, |x| 1.0 + eps * (2.0 * std::f64::consts::PI * m as f64 * x).cos());
            // G = 0 manifold: u0 = primitive of L rho0.
            let lrho = rho0.apply_multiplier(&a).unwrap();
            let u0 = lrho.add_scalar(-lrho.mean()).mean_free_primitive().unwrap();
            let control = StepControl { dt_max: 1e-4, vacuum_eps: 1e-12, ..Default::default() };
            let setup = RunSetup { symbol: &a, pk: &pk, control, t_end: 0.01,
                diag_dt: 0.01, snapshot_dt: 0.01, energy_every: 1 };
            let res = run(rho0, u0, &setup).unwrap();
            let spec0 = eps; // initial amplitude of mode m
            let specf = 2.0 * res.final_state.rho.spectrum()[m as usize].norm();
            let rate = (specf / spec0).ln() / 0.01;
            let zeta = 2.0 * std::f64::consts::PI * m as f64;
            let aval = zeta.powf(alpha) - mu * zeta.powf(beta);
            println!("m={m}: measured rate {rate:.6}, -rho_bar*A = {:.6}, rel err {:.2e}",
                -aval, (rate + aval).abs() / aval.abs());
        }
    }
    if which == "cosine" {
        let g = Grid::new(256).unwrap();
        let (alpha, beta, mu) = (1.2, 0.4, 1.0);
        let a = SymbolTable::closed_form(&g, alpha, beta, mu);
        let k = PowerLawPairKernel::new(alpha, beta, mu).unwrap();
        let pk = PeriodizedKernel::new(Arc::new(k) as Arc<dyn Kernel>, 64).unwrap();
        let (rho0, u0) = build_initial(&g, &InitPreset::Cosine {
            rho_bar: 1.0, amplitude: 0.2, mode_m: 1, u_amplitude: 0.1, mode_n: 1 });
        let setup = RunSetup { symbol: &a, pk: &pk, control: StepControl::default(),
            t_end: 1.0, diag_dt: 0.01, snapshot_dt: 0.25, energy_every: 10 };
        let t0 = std::time::Instant::now();
        let res = run(rho0, u0, &setup).unwrap();
        println!("cosine: term={} viol={} [{:?}]", res.termination.label(), res.violations.len(), t0.elapsed());
        for v in res.violations.iter().take(5) { println!("  {v}"); }
        let mass_drift = res.records.iter().map(|r| ((r.mass - res.mass0) / res.mass0).abs()).fold(0.0f64, f64::max);
        let mom_drift = res.records.iter().map(|r| (r.momentum - res.p0).abs()).fold(0.0f64, f64::max);
        let g_drift = res.records.iter().map(|r| r.int_g.abs()).fold(0.0f64, f64::max);
        println!("  drifts: mass {mass_drift:.2e} mom {mom_drift:.2e} intG {g_drift:.2e}");
        let fmax: Vec<f64> = res.records.iter().map(|r| r.max_abs_f).collect();
        let hmax: Vec<f64> = res.records.iter().map(|r| r.max_abs_h).collect();
        let fmono = fmax.windows(2).all(|w| w[1] <= w[0] + 1e-6 * 0.01);
        let hmono = hmax.windows(2).all(|w| w[1] <= w[0] + 1e-6 * 0.01);
        println!("  F mono: {fmono}  H mono: {hmono}  F0 {:.4} H0 {:.4}", fmax[0], hmax[0]);
        let eres = res.records.iter().map(|r| r.energy_fluct_rate_residual).fold(0.0f64, f64::max);
        println!("  energy res {eres:.3e}");
    }
    if which == "crit6" {
        let g = Grid::new(256).unwrap();
        let (alpha, beta, mu) = (1.2, 0.4, 1.0);
        let a = SymbolTable::closed_form(&g, alpha, beta, mu);
        let k = PowerLawPairKernel::new(alpha, beta, mu).unwrap();
        let pk = PeriodizedKernel::new(Arc::new(k) as Arc<dyn Kernel>, 64).unwrap();
        for seed in [11u64, 22, 33, 44, 55] {
            let (rho0, u0) = build_initial(&g, &InitPreset::RandomBandlimited {
                rho_bar: 1.0, amplitude: 0.6, u_amplitude: 0.2, modes: 6, seed });
            let setup = RunSetup { symbol: &a, pk: &pk, control: StepControl::default(),
                t_end: 2.0, diag_dt: 0.02, snapshot_dt: 0.25, energy_every: 50 };
            let t0 = std::time::Instant::now();
            let res = run(rho0, u0, &setup).unwrap();
            let density_viol = res.violations.iter().filter(|v| v.name == "lower_bound" || v.name == "upper_bound_M1").count();
            // criterion check quantities
            let lb_ok = res.records.iter().all(|r| r.min_rho >= r.lower_bound - 1e-6);
            let ub_ok = res.records.iter().all(|r| r.max_rho <= r.upper_bound_m1 + 1e-6);
            println!("seed {seed}: term={} min_rho0={:.3} dens_viol={density_viol} lb_ok={lb_ok} ub_ok={ub_ok} M0={:.3e} c3={:.3e} M1={:.3e} [{:?}]",
                res.termination.label(), res.snapshots[0].rho.min(), res.consts.m0, res.consts.c3, res.consts.m1, t0.elapsed());
            // criterion 9/11 on the first seed
            if seed == 11 {
                use easim::moc::*;
                let (spec, _ledger) = select_parameters(1.0, &res.consts).unwrap();
                println!("  spec: delta={:.3e} gamma={:.3e} ln_lambda={:.3e}", spec.delta, spec.gamma, spec.ln_lambda());
                for (name, ok) in reverify_parameters(&spec, &res.consts, res.consts.lower_envelope(1.0)) {
                    if !ok { println!("  REVERIFY FAIL {name}"); }
                }
                let snaps: Vec<(f64, Field)> = res.snapshots.iter().map(|s| (s.t, s.rho.clone())).collect();
                let pres = verify_preservation(&snaps, &spec);
                println!("  preservation: breakthrough={:?} sup_dxrho={:.3e} lip_ok={}",
                    pres.first_breakthrough, pres.sup_dxrho, pres.lipschitz_ok);
                // velocity MOC at 5 sampled times, distances <= r0/4
                let r0 = res.consts.r0;
                let mmax = ((0.25 * r0) / g.dx()).floor() as usize;
                let mut worst: f64 = f64::INFINITY;
                for snap in res.snapshots.iter().take(5) {
                    let st = SimState { t: snap.t, rho: snap.rho.clone(), g: snap.g.clone() };
                    let der = reconstruct_velocity(&st, &a, res.p0).unwrap();
                    for m in 1..=mmax {
                        let d = m as f64 * g.dx();
                        let om = omega_velocity(&spec, &res.consts, d).unwrap();
                        for i in 0..g.n() {
                            let j = (i + m) % g.n();
                            let du = (der.u.values()[i] - der.u.values()[j]).abs();
                            worst = worst.min(om + 1e-4 - du);
                        }
                    }
                }
                println!("  velocity MOC worst margin: {worst:.3e} (r0/4 = {:.3e}, mmax={mmax})", 0.25*r0);
            }
        }
    }
    if which == "crit10" {
        use easim::moc::*;
        use easim::rng::SplitMix64;
        for alpha in [0.5f64, 1.0, 1.5] {
            let g = Grid::new(2048).unwrap();
            let spec = MocSpec::new(0.2, 0.049, 0.02, alpha).unwrap();
            let kk = easim::kernel::GeneralKernel::new(alpha, 0.4, 1.0, 1e-12, move |x: f64| {
                let r = x.abs();
                if r <= 0.4 { r.powf(-1.0 - alpha) } else { 0.0 }
            }).unwrap();
            let mut rng = SplitMix64::new(1000 + alpha as u64);
            let mut worst_margin = f64::INFINITY;
            let t0 = std::time::Instant::now();
            for _cfg in 0..20 {
                let xi_nodes = 2 * (2 + (rng.next_f64() * 100.0) as usize); // 4..204
                let center = (rng.next_f64() * 2048.0) as usize % 2048;
                let (rho, i, j) = breakthrough_profile(&g, &spec, 2.0, center, xi_nodes).unwrap();
                let r = d1_dissipation(&rho, i, j, &kk, &spec).unwrap();
                assert!(r.breakthrough, "xi_nodes {xi_nodes}");
                let m = r.value - (r.bound.unwrap() - 1e-4);
                worst_margin = worst_margin.min(m);
                if m < 0.0 { println!("  FAIL alpha={alpha} xi={:.4}: D1={:.4e} bound={:.4e}", r.xi, r.value, r.bound.unwrap()); }
            }
            println!("alpha={alpha}: worst margin {worst_margin:.4e} [{:?}]", t0.elapsed());
        }
    }
    if which == "misalign" {
        // criterion 12 candidates: alpha=1.0, beta=0.5, near_vacuum rho=1,a=0.9
        for mu in [0.0, 1.0, 4.0] {
            let (alpha, beta) = (1.0, 0.5);
            let g = Grid::new(256).unwrap();
            let k = PowerLawPairKernel::new(alpha, beta, mu).unwrap();
            let a = SymbolTable::closed_form(&g, alpha, beta, mu);
            let pk = PeriodizedKernel::new(Arc::new(k) as Arc<dyn Kernel>, 64).unwrap();
            let (rho0, u0) = build_initial(&g, &InitPreset::NearVacuum { rho_bar: 1.0, amplitude: 0.9, u_amplitude: 0.1 });
            let setup = RunSetup {
                symbol: &a, pk: &pk,
                control: StepControl { vacuum_eps: 1e-6, gradient_cap: 1e5, ..Default::default() },
                t_end: 5.0, diag_dt: 0.05, snapshot_dt: 1.0, energy_every: 50,
            };
            let t0 = std::time::Instant::now();
            let res = run(rho0, u0, &setup).unwrap();
            let minrhos: Vec<f64> = res.records.iter().map(|r| r.min_rho).collect();
            let second_half: Vec<f64> = res.records.iter().filter(|r| r.t >= 0.5 * res.final_state.t).map(|r| r.min_rho).collect();
            let mono_dec = second_half.windows(2).all(|w| w[1] <= w[0] + 1e-12);
            println!("mu={mu}: term={} final_t={:.3} min_run={:.4e} last={:.4e} mono2nd={} viol={} steps~{} [{:?}]",
                res.termination.label(), res.final_state.t, res.min_rho_over_run,
                minrhos.last().unwrap(), mono_dec, res.violations.len(), res.records.len(), t0.elapsed());
            for v in res.violations.iter().take(4) { println!("   {v}"); }
        }
    }
    if which == "burgers" {
        for (alpha, n, amp, capx) in [
            (1.2, 256, 1.0, 4.0), (1.2, 512, 1.0, 4.0),
            (0.6, 256, 1.0, 4.0), (0.6, 512, 1.0, 4.0),
            (0.6, 256, 2.0, 4.0), (0.6, 512, 2.0, 4.0),
            (0.6, 256, 1.0, 3.0), (0.6, 512, 1.0, 3.0),
        ] {
            let g = Grid::new(n).unwrap();
            let a = SymbolTable::pure_power(&g, alpha);
            let u0 = Field::from_fn(&g, |x| amp * (2.0 * std::f64::consts::PI * x).sin());
            let grad0 = u0.derivative().linf();
            let control = StepControl { gradient_cap: capx * grad0, ..Default::default() };
            let t0 = std::time::Instant::now();
            let res = burgers_run(u0, &a, &control, 5.0, 0.01, 5.0);
            println!("alpha={alpha} N={n} amp={amp} cap={capx}x: term={} final_t={:.4} maxgrad={:.3e} blowup_t={:?} [{:?}]",
                res.termination.label(), res.final_state.t, res.max_grad, res.blowup_time, t0.elapsed());
        }
    }
}
