//! Acceptance suite: every releasable property of the solver and its
//! verification machinery, one test per criterion, each printing a
//! `criterion NN ...: PASS` line (run with `--nocapture` to see them).

use std::sync::Arc;
use std::time::Instant;

use easim::diagnostics::TheoryConstants;
use easim::dynamics::{
    advance, build_initial, compute_g0, reconstruct_velocity, run, InitPreset, RunResult,
    RunSetup, SimState, StepControl, Termination,
};
use easim::field::{Field, Grid};
use easim::kernel::{levy_normalization, GeneralKernel, Kernel, PeriodizedKernel, PowerLawPairKernel};
use easim::moc::{
    breakthrough_profile, check_obeys, d1_dissipation, omega_velocity, reverify_parameters,
    select_parameters, verify_preservation, MocSpec,
};
use easim::rng::SplitMix64;
use easim::symbol::{symbol_closed_form, symbol_quadrature, SymbolTable};

const PI: f64 = std::f64::consts::PI;

fn pass(name: &str, detail: String) {
    println!("criterion {name}: PASS ({detail})");
}

/// Kernel + symbol + periodization for the two-power family.
fn power_setup(
    n: usize,
    alpha: f64,
    beta: f64,
    mu: f64,
) -> (Grid, PowerLawPairKernel, PeriodizedKernel, SymbolTable) {
    let grid = Grid::new(n).unwrap();
    let kernel = PowerLawPairKernel::new(alpha, beta, mu).unwrap();
    let table = SymbolTable::closed_form(&grid, alpha, beta, mu);
    let pk = PeriodizedKernel::new(Arc::new(kernel.clone()) as Arc<dyn Kernel>, 64).unwrap();
    (grid, kernel, pk, table)
}

#[test]
fn criterion_01_symbol_oracle() {
    let start = Instant::now();
    let grid = Grid::new(256).unwrap();
    let mut worst: f64 = 0.0;
    for (alpha, beta, mu) in
        [(0.5, 0.25, 1.0), (1.0, 0.5, 2.0), (1.2, 0.4, 1.0), (1.5, 0.5, 2.0), (1.9, 0.3, 0.5)]
    {
        let kernel = PowerLawPairKernel::new(alpha, beta, mu).unwrap();
        let table = SymbolTable::from_quadrature(&grid, &kernel, 1e-8).unwrap();
        table.validate().unwrap();
        for j in 0..grid.n() {
            let exact = symbol_closed_form(alpha, beta, mu, table.zeta(j));
            worst = worst.max((table.value(j) - exact).abs());
        }
    }
    let elapsed = start.elapsed();
    assert!(worst < 1e-6, "worst |quadrature - closed form| = {worst:.3e}");
    assert!(elapsed.as_secs_f64() < 10.0, "runtime {elapsed:?} exceeds 10 s");
    pass("01 symbol oracle", format!("worst error {worst:.3e}, runtime {elapsed:?}"));
}

#[test]
fn criterion_02_normalization_oracle() {
    // Reference values from a 40-digit evaluation of
    // 2^a Gamma((1+a)/2) / (sqrt(pi) |Gamma(-a/2)|).
    let c1 = levy_normalization(1.0).unwrap();
    assert!((c1 - 1.0 / PI).abs() < 1e-10, "c_1 = {c1}");
    let mut worst: f64 = 0.0;
    for (alpha, reference) in [
        (0.25, 0.11041062584210533404),
        (0.5, 0.19947114020071633897),
        (1.5, 0.29920671030107450845),
    ] {
        let v = levy_normalization(alpha).unwrap();
        let rel = ((v - reference) / reference).abs();
        worst = worst.max(rel);
        assert!(rel < 1e-10, "c_{alpha} = {v} vs {reference} (rel {rel:.2e})");
    }
    pass("02 normalization oracle", format!("worst relative error {worst:.3e}"));
}

#[test]
fn criterion_03_eigenfunction_identity() {
    let n = 96;
    let grid = Grid::new(n).unwrap();
    let (alpha, beta, mu) = (1.3, 0.5, 1.5);
    let table = SymbolTable::closed_form(&grid, alpha, beta, mu);
    let mut worst: f64 = 0.0;
    for m in 1..=n / 3 {
        let f = Field::from_fn(&grid, |x| (2.0 * PI * m as f64 * x).cos());
        let out = f.apply_multiplier(&table).unwrap();
        let a = symbol_closed_form(alpha, beta, mu, 2.0 * PI * m as f64);
        let scale = a.abs().max(1.0);
        for (j, v) in out.values().iter().enumerate() {
            let expect = a * (2.0 * PI * m as f64 * grid.node(j)).cos();
            worst = worst.max((v - expect).abs() / scale);
        }
    }
    assert!(worst < 1e-12, "worst relative error {worst:.3e}");
    pass("03 eigenfunction identity", format!("worst relative error {worst:.3e}"));
}

/// The criterion 4/5 run: cosine preset, N = 256, T = 1.
fn conservation_run() -> RunResult {
    let (grid, _, pk, table) = power_setup(256, 1.2, 0.4, 1.0);
    let (rho0, u0) = build_initial(
        &grid,
        &InitPreset::Cosine { rho_bar: 1.0, amplitude: 0.2, mode_m: 1, u_amplitude: 0.1, mode_n: 1 },
    );
    let setup = RunSetup {
        symbol: &table,
        pk: &pk,
        control: StepControl::default(),
        t_end: 1.0,
        diag_dt: 0.01,
        snapshot_dt: 0.25,
        energy_every: 10,
    };
    run(rho0, u0, &setup).unwrap()
}

#[test]
fn criterion_04_conservation_suite() {
    let start = Instant::now();
    let res = conservation_run();
    let elapsed = start.elapsed();
    assert!(res.termination.is_completed(), "{:?}", res.termination);
    let mut mass = 0.0f64;
    let mut mom = 0.0f64;
    let mut intg = 0.0f64;
    for r in &res.records {
        mass = mass.max(((r.mass - res.mass0) / res.mass0).abs());
        mom = mom.max((r.momentum - res.p0).abs() / res.p0.abs().max(1.0));
        intg = intg.max(r.int_g.abs());
    }
    assert!(mass < 1e-9, "mass drift {mass:.3e}");
    assert!(mom < 1e-9, "momentum drift {mom:.3e}");
    assert!(intg < 1e-9, "int G drift {intg:.3e}");
    assert!(elapsed.as_secs_f64() < 60.0, "runtime {elapsed:?} exceeds 60 s");
    pass(
        "04 conservation suite",
        format!("drifts mass {mass:.2e}, momentum {mom:.2e}, int G {intg:.2e}, runtime {elapsed:?}"),
    );
}

#[test]
fn criterion_05_maximum_principles() {
    let res = conservation_run();
    let mut worst_f = f64::NEG_INFINITY;
    let mut worst_h = f64::NEG_INFINITY;
    for w in res.records.windows(2) {
        let dt = w[1].t - w[0].t;
        worst_f = worst_f.max(w[1].max_abs_f - w[0].max_abs_f - 1e-6 * dt);
        worst_h = worst_h.max(w[1].max_abs_h - w[0].max_abs_h - 1e-6 * dt);
    }
    assert!(worst_f <= 0.0, "max|F| rises beyond tolerance by {worst_f:.3e}");
    assert!(worst_h <= 0.0, "max|H| rises beyond tolerance by {worst_h:.3e}");
    assert!(!res.violations.iter().any(|v| v.name.starts_with("max_principle")));
    pass(
        "05 maximum principles",
        format!("largest tolerated increase margins {worst_f:.2e} (F), {worst_h:.2e} (H)"),
    );
}

/// The criterion 6 family: seeded random data, min rho0 >= 0.3, the
/// (1.2, 0.4, 1.0) kernel.
fn bounded_run(seed: u64, t_end: f64) -> RunResult {
    let (grid, _, pk, table) = power_setup(256, 1.2, 0.4, 1.0);
    let (rho0, u0) = build_initial(
        &grid,
        &InitPreset::RandomBandlimited {
            rho_bar: 1.0,
            amplitude: 0.6,
            u_amplitude: 0.2,
            modes: 6,
            seed,
        },
    );
    assert!(rho0.min() >= 0.3, "preset must keep min rho0 >= 0.3");
    let setup = RunSetup {
        symbol: &table,
        pk: &pk,
        control: StepControl::default(),
        t_end,
        diag_dt: 0.02,
        snapshot_dt: 0.1,
        energy_every: 50,
    };
    run(rho0, u0, &setup).unwrap()
}

#[test]
fn criterion_06_density_bounds() {
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = f64::INFINITY;
    for seed in [11u64, 22, 33, 44, 55] {
        let res = bounded_run(seed, 2.0);
        assert!(res.termination.is_completed(), "seed {seed}: {:?}", res.termination);
        for r in &res.records {
            worst_lower = worst_lower.min(r.min_rho - (r.lower_bound - 1e-6));
            worst_upper = worst_upper.min(r.upper_bound_m1 + 1e-6 - r.max_rho);
            assert!(
                r.min_rho >= r.lower_bound - 1e-6,
                "seed {seed} t {}: min rho {} below envelope {}",
                r.t,
                r.min_rho,
                r.lower_bound
            );
            assert!(
                r.max_rho <= r.upper_bound_m1 + 1e-6,
                "seed {seed} t {}: max rho {} above M1 {}",
                r.t,
                r.max_rho,
                r.upper_bound_m1
            );
        }
        assert!(!res
            .violations
            .iter()
            .any(|v| v.name == "lower_bound" || v.name == "upper_bound_M1"));
    }
    pass(
        "06 density bounds",
        format!("smallest margins: lower {worst_lower:.3e}, upper {worst_upper:.3e}"),
    );
}

#[test]
fn criterion_07_linearized_rates() {
    // A(2 pi m) < 0 for m = 1, 2 (growth) and > 0 for m = 4 (decay).
    let (grid, _, pk, table) = power_setup(64, 1.0, 0.5, 4.0);
    let t_end = 0.01;
    let mut saw_growth = false;
    let mut saw_decay = false;
    let mut worst = 0.0f64;
    for m in [1u32, 2, 4] {
        let eps = 1e-6;
        let rho0 =
            Field::from_fn(&grid, |x| 1.0 + eps * (2.0 * PI * m as f64 * x).cos());
        // G0 = 0 initial manifold: du0/dx = L rho0.
        let lrho = rho0.apply_multiplier(&table).unwrap();
        let u0 = lrho.add_scalar(-lrho.mean()).mean_free_primitive().unwrap();
        let control = StepControl { dt_max: 1e-4, ..Default::default() };
        let setup = RunSetup {
            symbol: &table,
            pk: &pk,
            control,
            t_end,
            diag_dt: t_end,
            snapshot_dt: t_end,
            energy_every: 1,
        };
        let res = run(rho0, u0, &setup).unwrap();
        let amp = 2.0 * res.final_state.rho.spectrum()[m as usize].norm();
        let rate = (amp / eps).ln() / t_end;
        let a = symbol_closed_form(1.0, 0.5, 4.0, 2.0 * PI * m as f64);
        let rel = (rate + a).abs() / a.abs();
        worst = worst.max(rel);
        assert!(rel < 0.01, "mode {m}: rate {rate} vs {} (rel {rel:.2e})", -a);
        saw_growth |= a < 0.0;
        saw_decay |= a > 0.0;
    }
    assert!(saw_growth && saw_decay, "both symbol signs must be exercised");
    pass("07 linearized rates", format!("worst relative rate error {worst:.3e}"));
}

#[test]
fn criterion_08_integrator_order() {
    let grid = Grid::new(64).unwrap();
    let alpha = 0.8;
    let kernel = PowerLawPairKernel::new(alpha, 0.4, 0.0).unwrap();
    let table = SymbolTable::pure_power(&grid, alpha);
    let pk = PeriodizedKernel::new(Arc::new(kernel) as Arc<dyn Kernel>, 64).unwrap();
    let mut finals = Vec::new();
    for dt in [4e-3, 2e-3, 1e-3] {
        let (rho0, u0) = build_initial(
            &grid,
            &InitPreset::Cosine {
                rho_bar: 1.0,
                amplitude: 0.2,
                mode_m: 1,
                u_amplitude: 0.1,
                mode_n: 1,
            },
        );
        let control = StepControl { cfl: 1.0, dt_max: dt, ..Default::default() };
        let setup = RunSetup {
            symbol: &table,
            pk: &pk,
            control,
            t_end: 0.1,
            diag_dt: 0.1,
            snapshot_dt: 0.1,
            energy_every: 1,
        };
        let res = run(rho0, u0, &setup).unwrap();
        assert!(res.termination.is_completed());
        finals.push(res.final_state.rho);
    }
    let err = |a: &Field, b: &Field| {
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max)
    };
    let e1 = err(&finals[0], &finals[1]);
    let e2 = err(&finals[1], &finals[2]);
    let ratio = e1 / e2;
    assert!(
        (12.8..=19.2).contains(&ratio),
        "Richardson ratio {ratio:.2} outside 16 +- 20% (e1 {e1:.3e}, e2 {e2:.3e})"
    );
    pass("08 integrator order", format!("dt-halving error ratio {ratio:.2}"));
}

#[test]
fn criterion_09_moc_suite() {
    // (a) The selection chain on the criterion 6 setup, re-verified
    // inequality by inequality.
    let (grid, _, pk, table) = power_setup(256, 1.2, 0.4, 1.0);
    let (rho0, u0) = build_initial(
        &grid,
        &InitPreset::RandomBandlimited {
            rho_bar: 1.0,
            amplitude: 0.6,
            u_amplitude: 0.2,
            modes: 6,
            seed: 11,
        },
    );
    let g0 = compute_g0(&rho0, &u0, &table).unwrap();
    let consts = TheoryConstants::compute(&pk, &rho0, &g0).unwrap();
    let (spec, ledger) = select_parameters(1.0, &consts).unwrap();
    assert!(spec.delta > 0.0 && spec.gamma > 0.0 && spec.ln_lambda().is_finite());
    assert!(!ledger.lambda_thresholds.is_empty());
    let checks = reverify_parameters(&spec, &consts, consts.lower_envelope(1.0));
    for (name, ok) in &checks {
        assert!(*ok, "selection condition {name} fails independent re-evaluation");
    }

    // (b) Hand-built data obeying a hand-tuned modulus; a 1000x inflated
    // scaling factor breaks obedience already at t = 0.
    let hand = MocSpec::new(0.2, 0.08, 0.0016, 1.2).unwrap();
    let rho_hand = Field::from_fn(&grid, |x| 1.0 + 0.3 * (2.0 * PI * x).cos());
    let rep = check_obeys(&rho_hand, &hand);
    assert!(rep.obeys, "hand-built data must obey (margin {})", rep.margin);
    let inflated = MocSpec::new(0.2, 0.08, 1.6, 1.2).unwrap();
    let rep_inflated = check_obeys(&rho_hand, &inflated);
    assert!(!rep_inflated.obeys, "inflated lambda must break obedience at t = 0");

    // (c) Preservation along a compliant run, with the Lipschitz corollary.
    let res = bounded_run(11, 1.0);
    assert!(res.termination.is_completed());
    let snaps: Vec<(f64, Field)> =
        res.snapshots.iter().map(|s| (s.t, s.rho.clone())).collect();
    let pres = verify_preservation(&snaps, &spec);
    assert!(pres.first_breakthrough.is_none(), "breakthrough at {:?}", pres.first_breakthrough);
    assert!(pres.lipschitz_ok, "sup |rho_x| = {} above delta/lambda = {}", pres.sup_dxrho, pres.lipschitz_bound);
    pass(
        "09 MOC suite",
        format!(
            "{} chain conditions re-verified; inflated-lambda margin {:.3e}; no breakthrough over {} snapshots",
            checks.len(),
            rep_inflated.margin,
            snaps.len()
        ),
    );
}

#[test]
fn criterion_10_d1_lower_bound() {
    let grid = Grid::new(2048).unwrap();
    let mut worst = f64::INFINITY;
    for alpha in [0.5f64, 1.0, 1.5] {
        let spec = MocSpec::new(0.2, 0.049, 0.02, alpha).unwrap();
        let kernel = GeneralKernel::new(alpha, 0.4, 1.0, 1e-12, move |x: f64| {
            let r = x.abs();
            if r <= 0.4 {
                r.powf(-1.0 - alpha)
            } else {
                0.0
            }
        })
        .unwrap();
        let mut rng = SplitMix64::new(1000 + alpha.to_bits() % 97);
        for cfg in 0..20 {
            let xi_nodes = 2 * (2 + (rng.next_f64() * 100.0) as usize);
            let center = (rng.next_f64() * grid.n() as f64) as usize % grid.n();
            let (rho, i, j) =
                breakthrough_profile(&grid, &spec, 2.0, center, xi_nodes).unwrap();
            let r = d1_dissipation(&rho, i, j, &kernel, &spec).unwrap();
            assert!(r.breakthrough, "alpha {alpha} config {cfg}: equality not detected");
            let bound = r.bound.expect("bound reported at breakthrough");
            let margin = r.value - (bound - 1e-4);
            worst = worst.min(margin);
            assert!(
                margin >= 0.0,
                "alpha {alpha} config {cfg} (xi {:.4}): D1 {:.6e} below bound {:.6e}",
                r.xi,
                r.value,
                bound
            );
        }
    }
    pass("10 D1 lower bound", format!("60 configurations, smallest margin {worst:.3e}"));
}

#[test]
fn criterion_11_velocity_moc() {
    let (grid, _, pk, table) = power_setup(256, 1.2, 0.4, 1.0);
    let _ = (&grid, &pk);
    let res = bounded_run(11, 1.0);
    let consts = &res.consts;
    let (spec, _) = select_parameters(1.0, consts).unwrap();
    let dx = 1.0 / 256.0;
    let m_max = ((0.25 * consts.r0) / dx).floor() as usize;
    assert!(m_max >= 2, "r0/4 must cover at least two lattice distances");
    let mut worst = f64::INFINITY;
    for snap in res.snapshots.iter().take(5) {
        let state = SimState { t: snap.t, rho: snap.rho.clone(), g: snap.g.clone() };
        let derived = reconstruct_velocity(&state, &table, res.p0).unwrap();
        let u = derived.u.values();
        for m in 1..=m_max {
            let omega_u = omega_velocity(&spec, consts, m as f64 * dx).unwrap();
            assert!(!omega_u.is_nan());
            for i in 0..u.len() {
                let j = (i + m) % u.len();
                worst = worst.min(omega_u + 1e-4 - (u[i] - u[j]).abs());
            }
        }
    }
    assert!(worst >= 0.0, "velocity modulus violated by {worst:.3e}");
    pass(
        "11 velocity MOC",
        format!("5 sampled times, distances up to {} nodes, smallest margin {worst:.3e}", m_max),
    );
}

#[test]
fn criterion_12_misalignment_phenomenon() {
    let mut mins = Vec::new();
    let mut final_series = Vec::new();
    for mu in [0.0, 1.0, 4.0] {
        let (grid, _, pk, table) = power_setup(256, 1.0, 0.5, mu);
        let (rho0, u0) = build_initial(
            &grid,
            &InitPreset::NearVacuum { rho_bar: 1.0, amplitude: 0.9, u_amplitude: 0.1 },
        );
        let control = StepControl { gradient_cap: 1e5, ..Default::default() };
        let setup = RunSetup {
            symbol: &table,
            pk: &pk,
            control,
            t_end: 5.0,
            diag_dt: 0.05,
            snapshot_dt: 1.0,
            energy_every: 100,
        };
        let res = run(rho0, u0, &setup).unwrap();
        // The density envelopes of criterion 6 must never be violated.
        assert!(
            !res.violations.iter().any(|v| matches!(
                v.name,
                "lower_bound" | "upper_bound_M1" | "uniform_floor"
            )),
            "mu {mu}: density bound violated: {:?}",
            res.violations
        );
        mins.push(res.min_rho_over_run);
        if mu == 4.0 {
            final_series = res
                .records
                .iter()
                .filter(|r| r.t >= 0.5 * res.final_state.t)
                .map(|r| (r.t, r.min_rho))
                .collect();
        }
    }
    assert!(
        mins[0] >= mins[1] - 1e-12 && mins[1] >= mins[2] - 1e-12,
        "running min rho not non-increasing in mu: {mins:?}"
    );
    assert!(
        mins[2] < 0.9 * mins[0],
        "strong misalignment must depress the density floor: {mins:?}"
    );
    assert!(final_series.len() >= 3, "need several samples over the final half");
    for w in final_series.windows(2) {
        assert!(
            w[1].1 <= w[0].1 + 1e-12,
            "min rho not monotone decreasing over the final half at t = {}",
            w[1].0
        );
    }
    pass(
        "12 misalignment phenomenon",
        format!("running minima {mins:?}, decreasing over {} tail samples", final_series.len()),
    );
}

#[test]
fn criterion_13_burgers_contrast() {
    use easim::burgers::burgers_run;
    // Subcritical alpha: bounded gradient to T = 5.
    let grid = Grid::new(256).unwrap();
    let table = SymbolTable::pure_power(&grid, 1.2);
    let u0 = Field::from_fn(&grid, |x| (2.0 * PI * x).sin());
    let grad0 = u0.derivative().linf();
    let control = StepControl { gradient_cap: 4.0 * grad0, ..Default::default() };
    let smooth = burgers_run(u0, &table, &control, 5.0, 0.05, 5.0);
    assert!(smooth.termination.is_completed(), "{:?}", smooth.termination);
    assert!(smooth.max_grad <= 4.0 * grad0);

    // Supercritical alpha: the blow-up signature fires before T = 5, at a
    // time consistent under grid doubling.
    let mut blowups = Vec::new();
    for n in [256usize, 512] {
        let grid = Grid::new(n).unwrap();
        let table = SymbolTable::pure_power(&grid, 0.6);
        let u0 = Field::from_fn(&grid, |x| (2.0 * PI * x).sin());
        let control = StepControl { gradient_cap: 4.0 * grad0, ..Default::default() };
        let res = burgers_run(u0, &table, &control, 5.0, 0.05, 5.0);
        let t_star = res.blowup_time.unwrap_or(f64::NAN);
        assert!(
            matches!(
                res.termination,
                Termination::GradientBlowup { .. } | Termination::DtCollapse { .. }
            ),
            "N = {n}: expected a blow-up signature, got {:?}",
            res.termination
        );
        assert!(t_star < 5.0);
        blowups.push(t_star);
    }
    let rel = (blowups[0] - blowups[1]).abs() / blowups[1];
    assert!(rel < 0.2, "blow-up times {blowups:?} differ by {rel:.2}");
    pass(
        "13 Burgers contrast",
        format!(
            "alpha 1.2 bounded (max grad {:.3}); alpha 0.6 signature at t = {:.4}/{:.4} (rel {:.3})",
            smooth.max_grad, blowups[0], blowups[1], rel
        ),
    );
}

#[test]
fn criterion_14_determinism() {
    use easim::config::RunConfig;
    use easim::driver::execute;
    use easim::sweep::sweep;
    let base_dir =
        std::env::temp_dir().join(format!("easim-accept14-{}", std::process::id()));
    std::fs::create_dir_all(&base_dir).unwrap();

    let mut cfg = RunConfig::parse(
        "kernel.type = power_pair\nkernel.alpha = 1.2\nkernel.beta = 0.4\nkernel.mu = 1.0\n\
         grid.N = 64\nrun.T = 0.1\ninit.preset = random_bandlimited\ninit.amplitude = 0.5\n\
         init.seed = 42\noutput.diag_dt = 0.02\noutput.snapshot_dt = 0.1\n",
    )
    .unwrap();

    // Identical config + seed: byte-identical diagnostics.
    cfg.output.dir = base_dir.join("a");
    execute(&cfg).unwrap();
    let bytes_a = std::fs::read(cfg.output.dir.join("diagnostics.csv")).unwrap();
    cfg.output.dir = base_dir.join("b");
    execute(&cfg).unwrap();
    let bytes_b = std::fs::read(cfg.output.dir.join("diagnostics.csv")).unwrap();
    assert_eq!(bytes_a, bytes_b, "diagnostics CSV differs between identical runs");

    // Sweep summaries independent of the worker count.
    let values = [0.0, 0.5, 1.0, 2.0];
    let s1 = sweep(&cfg, "kernel.mu", &values, 1, &base_dir.join("w1")).unwrap();
    let s4 = sweep(&cfg, "kernel.mu", &values, 4, &base_dir.join("w4")).unwrap();
    assert_eq!(s1.to_csv(), s4.to_csv(), "sweep summary depends on worker count");

    // The min-rho column is non-increasing in mu for this preset family.
    for w in s1.rows.windows(2) {
        assert!(w[1].min_rho <= w[0].min_rho + 1e-9);
    }
    std::fs::remove_dir_all(&base_dir).ok();
    pass("14 determinism", format!("CSV bytes identical; {} sweep rows reproducible", values.len()));
}

/// Companion check (diagnostics op contract): the energy fluctuation decays
/// for a nonnegative periodized kernel and its finite-difference rate
/// matches the dissipation integral under fine sampling.
#[test]
fn energy_fluctuation_rate_identity() {
    use easim::diagnostics::EnergyDiag;
    let (grid, _, pk, table) = power_setup(128, 1.2, 0.4, 0.0);
    assert!(pk.floor_phi_m().is_some(), "pure power periodization is positive");
    let (rho0, u0) = build_initial(
        &grid,
        &InitPreset::Cosine { rho_bar: 1.0, amplitude: 0.2, mode_m: 1, u_amplitude: 0.1, mode_n: 1 },
    );
    let g0 = compute_g0(&rho0, &u0, &table).unwrap();
    let p0 = rho0.zip(&u0, |r, u| r * u).unwrap().integral();
    let mut state = SimState::new(rho0, g0);
    let mut energy = EnergyDiag::new(&pk, grid.n());
    let control = StepControl { dt_max: 1e-3, ..Default::default() };
    let mut samples = Vec::new();
    for _ in 0..200 {
        let derived = reconstruct_velocity(&state, &table, p0).unwrap();
        samples.push(energy.measure(&state, &derived.u));
        let (next, _) = advance(&state, &control, &table, p0).unwrap();
        state = next;
    }
    let mut worst_res = 0.0f64;
    for (i, &(e, r, residual)) in samples.iter().enumerate() {
        if i > 0 {
            worst_res = worst_res.max(residual / r.abs().max(1.0));
            // Positive kernel floor: energy fluctuation non-increasing.
            assert!(e <= samples[i - 1].0 + 1e-12, "E rose at sample {i}");
        }
    }
    assert!(worst_res < 1e-3, "rate residual {worst_res:.3e} above 1e-3 of max(|R|, 1)");
    println!("energy rate identity: PASS (worst scaled residual {worst_res:.3e})");
}
