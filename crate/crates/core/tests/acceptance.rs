//! Acceptance suite: one check per criterion, each printing a single
//! `criterion N: PASS|FAIL ...` line. Runs without the libtest harness so
//! the lines are never captured; exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::panic::catch_unwind;
use std::process::ExitCode;
use std::time::Instant;

use muhs::dynamics::sup_bound_check;
use muhs::grid::{Field, PeriodicGrid};
use muhs::mollify::{make_initial, MollifierSpec, Profile, RoughInitialData};
use muhs::operator::{ainv_dxx, ainv_formula, ainv_spectral, conv_green, green_kernel};
use muhs::timestepper::{evolve_characteristics, run, run_with_bounds, TimeStepConfig};
use muhs::verification::{
    convergence_study, weak_residual_rho, weak_residual_u, Mode, TestFunction,
};
use muhs::{Params, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, pass: bool, detail: String) {
    println!(
        "criterion {n}: {} {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn grid(n: usize) -> PeriodicGrid {
    PeriodicGrid::new(n).unwrap()
}

fn random_band_limited(g: &PeriodicGrid, rng: &mut ChaCha8Rng, kmax: usize) -> Field {
    let mean: f64 = rng.gen_range(-1.0..1.0);
    let coeffs: Vec<(f64, f64)> = (1..=kmax)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    Field::from_fn(g, |x| {
        mean + coeffs
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let w = 2.0 * PI * (i + 1) as f64 * x;
                a * w.cos() + b * w.sin()
            })
            .sum::<f64>()
    })
}

fn global_run_state(g: &PeriodicGrid) -> State {
    State::new(
        Field::from_fn(g, |x| 0.1 * (2.0 * PI * x).sin()),
        Field::constant(g, 1.0),
        0.0,
    )
    .unwrap()
}

fn global_run_config() -> TimeStepConfig {
    TimeStepConfig {
        cfl_number: 0.3,
        ..TimeStepConfig::new(2.0, 1.0)
    }
}

fn rough_data() -> RoughInitialData {
    RoughInitialData {
        u: Profile::Hat { slope: 1.0 },
        rho: Profile::Step {
            low: 1.0,
            high: 2.0,
            start: 0.0,
            end: 0.5,
        },
        alpha: 1.0,
    }
}

const INDICES: [usize; 4] = [4, 8, 16, 32];
const PROBES: [f64; 4] = [0.025, 0.05, 0.1, 0.5];
const GAMMA: f64 = 0.3;

fn study_config(dt: f64) -> TimeStepConfig {
    TimeStepConfig {
        cfl_number: 0.3,
        record_every: 10,
        ..TimeStepConfig::new(0.5, dt)
    }
}

fn criterion_1_operator_identities() -> bool {
    let start = Instant::now();
    let g = grid(256);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_route = 0.0_f64;
    let mut worst_defect = 0.0_f64;
    for _ in 0..50 {
        let kmax = rng.gen_range(1..=8);
        let w = random_band_limited(&g, &mut rng, kmax);
        let spectral = ainv_spectral(&w);
        worst_route = worst_route
            .max((&ainv_formula(&w) - &spectral).sup_norm())
            .max((&conv_green(&w) - &spectral).sup_norm());
        let mu = w.mean();
        let defect = ainv_dxx(&w).zip_map(&w, |a, v| a - (mu - v));
        worst_defect = worst_defect.max(defect.sup_norm());
    }
    let mean_err = (green_kernel(&g).mean() - 1.0).abs();
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_route <= 1e-9 && worst_defect == 0.0 && mean_err <= 1e-12 && secs < 5.0;
    report(
        1,
        pass,
        format!(
            "route gap {worst_route:.3e}, dxx defect {worst_defect:e}, |mean g - 1| {mean_err:.3e}, {secs:.2}s"
        ),
    );
    pass
}

fn criterion_2_conservation() -> bool {
    let start = Instant::now();
    let g = grid(256);
    let traj = run(
        &global_run_state(&g),
        &Params::new(GAMMA),
        &global_run_config(),
    )
    .unwrap();
    let secs = start.elapsed().as_secs_f64();
    let d0 = traj.initial().diagnostics;
    let energy_drift = traj
        .snapshots
        .iter()
        .map(|s| ((s.diagnostics.energy - d0.energy) / d0.energy).abs())
        .fold(0.0, f64::max);
    let mean_drift = traj
        .snapshots
        .iter()
        .map(|s| (s.diagnostics.mu0 - d0.mu0).abs())
        .fold(0.0, f64::max);
    let pass = !traj.blew_up()
        && (traj.last().state.t - 2.0).abs() < 1e-12
        && energy_drift <= 1e-7
        && mean_drift <= 1e-10
        && secs < 30.0;
    report(
        2,
        pass,
        format!(
            "energy drift {energy_drift:.3e}, mean drift {mean_drift:.3e}, {} steps, {secs:.2}s",
            traj.steps
        ),
    );
    pass
}

fn criterion_3_sup_and_a_priori_bounds() -> bool {
    let g = grid(256);
    let traj = run(
        &global_run_state(&g),
        &Params::new(GAMMA),
        &global_run_config(),
    )
    .unwrap();
    let mut sup_margin = f64::INFINITY;
    let mut c1_margin = f64::INFINITY;
    let mut c2_margin = f64::INFINITY;
    for s in &traj.snapshots {
        sup_margin = sup_margin.min(sup_bound_check(&s.state, &traj.bounds).margin);
        c1_margin = c1_margin.min(s.diagnostics.c1_margin.unwrap_or(f64::NEG_INFINITY));
        c2_margin = c2_margin.min(s.diagnostics.c2_margin.unwrap_or(f64::NEG_INFINITY));
    }
    let pass = !traj.blew_up() && sup_margin >= 0.0 && c1_margin >= 0.0 && c2_margin >= 0.0;
    report(
        3,
        pass,
        format!(
            "min margins over {} snapshots: sup {sup_margin:.3e}, C1 {c1_margin:.3e}, C2 {c2_margin:.3e}",
            traj.snapshots.len()
        ),
    );
    pass
}

fn criterion_4_sign_preservation() -> bool {
    let g = grid(256);
    let p = Params::new(GAMMA);
    let s = State::new(
        Field::from_fn(&g, |x| 0.1 * (2.0 * PI * x).sin()),
        Field::from_fn(&g, |x| 1.5 + 0.5 * (2.0 * PI * x).cos()),
        0.0,
    )
    .unwrap();
    let alpha = s.rho.min();
    let traj = run(&s, &p, &global_run_config()).unwrap();
    let rho_min = traj
        .snapshots
        .iter()
        .map(|s| s.diagnostics.rho_min)
        .fold(f64::INFINITY, f64::min);
    let seeds: Vec<f64> = (0..16).map(|j| j as f64 / 16.0 + 0.01).collect();
    let chars = evolve_characteristics(&traj, &p, &seeds).unwrap();
    let mismatch = chars.iter().map(|c| c.max_mismatch()).fold(0.0, f64::max);
    let signs = chars.iter().all(|c| c.sign_preserved());
    let pass =
        alpha >= 1.0 - 1e-12 && !traj.blew_up() && rho_min > 0.0 && signs && mismatch <= 1e-4;
    report(
        4,
        pass,
        format!(
            "alpha {alpha:.6}, min rho {rho_min:.6}, characteristic mismatch {mismatch:.3e} over {} snapshots",
            traj.snapshots.len()
        ),
    );
    pass
}

fn criterion_5_mollification() -> bool {
    let g = grid(256);
    let data = rough_data();
    let mut contracts = true;
    let mut min_rho = f64::INFINITY;
    let mut h1 = Vec::new();
    for n in INDICES {
        let init = make_initial(&data, &g, &MollifierSpec::new(n).unwrap()).unwrap();
        contracts &= init.norms.contracts(1e-12);
        min_rho = min_rho.min(init.norms.rho_min);
        h1.push(init.norms.u_h1_distance);
    }
    let decreasing = h1.windows(2).all(|w| w[1] < w[0]);
    let pass = contracts && min_rho >= data.alpha - 1e-12 && decreasing;
    report(
        5,
        pass,
        format!(
            "contraction {contracts}, min rho0^n {min_rho:.15}, H1 distances {}",
            sci(&h1)
        ),
    );
    pass
}

fn criterion_6_convergence_study() -> bool {
    let start = Instant::now();
    let rep = convergence_study(
        &rough_data(),
        &INDICES,
        &grid(256),
        &Params::new(GAMMA),
        &study_config(1e-3),
        &PROBES,
    )
    .unwrap();
    let secs = start.elapsed().as_secs_f64();
    let at = |t: f64| -> Vec<[f64; 3]> {
        rep.distances
            .iter()
            .filter(|d| d.t == t)
            .map(|d| [d.u.l2, d.ux.l2, d.rho.l2])
            .collect()
    };
    let pass = rep.all_finite()
        && rep.u_decreasing()
        && rep.ux_decreasing()
        && rep.rho_decreasing()
        && secs < 180.0;
    report(
        6,
        pass,
        format!(
            "L2 distances (u, u_x, rho) at t=0.5: {}, {secs:.1}s",
            at(0.5).iter().map(|d| sci(d)).collect::<Vec<_>>().join(" ")
        ),
    );
    pass
}

fn weak_residuals(n_grid: usize, dt: f64) -> (f64, f64) {
    let g = grid(n_grid);
    let p = Params::new(GAMMA);
    let init = make_initial(&rough_data(), &g, &MollifierSpec::new(32).unwrap()).unwrap();
    let traj = run_with_bounds(&init.state, &p, &study_config(dt), &init.conserved).unwrap();
    let phi = TestFunction::new(
        0.05,
        0.45,
        0.0,
        vec![
            Mode {
                k: 1,
                cos: 1.0,
                sin: 0.0,
            },
            Mode {
                k: 2,
                cos: 0.0,
                sin: 0.5,
            },
        ],
    )
    .unwrap();
    (
        weak_residual_u(&traj, &p, &phi).unwrap(),
        weak_residual_rho(&traj, &p, &phi).unwrap(),
    )
}

fn criterion_7_admissibility() -> bool {
    let rep = convergence_study(
        &rough_data(),
        &INDICES,
        &grid(256),
        &Params::new(GAMMA),
        &study_config(1e-3),
        &PROBES,
    )
    .unwrap();
    // same record_every with half the step on the doubled grid doubles the
    // snapshot density
    let (cu, crho) = weak_residuals(128, 2e-3);
    let (fu, frho) = weak_residuals(256, 1e-3);
    let pass = rep.admissible() && rep.energy_dominated() && cu >= 4.0 * fu && crho >= 4.0 * frho;
    report(
        7,
        pass,
        format!(
            "admissibility margin {:.3e}, residual u {cu:.3e} -> {fu:.3e}, rho {crho:.3e} -> {frho:.3e}",
            rep.admissibility_margin
        ),
    );
    pass
}

fn criterion_8_initial_energy_limits() -> bool {
    let rep = convergence_study(
        &rough_data(),
        &INDICES,
        &grid(256),
        &Params::new(GAMMA),
        &study_config(1e-3),
        &PROBES,
    )
    .unwrap();
    let entries: Vec<_> = rep
        .initial_limit
        .entries
        .iter()
        .filter(|e| e.t <= 0.1)
        .copied()
        .collect();
    let limit = muhs::verification::InitialLimitReport { entries };
    let pass = limit.entries.len() == 3 && limit.monotone(1e-13);
    let rows: Vec<String> = limit
        .entries
        .iter()
        .map(|e| {
            format!(
                "t={} ux {:.3e} rho {:.3e}",
                e.t, e.ux_sq_diff, e.rho_sq_diff
            )
        })
        .collect();
    report(8, pass, rows.join("; "));
    pass
}

fn criterion_9_temporal_order() -> bool {
    let g = grid(64);
    let p = Params::new(GAMMA);
    let s = State::new(
        Field::from_fn(&g, |x| 0.05 * (2.0 * PI * x).sin()),
        Field::from_fn(&g, |x| 1.0 + 0.05 * (2.0 * PI * x).cos()),
        0.0,
    )
    .unwrap();
    let at_end = |dt: f64| {
        let cfg = TimeStepConfig {
            cfl_number: 1.0,
            record_every: usize::MAX,
            ..TimeStepConfig::new(1.0, dt)
        };
        run(&s, &p, &cfg).unwrap().last().state.clone()
    };
    let dt = 0.01;
    let reference = at_end(dt / 8.0);
    let err = |st: &State| (&st.u - &reference.u).l2_norm() + (&st.rho - &reference.rho).l2_norm();
    let e_coarse = err(&at_end(2.0 * dt));
    let e_fine = err(&at_end(dt));
    let ratio = e_coarse / e_fine;
    let pass = (12.0..=20.0).contains(&ratio);
    report(
        9,
        pass,
        format!(
            "errors {e_coarse:.3e} (dt={}), {e_fine:.3e} (dt={dt}), ratio {ratio:.2}",
            2.0 * dt
        ),
    );
    pass
}

fn main() -> ExitCode {
    let checks: [(u32, fn() -> bool); 9] = [
        (1, criterion_1_operator_identities),
        (2, criterion_2_conservation),
        (3, criterion_3_sup_and_a_priori_bounds),
        (4, criterion_4_sign_preservation),
        (5, criterion_5_mollification),
        (6, criterion_6_convergence_study),
        (7, criterion_7_admissibility),
        (8, criterion_8_initial_energy_limits),
        (9, criterion_9_temporal_order),
    ];
    // sequential, so the runtime limits measure one criterion at a time
    let failed: Vec<u32> = checks
        .into_iter()
        .filter(|(_, f)| !catch_unwind(f).unwrap_or(false))
        .map(|(n, _)| n)
        .collect();
    if failed.is_empty() {
        println!("acceptance: 9/9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
