//! Command-line driver.
//!
//! Exit codes: 0 success, 1 property violation, 2 usage or config error,
//! 3 blow-up in a declared global regime.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use muhs::io::{
    bound_rows, conv_tolerance, convergence_summary, first_decay_violation, num, operator_suite,
    write_bounds_csv, write_convergence_csv, write_diagnostics_csv, write_manifest,
    write_mollifier_csv, write_norm_table, write_trajectory_csv, ExperimentConfig, BOUND_COLUMNS,
    DIAGNOSTIC_COLUMNS, DISTANCE_COLUMNS, ENERGY_COLUMNS, NORM_COLUMNS, TRAJECTORY_COLUMNS,
};
use muhs::mollify::{make_initial, MollifierSpec};
use muhs::timestepper::{run_with_bounds, Termination};
use muhs::verification::convergence_study;
use muhs::{Error, PeriodicGrid};

const BOUND_TOL: f64 = 1e-8;
const CONTRACTION_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(
    name = "muhs",
    version,
    about = "Periodic two-component μ-Hunter-Saxton solver"
)]
struct Cli {
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid size (overrides `grid`).
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and archive the trajectory.
    Simulate(ConfigArgs),
    /// Check the identities of A⁻¹ on random band-limited inputs.
    VerifyOperator {
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mollified-sequence convergence study over `mollifiers`.
    Converge(ConfigArgs),
    /// Observed sup norms against the a-priori bounds.
    Bounds(ConfigArgs),
    /// Mollifier samples and the norm-contraction table.
    MollifyInspect(ConfigArgs),
}

enum Outcome {
    Ok,
    Violation(String),
    RegimeViolation(String),
}

struct Ctx {
    quiet: bool,
}

impl Ctx {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx { quiet: cli.quiet };
    let result = match cli.command {
        Command::Simulate(a) => simulate(&ctx, &a),
        Command::VerifyOperator {
            grid,
            trials,
            seed,
            out,
        } => verify_operator(&ctx, grid, trials, seed, out.as_deref()),
        Command::Converge(a) => converge(&ctx, &a),
        Command::Bounds(a) => bounds(&ctx, &a),
        Command::MollifyInspect(a) => mollify_inspect(&ctx, &a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation(m)) => {
            eprintln!("violation: {m}");
            ExitCode::from(1)
        }
        Ok(Outcome::RegimeViolation(m)) => {
            eprintln!("regime violation: {m}");
            ExitCode::from(3)
        }
        Err(Error::BlowUp(t)) => {
            eprintln!("error: blow-up detected at t = {t}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(a: &ConfigArgs) -> muhs::Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(n) = a.grid {
        cfg.grid = n;
    }
    cfg.validate()?;
    let out = a.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    fs::create_dir_all(&out)?;
    Ok((cfg, out))
}

fn simulate(ctx: &Ctx, a: &ConfigArgs) -> muhs::Result<Outcome> {
    let (cfg, out) = load(a)?;
    let init = cfg.initial_data()?;
    let traj = run_with_bounds(
        &init.state,
        &cfg.params(),
        &cfg.time_config(),
        &init.conserved,
    )?;
    write_trajectory_csv(&out.join("trajectory.csv"), &traj)?;
    write_diagnostics_csv(&out.join("diagnostics.csv"), &traj)?;
    let termination = match traj.termination {
        Termination::ReachedEnd => "reached_end".to_string(),
        Termination::BlowupDetected { t } => format!("blowup_detected at t = {}", num(t)),
    };
    write_manifest(
        &out,
        "simulate",
        Some(&cfg),
        &[
            ("trajectory.csv", &TRAJECTORY_COLUMNS),
            ("diagnostics.csv", &DIAGNOSTIC_COLUMNS),
        ],
        &[
            ("termination".into(), termination.clone()),
            ("steps".into(), traj.steps.to_string()),
            ("snapshots".into(), traj.snapshots.len().to_string()),
        ],
    )?;
    let last = traj.last().diagnostics;
    ctx.say(format!(
        "simulate: {termination}, {} steps, t = {}, energy {} -> {}",
        traj.steps,
        last.t,
        traj.initial().diagnostics.energy,
        last.energy
    ));
    match traj.termination {
        Termination::BlowupDetected { t } if cfg.declare_global => Ok(Outcome::RegimeViolation(
            format!("blow-up at t = {t} in a run declared global"),
        )),
        _ => Ok(Outcome::Ok),
    }
}

fn verify_operator(
    ctx: &Ctx,
    n: usize,
    trials: usize,
    seed: u64,
    out: Option<&Path>,
) -> muhs::Result<Outcome> {
    let grid = PeriodicGrid::new(n)?;
    let checks = operator_suite(&grid, trials.max(1), seed);
    let mut text = String::new();
    for c in &checks {
        text.push_str(&format!(
            "{:<24} error {:.3e}  tolerance {:.1e}  {}\n",
            c.name,
            c.error,
            c.tolerance,
            if c.passed() { "PASS" } else { "FAIL" }
        ));
    }
    ctx.say(format!(
        "verify-operator: n = {n}, {trials} trials, convolution tolerance {:.0e}",
        conv_tolerance(n)
    ));
    ctx.say(text.trim_end());
    if let Some(out) = out {
        fs::create_dir_all(out)?;
        fs::write(out.join("operator_report.txt"), &text)?;
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.name)
        .collect();
    if failed.is_empty() {
        Ok(Outcome::Ok)
    } else {
        Ok(Outcome::Violation(format!(
            "identities failed: {}",
            failed.join(", ")
        )))
    }
}

fn converge(ctx: &Ctx, a: &ConfigArgs) -> muhs::Result<Outcome> {
    let (cfg, out) = load(a)?;
    let grid = cfg.make_grid()?;
    let rep = convergence_study(
        &cfg.initial,
        &cfg.mollifiers,
        &grid,
        &cfg.params(),
        &cfg.time,
        &cfg.probe_times,
    )?;
    write_convergence_csv(&out, &rep)?;
    let summary = convergence_summary(&rep);
    fs::write(out.join("summary.txt"), &summary)?;
    write_manifest(
        &out,
        "converge",
        Some(&cfg),
        &[
            ("distances.csv", &DISTANCE_COLUMNS),
            ("energies.csv", &ENERGY_COLUMNS),
            ("summary.txt", &["key = value"]),
        ],
        &[],
    )?;
    ctx.say(summary.trim_end());
    match first_decay_violation(&rep) {
        None => Ok(Outcome::Ok),
        Some((field, t, n0, n1)) => Ok(Outcome::Violation(format!(
            "{field} distance did not decrease at t = {t} for pair ({n0}, {n1})"
        ))),
    }
}

fn bounds(ctx: &Ctx, a: &ConfigArgs) -> muhs::Result<Outcome> {
    let (cfg, out) = load(a)?;
    let init = cfg.initial_data()?;
    if init.conserved.beta.is_nan() || init.conserved.beta <= 0.0 {
        return Err(Error::NonPositiveBeta(init.conserved.beta));
    }
    let traj = run_with_bounds(
        &init.state,
        &cfg.params(),
        &cfg.time_config(),
        &init.conserved,
    )?;
    if let Termination::BlowupDetected { t } = traj.termination {
        return Ok(Outcome::RegimeViolation(format!(
            "blow-up at t = {t} with β > 0"
        )));
    }
    let rows = bound_rows(&traj)?;
    write_bounds_csv(&out.join("bounds.csv"), &rows)?;
    write_manifest(
        &out,
        "bounds",
        Some(&cfg),
        &[("bounds.csv", &BOUND_COLUMNS)],
        &[("tolerance".into(), num(BOUND_TOL))],
    )?;
    let last = rows.last().expect("initial row");
    ctx.say(format!(
        "bounds: {} rows, at t = {}: sup|u_x| {:.4e} <= {:.4e}, sup|rho| {:.4e} <= {:.4e}",
        rows.len(),
        last.t,
        last.ux_sup,
        last.c1_tilde,
        last.rho_sup,
        last.c2_tilde
    ));
    match rows.iter().find(|r| !r.holds(BOUND_TOL)) {
        None => Ok(Outcome::Ok),
        Some(r) => Ok(Outcome::Violation(format!(
            "bound margin negative at t = {}",
            r.t
        ))),
    }
}

fn mollify_inspect(ctx: &Ctx, a: &ConfigArgs) -> muhs::Result<Outcome> {
    let (cfg, out) = load(a)?;
    let grid = cfg.make_grid()?;
    let mut indices = cfg.mollifiers.clone();
    indices.extend(cfg.mollifier);
    if indices.is_empty() {
        return Err(Error::Config(
            "mollify-inspect needs `mollifier` or `mollifiers`".into(),
        ));
    }
    write_mollifier_csv(&out.join("mollifiers.csv"), &grid, &indices)?;
    let rows = indices
        .iter()
        .map(|&n| {
            Ok((
                n,
                make_initial(&cfg.initial, &grid, &MollifierSpec::new(n)?)?,
            ))
        })
        .collect::<muhs::Result<Vec<_>>>()?;
    write_norm_table(&out.join("norms.csv"), &rows, CONTRACTION_TOL)?;
    write_manifest(
        &out,
        "mollify-inspect",
        Some(&cfg),
        &[
            ("mollifiers.csv", &["x", "phi_<n>..."]),
            ("norms.csv", &NORM_COLUMNS),
        ],
        &[("tolerance".into(), num(CONTRACTION_TOL))],
    )?;
    for (n, d) in &rows {
        ctx.say(format!(
            "n = {n}: contracts {}, H1 distance {:.4e}, min rho {:.6}",
            d.norms.contracts(CONTRACTION_TOL),
            d.norms.u_h1_distance,
            d.norms.rho_min
        ));
    }
    match rows
        .iter()
        .find(|(_, d)| !d.norms.contracts(CONTRACTION_TOL))
    {
        None => Ok(Outcome::Ok),
        Some((n, _)) => Ok(Outcome::Violation(format!(
            "norm contraction fails for n = {n}"
        ))),
    }
}
