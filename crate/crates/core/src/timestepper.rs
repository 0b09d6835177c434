//! Method-of-lines integration of the nonlocal system with classical RK4 and
//! CFL-limited steps, trajectory recording, and transport of `ρ` along
//! characteristics.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    c1_tilde, c2_tilde, energy, rhs, sup_bound_check, ConservedInit, Params, State, Tendency,
};
use crate::error::{Error, Result};
use crate::grid::{Field, SpectralInterpolant};

fn default_cfl() -> f64 {
    0.3
}

fn default_record_every() -> usize {
    1
}

fn default_blowup() -> f64 {
    1e6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeStepConfig {
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl_number: f64,
    pub dt_max: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
    /// Times in `(0, t_end)` the integrator lands on exactly and records.
    #[serde(default)]
    pub stop_times: Vec<f64>,
}

impl TimeStepConfig {
    pub fn new(t_end: f64, dt_max: f64) -> Self {
        TimeStepConfig {
            t_end,
            cfl_number: default_cfl(),
            dt_max,
            record_every: default_record_every(),
            blowup_threshold: default_blowup(),
            stop_times: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTimeStep(m));
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!(
                "t_end must be finite and non-negative, got {}",
                self.t_end
            ));
        }
        if !(self.cfl_number > 0.0 && self.cfl_number <= 1.0) {
            return bad(format!(
                "cfl_number must lie in (0, 1], got {}",
                self.cfl_number
            ));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return bad(format!("dt_max must be positive, got {}", self.dt_max));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if !(self.blowup_threshold > 0.0) {
            return bad("blowup_threshold must be positive".into());
        }
        if let Some(t) = self
            .stop_times
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.t_end))
        {
            return bad(format!("stop time {t} outside [0, t_end]"));
        }
        Ok(())
    }

    fn targets(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self
            .stop_times
            .iter()
            .copied()
            .filter(|t| *t > 0.0)
            .collect();
        ts.push(self.t_end);
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts.retain(|t| *t > 0.0);
        ts
    }
}

/// Per-snapshot monitors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub mu0: f64,
    pub energy: f64,
    pub u_sup: f64,
    pub ux_sup: f64,
    pub rho_sup: f64,
    pub rho_min: f64,
    /// `|μ₀| + (√3/6)μ₁ − ‖u‖_∞`
    pub sup_margin: f64,
    /// `C̃₁(t) − ‖u_x‖_∞`, when `β > 0`.
    pub c1_margin: Option<f64>,
    /// `C̃₂(t) − ‖ρ‖_∞`, when `β > 0`.
    pub c2_margin: Option<f64>,
}

impl Diagnostics {
    pub fn measure(s: &State, bounds: &ConservedInit) -> Self {
        let ux_sup = s.u.deriv().sup_norm();
        let rho_sup = s.rho.sup_norm();
        Diagnostics {
            t: s.t,
            mu0: s.u.mean(),
            energy: energy(s),
            u_sup: s.u.sup_norm(),
            ux_sup,
            rho_sup,
            rho_min: s.rho.min(),
            sup_margin: sup_bound_check(s, bounds).margin,
            c1_margin: c1_tilde(s.t, bounds).ok().map(|c| c - ux_sup),
            c2_margin: c2_tilde(s.t, bounds).ok().map(|c| c - rho_sup),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub state: State,
    pub tendency: Tendency,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Termination {
    ReachedEnd,
    BlowupDetected { t: f64 },
}

/// Recorded run: snapshots in increasing time, and how it ended.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    /// Invariants used for the bound margins.
    pub bounds: ConservedInit,
    pub steps: usize,
}

impl TrajectoryRecord {
    pub fn blew_up(&self) -> bool {
        matches!(self.termination, Termination::BlowupDetected { .. })
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.state.t).collect()
    }

    /// Snapshot recorded at exactly `t` (up to `1e-12`).
    pub fn at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots
            .iter()
            .find(|s| (s.state.t - t).abs() <= 1e-12)
    }

    pub fn initial(&self) -> &Snapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots
            .last()
            .expect("trajectory has an initial snapshot")
    }
}

/// `min(dt_max, cfl·h / (‖u‖_∞ + |γ| + 1e−12))`; zero for a blown-up state.
pub fn cfl_dt(s: &State, p: &Params, cfg: &TimeStepConfig) -> f64 {
    if !s.is_finite() {
        return 0.0;
    }
    let speed = s.u.sup_norm() + p.gamma.abs() + 1e-12;
    cfg.dt_max.min(cfg.cfl_number * s.u.grid().h() / speed)
}

fn axpy(base: &State, dt: f64, k: &Tendency) -> State {
    State {
        u: base.u.zip_map(&k.du_dt, |a, b| a + dt * b),
        rho: base.rho.zip_map(&k.drho_dt, |a, b| a + dt * b),
        t: base.t + dt,
        blown_up: false,
    }
}

fn blown(mut s: State) -> State {
    s.blown_up = true;
    s
}

/// One classical Runge–Kutta step.
pub fn step_rk4(s: &State, p: &Params, dt: f64) -> State {
    let k1 = rhs(s, p);
    if !k1.is_finite() {
        return blown(s.clone());
    }
    let k2 = rhs(&axpy(s, 0.5 * dt, &k1), p);
    if !k2.is_finite() {
        return blown(s.clone());
    }
    let k3 = rhs(&axpy(s, 0.5 * dt, &k2), p);
    if !k3.is_finite() {
        return blown(s.clone());
    }
    let k4 = rhs(&axpy(s, dt, &k3), p);
    let combine = |y: &Field, a: &Field, b: &Field, c: &Field, d: &Field| {
        let vals = (0..y.len())
            .map(|j| {
                y.values()[j]
                    + dt / 6.0
                        * (a.values()[j]
                            + 2.0 * b.values()[j]
                            + 2.0 * c.values()[j]
                            + d.values()[j])
            })
            .collect();
        Field::new(y.grid(), vals).expect("grid-sized update")
    };
    let next = State {
        u: combine(&s.u, &k1.du_dt, &k2.du_dt, &k3.du_dt, &k4.du_dt),
        rho: combine(&s.rho, &k1.drho_dt, &k2.drho_dt, &k3.drho_dt, &k4.drho_dt),
        t: s.t + dt,
        blown_up: false,
    };
    if next.u.is_finite() && next.rho.is_finite() {
        next
    } else {
        blown(next)
    }
}

fn snapshot(s: State, p: &Params, bounds: &ConservedInit) -> Snapshot {
    let tendency = rhs(&s, p);
    let diagnostics = Diagnostics::measure(&s, bounds);
    Snapshot {
        state: s,
        tendency,
        diagnostics,
    }
}

/// Integrates from `s0` with bound margins measured against the invariants
/// of `s0` itself.
pub fn run(s0: &State, p: &Params, cfg: &TimeStepConfig) -> Result<TrajectoryRecord> {
    run_with_bounds(s0, p, cfg, &ConservedInit::from_state(s0))
}

/// Integrates until `t_end` or blow-up. Steps are shortened to land exactly
/// on every stop time and on `t_end`; those instants are always recorded,
/// in addition to every `record_every`-th step.
pub fn run_with_bounds(
    s0: &State,
    p: &Params,
    cfg: &TimeStepConfig,
    bounds: &ConservedInit,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let mut s = s0.clone();
    let mut snapshots = vec![snapshot(s.clone(), p, bounds)];
    let mut steps = 0usize;
    let mut termination = Termination::ReachedEnd;

    'targets: for target in cfg.targets() {
        while s.t < target {
            let mut dt = cfl_dt(&s, p, cfg);
            if !(dt > 0.0) {
                termination = Termination::BlowupDetected { t: s.t };
                break 'targets;
            }
            let remaining = target - s.t;
            let landing = dt >= remaining * (1.0 - 1e-9);
            if landing {
                dt = remaining;
            }
            let mut next = step_rk4(&s, p, dt);
            steps += 1;
            if landing {
                next.t = target;
            }
            if !next.is_finite() || next.u.deriv().sup_norm() > cfg.blowup_threshold {
                termination = Termination::BlowupDetected { t: next.t };
                break 'targets;
            }
            s = next;
            if landing || steps.is_multiple_of(cfg.record_every) {
                snapshots.push(snapshot(s.clone(), p, bounds));
            }
        }
    }

    Ok(TrajectoryRecord {
        snapshots,
        termination,
        bounds: *bounds,
        steps,
    })
}

/// One point of a characteristic path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathPoint {
    pub t: f64,
    pub x: f64,
    /// `ρ` carried along the path.
    pub r: f64,
    /// `ρ(t, X(t))` from the recorded snapshot.
    pub rho: f64,
}

#[derive(Clone, Debug)]
pub struct Characteristic {
    pub x0: f64,
    pub path: Vec<PathPoint>,
}

impl Characteristic {
    /// `max |R − ρ(t,X)| / |ρ(t,X)|` over the recorded snapshots.
    pub fn max_mismatch(&self) -> f64 {
        self.path
            .iter()
            .map(|p| (p.r - p.rho).abs() / p.rho.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    pub fn sign_preserved(&self) -> bool {
        let s0 = self.path[0].r.signum();
        self.path.iter().all(|p| p.r.signum() == s0 && p.r != 0.0)
    }
}

struct SnapshotInterp {
    t: f64,
    u: SpectralInterpolant,
    ut: SpectralInterpolant,
    rho: SpectralInterpolant,
}

impl SnapshotInterp {
    /// `(u, u_x, u_t, u_xt)` at `x`.
    fn eval(&self, x: f64) -> [f64; 4] {
        let (u, ux) = self.u.eval_with_deriv(x);
        let (ut, uxt) = self.ut.eval_with_deriv(x);
        [u, ux, ut, uxt]
    }
}

/// Cubic Hermite interpolation of `(u, u_x)` in time between two snapshots.
fn hermite(a: &SnapshotInterp, b: &SnapshotInterp, t: f64, x: f64) -> (f64, f64) {
    let dt = b.t - a.t;
    let s = (t - a.t) / dt;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let fa = a.eval(x);
    let fb = b.eval(x);
    let u = h00 * fa[0] + h10 * dt * fa[2] + h01 * fb[0] + h11 * dt * fb[2];
    let ux = h00 * fa[1] + h10 * dt * fa[3] + h01 * fb[1] + h11 * dt * fb[3];
    (u, ux)
}

/// Follows `dX/dt = −(u(t,X) + γ)`, `dR/dt = u_x(t,X)·R` from each seed with
/// RK4 (`substeps` per snapshot interval), reconstructing `u` between
/// snapshots by spectral interpolation in `x` and cubic Hermite
/// interpolation in `t`.
pub fn evolve_characteristics_with(
    traj: &TrajectoryRecord,
    p: &Params,
    seeds: &[f64],
    substeps: usize,
) -> Result<Vec<Characteristic>> {
    if let Termination::BlowupDetected { t } = traj.termination {
        return Err(Error::BlowUp(t));
    }
    let substeps = substeps.max(1);
    let interps: Vec<SnapshotInterp> = traj
        .snapshots
        .iter()
        .map(|s| SnapshotInterp {
            t: s.state.t,
            u: s.state.u.interpolant(),
            ut: s.tendency.du_dt.interpolant(),
            rho: s.state.rho.interpolant(),
        })
        .collect();

    let mut out = Vec::with_capacity(seeds.len());
    for &x0 in seeds {
        let mut x = x0.rem_euclid(1.0);
        let mut r = interps[0].rho.eval(x);
        let mut path = vec![PathPoint {
            t: interps[0].t,
            x,
            r,
            rho: r,
        }];
        for pair in interps.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let h = (b.t - a.t) / substeps as f64;
            let field = |t: f64, x: f64, r: f64| {
                let (u, ux) = hermite(a, b, t, x);
                (-(u + p.gamma), ux * r)
            };
            for i in 0..substeps {
                let t = a.t + i as f64 * h;
                let (k1x, k1r) = field(t, x, r);
                let (k2x, k2r) = field(t + 0.5 * h, x + 0.5 * h * k1x, r + 0.5 * h * k1r);
                let (k3x, k3r) = field(t + 0.5 * h, x + 0.5 * h * k2x, r + 0.5 * h * k2r);
                let (k4x, k4r) = field(t + h, x + h * k3x, r + h * k3r);
                x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
                r += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
                x = x.rem_euclid(1.0);
            }
            path.push(PathPoint {
                t: b.t,
                x,
                r,
                rho: b.rho.eval(x),
            });
        }
        out.push(Characteristic { x0, path });
    }
    Ok(out)
}

/// [`evolve_characteristics_with`] with two substeps per snapshot interval.
pub fn evolve_characteristics(
    traj: &TrajectoryRecord,
    p: &Params,
    seeds: &[f64],
) -> Result<Vec<Characteristic>> {
    evolve_characteristics_with(traj, p, seeds, 2)
}
