//! Weak-form residuals, the mollified-sequence convergence study, and the
//! early-time energy limits.

use std::f64::consts::PI;

use serde::Serialize;

use crate::dynamics::{Params, State};
use crate::error::{Error, Result};
use crate::grid::{Field, PeriodicGrid};
use crate::mollify::{bump, bump_deriv, make_initial, MollifierSpec, RoughInitialData};
use crate::timestepper::{run_with_bounds, Termination, TimeStepConfig, TrajectoryRecord};

/// `a·cos(2πkx) + b·sin(2πkx)`
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mode {
    pub k: u32,
    pub cos: f64,
    pub sin: f64,
}

/// One separable piece `θ(t)·S(x)`, with `θ` the standard bump rescaled to
/// `(t0, t1)` and `S` a trigonometric polynomial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestTerm {
    pub t0: f64,
    pub t1: f64,
    pub constant: f64,
    pub modes: Vec<Mode>,
}

impl TestTerm {
    fn theta(&self, t: f64) -> (f64, f64) {
        let w = self.t1 - self.t0;
        let s = 2.0 * (t - self.t0) / w - 1.0;
        (bump(s), bump_deriv(s) * 2.0 / w)
    }

    /// `(S, S_x)` sampled on the grid.
    fn spatial(&self, grid: &PeriodicGrid) -> (Field, Field) {
        let s = Field::from_fn(grid, |x| {
            self.constant
                + self
                    .modes
                    .iter()
                    .map(|m| {
                        let a = 2.0 * PI * m.k as f64 * x;
                        m.cos * a.cos() + m.sin * a.sin()
                    })
                    .sum::<f64>()
        });
        let sx = Field::from_fn(grid, |x| {
            self.modes
                .iter()
                .map(|m| {
                    let w = 2.0 * PI * m.k as f64;
                    w * (m.sin * (w * x).cos() - m.cos * (w * x).sin())
                })
                .sum()
        });
        (s, sx)
    }
}

/// Finite sum of separable test terms. Smooth, periodic in `x`, compactly
/// supported in time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestFunction {
    pub terms: Vec<TestTerm>,
}

impl TestFunction {
    pub fn new(t0: f64, t1: f64, constant: f64, modes: Vec<Mode>) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(Error::Config(format!("test window ({t0}, {t1}) is empty")));
        }
        Ok(TestFunction {
            terms: vec![TestTerm {
                t0,
                t1,
                constant,
                modes,
            }],
        })
    }

    /// `θ(t)·cos(2πkx)` when `cosine`, else `θ(t)·sin(2πkx)`.
    pub fn single_mode(t0: f64, t1: f64, k: u32, cosine: bool) -> Result<Self> {
        let (c, s) = if cosine { (1.0, 0.0) } else { (0.0, 1.0) };
        Self::new(t0, t1, 0.0, vec![Mode { k, cos: c, sin: s }])
    }

    pub fn zero() -> Self {
        TestFunction { terms: Vec::new() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| TestTerm {
                constant: c * t.constant,
                modes: t
                    .modes
                    .iter()
                    .map(|m| Mode {
                        k: m.k,
                        cos: c * m.cos,
                        sin: c * m.sin,
                    })
                    .collect(),
                ..t.clone()
            })
            .collect();
        TestFunction { terms }
    }

    pub fn sum(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        TestFunction { terms }
    }
}

fn check_trajectory(traj: &TrajectoryRecord) -> Result<()> {
    match traj.termination {
        Termination::BlowupDetected { t } => Err(Error::BlowUp(t)),
        Termination::ReachedEnd => Ok(()),
    }
}

/// Trapezoid rule over the (possibly nonuniform) snapshot times of
/// `Σ_terms ∫ f(snapshot, θ, θ') dx`.
fn weak_integral(
    traj: &TrajectoryRecord,
    phi: &TestFunction,
    f: impl Fn(&crate::timestepper::Snapshot, &Field, &Field, f64, f64) -> f64,
) -> f64 {
    let grid = traj.initial().state.u.grid();
    let mut total = 0.0;
    for term in &phi.terms {
        let (s, sx) = term.spatial(grid);
        let vals: Vec<(f64, f64)> = traj
            .snapshots
            .iter()
            .map(|snap| {
                let t = snap.state.t;
                let (th, dth) = term.theta(t);
                (t, f(snap, &s, &sx, th, dth))
            })
            .collect();
        total += vals
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum::<f64>();
    }
    total
}

fn inner(a: &Field, b: &Field) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x * y)
        .sum::<f64>()
        / a.len() as f64
}

/// `|∬ u·φ_t + [(u+γ)u_x + ∂ₓA⁻¹(2μ₀u + ½u_x² + ½ρ²)]·φ|`, using the
/// recorded tendency for the bracket.
pub fn weak_residual_u(traj: &TrajectoryRecord, _p: &Params, phi: &TestFunction) -> Result<f64> {
    check_trajectory(traj)?;
    Ok(weak_integral(traj, phi, |snap, s, _sx, th, dth| {
        dth * inner(&snap.state.u, s) + th * inner(&snap.tendency.du_dt, s)
    })
    .abs())
}

/// `|∬ ρ·φ_t − ρu·φ_x − γρ·φ_x|`, with no derivative on `ρ`.
pub fn weak_residual_rho(traj: &TrajectoryRecord, p: &Params, phi: &TestFunction) -> Result<f64> {
    check_trajectory(traj)?;
    Ok(weak_integral(traj, phi, |snap, s, sx, th, dth| {
        let rho = &snap.state.rho;
        let flux = rho.zip_map(&snap.state.u, |r, u| r * (u + p.gamma));
        dth * inner(rho, s) - th * inner(&flux, sx)
    })
    .abs())
}

/// L² and sup distances between two fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Distance {
    pub l2: f64,
    pub sup: f64,
}

impl Distance {
    fn between(a: &Field, b: &Field) -> Self {
        let d = a - b;
        Distance {
            l2: d.l2_norm(),
            sup: d.sup_norm(),
        }
    }
}

/// Distances between runs `n_k` and `n_{k+1}` at one probe time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairDistance {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub t: f64,
    pub u: Distance,
    pub ux: Distance,
    pub rho: Distance,
}

/// Energy of one run at one probe time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyEntry {
    pub n: usize,
    pub t: f64,
    /// `‖u_x‖² + ‖ρ‖²`
    pub energy: f64,
    /// `‖u_x‖ + ‖ρ‖`
    pub norm_sum: f64,
}

/// Difference of the energy pieces from their initial values at `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EarlyTimeEntry {
    pub t: f64,
    pub ux_sq_diff: f64,
    pub rho_sq_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InitialLimitReport {
    /// Ordered by decreasing `t`.
    pub entries: Vec<EarlyTimeEntry>,
}

impl InitialLimitReport {
    /// Both differences shrink as `t` decreases (ties allowed at `floor`).
    pub fn monotone(&self, floor: f64) -> bool {
        self.entries.windows(2).all(|w| {
            let ok = |a: f64, b: f64| b < a || (a <= floor && b <= floor);
            ok(w[0].ux_sq_diff, w[1].ux_sq_diff) && ok(w[0].rho_sq_diff, w[1].rho_sq_diff)
        })
    }
}

/// `|∫u_x²(t) − ∫u_x²(0)|` and `|∫ρ²(t) − ∫ρ²(0)|` at each requested time,
/// which must be recorded in `traj`.
pub fn initial_energy_limit(traj: &TrajectoryRecord, times: &[f64]) -> Result<InitialLimitReport> {
    check_trajectory(traj)?;
    let pieces = |s: &State| {
        let ux = s.u.deriv().l2_norm();
        let r = s.rho.l2_norm();
        (ux * ux, r * r)
    };
    let (ux0, r0) = pieces(&traj.initial().state);
    let mut times = times.to_vec();
    times.sort_by(|a, b| b.total_cmp(a));
    let entries = times
        .iter()
        .map(|&t| {
            let snap = traj
                .at(t)
                .ok_or_else(|| Error::InvalidStudy(format!("no snapshot recorded at t = {t}")))?;
            let (ux, r) = pieces(&snap.state);
            Ok(EarlyTimeEntry {
                t,
                ux_sq_diff: (ux - ux0).abs(),
                rho_sq_diff: (r - r0).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InitialLimitReport { entries })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub indices: Vec<usize>,
    pub probe_times: Vec<f64>,
    /// Rough-data energy `∫u₀ₓ² + ρ₀²` on the grid.
    pub rough_energy: f64,
    /// Rough-data `‖u₀ₓ‖ + ‖ρ₀‖`.
    pub rough_norm_sum: f64,
    pub distances: Vec<PairDistance>,
    pub energies: Vec<EnergyEntry>,
    /// `min_t (rough_norm_sum + 1e−8 − (‖u_x‖ + ‖ρ‖))` for the finest run.
    pub admissibility_margin: f64,
    /// Early-time limits of the finest run at the probe times.
    pub initial_limit: InitialLimitReport,
}

/// Tolerance in the energy-dominance check.
pub const ENERGY_TOL: f64 = 1e-10;
/// Tolerance in the admissibility check.
pub const ADMISSIBILITY_TOL: f64 = 1e-8;

impl ConvergenceReport {
    fn decreasing(&self, pick: impl Fn(&PairDistance) -> f64) -> bool {
        self.probe_times.iter().all(|&t| {
            let ds: Vec<f64> = self
                .distances
                .iter()
                .filter(|d| d.t == t)
                .map(&pick)
                .collect();
            ds.windows(2).all(|w| w[1] < w[0])
        })
    }

    /// Consecutive L² distances of `u` strictly decrease at every probe.
    pub fn u_decreasing(&self) -> bool {
        self.decreasing(|d| d.u.l2)
    }

    pub fn ux_decreasing(&self) -> bool {
        self.decreasing(|d| d.ux.l2)
    }

    pub fn rho_decreasing(&self) -> bool {
        self.decreasing(|d| d.rho.l2)
    }

    pub fn energy_dominated(&self) -> bool {
        self.energies
            .iter()
            .all(|e| e.energy <= self.rough_energy + ENERGY_TOL)
    }

    pub fn admissible(&self) -> bool {
        self.admissibility_margin >= 0.0
    }

    pub fn all_finite(&self) -> bool {
        self.distances.iter().all(|d| {
            [d.u, d.ux, d.rho]
                .iter()
                .all(|x| x.l2.is_finite() && x.sup.is_finite())
        }) && self.energies.iter().all(|e| e.energy.is_finite())
    }
}

/// Runs the mollified problem for every index in `indices` on one grid with
/// one configuration (runs are independent and execute in parallel), and
/// compares consecutive runs at the probe times. With `dt_max` below the CFL
/// limit all runs share the same step sequence.
pub fn convergence_study(
    data: &RoughInitialData,
    indices: &[usize],
    grid: &PeriodicGrid,
    p: &Params,
    cfg: &TimeStepConfig,
    probe_times: &[f64],
) -> Result<ConvergenceReport> {
    if indices.len() < 3 {
        return Err(Error::InvalidStudy(format!(
            "need at least 3 mollifier indices, got {}",
            indices.len()
        )));
    }
    if indices.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidStudy(
            "mollifier indices must strictly increase".into(),
        ));
    }
    if !(data.alpha > 0.0) {
        return Err(Error::InvalidStudy(format!(
            "study requires alpha > 0, got {}",
            data.alpha
        )));
    }
    if probe_times.is_empty() {
        return Err(Error::InvalidStudy("no probe times".into()));
    }
    let mut probes = probe_times.to_vec();
    probes.sort_by(f64::total_cmp);
    probes.dedup();
    let mut cfg = cfg.clone();
    cfg.stop_times.extend(probes.iter().copied());
    cfg.validate()?;
    let specs = indices
        .iter()
        .map(|&n| MollifierSpec::new(n))
        .collect::<Result<Vec<_>>>()?;

    let runs: Vec<Result<(crate::mollify::InitialData, TrajectoryRecord)>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = specs
                .iter()
                .map(|spec| {
                    let cfg = &cfg;
                    scope.spawn(move || {
                        let init = make_initial(data, grid, spec)?;
                        let traj = run_with_bounds(&init.state, p, cfg, &init.conserved)?;
                        if let Termination::BlowupDetected { t } = traj.termination {
                            return Err(Error::BlowUp(t));
                        }
                        Ok((init, traj))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("study worker panicked"))
                .collect()
        });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let rough = runs[0].0.rough;
    let rough_norm_sum = runs[0].0.rough_u.deriv().l2_norm() + runs[0].0.rough_rho.l2_norm();

    let probe = |traj: &TrajectoryRecord, t: f64| -> Result<State> {
        traj.at(t)
            .map(|s| s.state.clone())
            .ok_or_else(|| Error::InvalidStudy(format!("probe time {t} not recorded")))
    };

    let mut energies = Vec::new();
    for (n, (_, traj)) in indices.iter().zip(&runs) {
        for &t in &probes {
            let s = probe(traj, t)?;
            let ux = s.u.deriv().l2_norm();
            let r = s.rho.l2_norm();
            energies.push(EnergyEntry {
                n: *n,
                t,
                energy: ux * ux + r * r,
                norm_sum: ux + r,
            });
        }
    }

    let mut distances = Vec::new();
    for &t in &probes {
        for k in 0..runs.len() - 1 {
            let a = probe(&runs[k].1, t)?;
            let b = probe(&runs[k + 1].1, t)?;
            distances.push(PairDistance {
                n_coarse: indices[k],
                n_fine: indices[k + 1],
                t,
                u: Distance::between(&a.u, &b.u),
                ux: Distance::between(&a.u.deriv(), &b.u.deriv()),
                rho: Distance::between(&a.rho, &b.rho),
            });
        }
    }

    let finest = *indices.last().expect("at least 3 indices");
    let admissibility_margin = energies
        .iter()
        .filter(|e| e.n == finest)
        .map(|e| rough_norm_sum + ADMISSIBILITY_TOL - e.norm_sum)
        .fold(f64::INFINITY, f64::min);
    let initial_limit = initial_energy_limit(&runs.last().expect("nonempty").1, &probes)?;

    Ok(ConvergenceReport {
        indices: indices.to_vec(),
        probe_times: probes,
        rough_energy: rough.mu1_sq,
        rough_norm_sum,
        distances,
        energies,
        admissibility_margin,
        initial_limit,
    })
}
