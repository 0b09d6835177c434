//! Smoothing of rough initial data with the standard compactly supported
//! bump, and the built-in library of rough profiles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ConservedInit, State};
use crate::error::{Error, Result};
use crate::grid::{Field, PeriodicGrid};

/// `e^{1/(x²−1)}` on `|x| < 1`, zero elsewhere.
pub fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (1.0 / (x * x - 1.0)).exp()
    } else {
        0.0
    }
}

/// `d/dx bump(x)`.
pub fn bump_deriv(x: f64) -> f64 {
    if x.abs() < 1.0 {
        let d = x * x - 1.0;
        -2.0 * x / (d * d) * bump(x)
    } else {
        0.0
    }
}

/// `∫_{−1}^{1} bump`, by adaptive Simpson quadrature (≈ 0.443994).
pub fn bump_integral() -> f64 {
    adaptive_simpson(&bump, -1.0, 1.0, 1e-15, 50)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, depth)
}

/// Index `n` of the mollifier `φₙ(x) = n φ(nx) / ∫φ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MollifierSpec {
    n: usize,
}

impl MollifierSpec {
    /// `n ≥ 2` keeps the support inside `(−1/2, 1/2)`, so periodization never
    /// overlaps.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMollifier(n));
        }
        Ok(MollifierSpec { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Signed distance from `x` to the nearest integer, in `[−1/2, 1/2)`.
fn circle_offset(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    if y >= 0.5 {
        y - 1.0
    } else {
        y
    }
}

/// Node samples of the periodized `φₙ`, rescaled so the discrete mean is
/// exactly one.
pub fn mollifier(spec: &MollifierSpec, grid: &PeriodicGrid) -> Field {
    let n = spec.n() as f64;
    let norm = bump_integral();
    let raw = Field::from_fn(grid, |x| n * bump(n * circle_offset(x)) / norm);
    let mean = raw.mean();
    raw.map(|v| v / mean)
}

/// `φₙ ∗ f` on the circle, by transform multiplication with the discrete
/// mollifier.
pub fn mollify(f: &Field, spec: &MollifierSpec) -> Field {
    let grid = f.grid();
    let kernel = grid.forward(mollifier(spec, grid).values());
    let mut spec_f = grid.forward(f.values());
    let h = grid.h();
    for (c, k) in spec_f.iter_mut().zip(&kernel) {
        *c *= k * h;
    }
    Field::new(grid, grid.inverse(spec_f)).expect("grid-sized transform")
}

/// `sqrt(‖a − b‖² + ‖∂ₓ(a − b)‖²)`.
pub fn h1_distance(a: &Field, b: &Field) -> f64 {
    let d = a - b;
    (d.l2_norm().powi(2) + d.deriv().l2_norm().powi(2)).sqrt()
}

/// Analytically defined periodic profiles on `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `slope · dist(x, ℤ)`: a triangle wave with corners at 0 and 1/2.
    Hat {
        #[serde(default = "one")]
        slope: f64,
    },
    /// Periodic linear interpolation through `(x, value)` knots in `[0, 1)`.
    PiecewiseLinear {
        knots: Vec<[f64; 2]>,
    },
    /// `high` on `[start, end)`, `low` elsewhere.
    Step {
        low: f64,
        high: f64,
        start: f64,
        end: f64,
    },
    /// `values[i]` on `[breaks[i], breaks[i+1])`, cyclically.
    PiecewiseConstant {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    /// `mean + Σ_k cos[k-1] cos(2πkx) + sin[k-1] sin(2πkx)`.
    Fourier {
        #[serde(default)]
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// Fourier polynomial with coefficients drawn uniformly from
    /// `[−amplitude, amplitude]`, reproducible from `seed`.
    RandomFourier {
        #[serde(default)]
        mean: f64,
        modes: usize,
        amplitude: f64,
        seed: u64,
    },
    Samples {
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidProfile(m.to_string()));
        match self {
            Profile::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return bad("piecewise_linear needs at least one knot");
                }
                if knots.windows(2).any(|w| w[1][0] <= w[0][0])
                    || knots.iter().any(|k| !(0.0..1.0).contains(&k[0]))
                {
                    return bad("piecewise_linear knots must be strictly increasing in [0, 1)");
                }
            }
            Profile::Step { start, end, .. } => {
                if !(0.0..=1.0).contains(start) || !(0.0..=1.0).contains(end) || start >= end {
                    return bad("step needs 0 <= start < end <= 1");
                }
            }
            Profile::PiecewiseConstant { breaks, values } => {
                if breaks.is_empty() || breaks.len() != values.len() {
                    return bad("piecewise_constant needs one value per break");
                }
                if breaks.windows(2).any(|w| w[1] <= w[0])
                    || breaks.iter().any(|b| !(0.0..1.0).contains(b))
                {
                    return bad("piecewise_constant breaks must be strictly increasing in [0, 1)");
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn fourier_coefficients(&self) -> Option<(f64, Vec<f64>, Vec<f64>)> {
        match self {
            Profile::Fourier { mean, cos, sin } => Some((*mean, cos.clone(), sin.clone())),
            Profile::RandomFourier {
                mean,
                modes,
                amplitude,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut draw = || rng.gen_range(-amplitude.abs()..=amplitude.abs());
                let cos = (0..*modes).map(|_| draw()).collect();
                let sin = (0..*modes).map(|_| draw()).collect();
                Some((*mean, cos, sin))
            }
            _ => None,
        }
    }

    /// Value at `x` (not available for `Samples`).
    pub fn value(&self, x: f64) -> Option<f64> {
        let y = x.rem_euclid(1.0);
        Some(match self {
            Profile::Constant { value } => *value,
            Profile::Hat { slope } => slope * y.min(1.0 - y),
            Profile::PiecewiseLinear { knots } => {
                let (a, b) = bracket(knots, y);
                let span = (b[0] - a[0]).rem_euclid(1.0);
                let span = if span == 0.0 { 1.0 } else { span };
                let s = (y - a[0]).rem_euclid(1.0) / span;
                a[1] + s * (b[1] - a[1])
            }
            Profile::Step {
                low,
                high,
                start,
                end,
            } => {
                if y >= *start && y < *end {
                    *high
                } else {
                    *low
                }
            }
            Profile::PiecewiseConstant { breaks, values } => {
                let idx = breaks
                    .iter()
                    .rposition(|b| *b <= y)
                    .unwrap_or(breaks.len() - 1);
                values[idx]
            }
            Profile::Fourier { .. } | Profile::RandomFourier { .. } => {
                let (mean, cos, sin) = self.fourier_coefficients()?;
                let tp = 2.0 * std::f64::consts::PI;
                let mut v = mean;
                for (k, c) in cos.iter().enumerate() {
                    v += c * (tp * (k + 1) as f64 * y).cos();
                }
                for (k, s) in sin.iter().enumerate() {
                    v += s * (tp * (k + 1) as f64 * y).sin();
                }
                v
            }
            Profile::Samples { .. } => return None,
        })
    }

    /// Samples at the grid nodes.
    pub fn sample(&self, grid: &PeriodicGrid) -> Result<Field> {
        self.validate()?;
        match self {
            Profile::Samples { values } => Field::new(grid, values.clone()),
            _ => Ok(Field::from_fn(grid, |x| {
                self.value(x).expect("analytic profile")
            })),
        }
    }

    /// Essential sup of `|f'|`; infinite for profiles with jumps.
    pub fn derivative_sup(&self, grid: &PeriodicGrid) -> Result<f64> {
        Ok(match self {
            Profile::Constant { .. } => 0.0,
            Profile::Hat { slope } => slope.abs(),
            Profile::PiecewiseLinear { knots } => {
                let m = knots.len();
                (0..m)
                    .map(|i| {
                        let (a, b) = (knots[i], knots[(i + 1) % m]);
                        let span = (b[0] - a[0]).rem_euclid(1.0);
                        let span = if span == 0.0 { 1.0 } else { span };
                        ((b[1] - a[1]) / span).abs()
                    })
                    .fold(0.0, f64::max)
            }
            Profile::Step { low, high, .. } => {
                if low == high {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Profile::PiecewiseConstant { values, .. } => {
                if values.windows(2).all(|w| w[0] == w[1]) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Profile::Fourier { .. } | Profile::RandomFourier { .. } | Profile::Samples { .. } => {
                self.sample(grid)?.deriv().sup_norm()
            }
        })
    }
}

fn bracket(knots: &[[f64; 2]], y: f64) -> ([f64; 2], [f64; 2]) {
    let m = knots.len();
    match knots.iter().rposition(|k| k[0] <= y) {
        Some(i) => (knots[i], knots[(i + 1) % m]),
        None => (knots[m - 1], knots[0]),
    }
}

/// Rough initial pair `(u₀, ρ₀)` with the claimed lower bound `ρ₀ ≥ α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoughInitialData {
    pub u: Profile,
    pub rho: Profile,
    #[serde(default)]
    pub alpha: f64,
}

/// `(mollified, rough)` norm pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormPair {
    pub mollified: f64,
    pub rough: f64,
}

impl NormPair {
    pub fn contracts(&self, tol: f64) -> bool {
        self.mollified <= self.rough + tol
    }
}

/// Norm comparisons between rough and mollified data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormComparison {
    pub u_l2: NormPair,
    pub ux_l2: NormPair,
    pub rho_l2: NormPair,
    /// `H¹` distance between `u₀ⁿ` and `u₀`.
    pub u_h1_distance: f64,
    /// `L²` distance between `ρ₀ⁿ` and `ρ₀`.
    pub rho_l2_distance: f64,
    pub rho_min: f64,
}

impl NormComparison {
    pub fn contracts(&self, tol: f64) -> bool {
        self.u_l2.contracts(tol) && self.ux_l2.contracts(tol) && self.rho_l2.contracts(tol)
    }
}

/// Everything assembled from rough data at one mollifier index.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub state: State,
    /// Invariants of the mollified state (`β` here is `inf ρ₀ⁿ`).
    pub conserved: ConservedInit,
    /// Invariants of the rough samples (`β = inf|ρ₀|`, `u0x_sup` is the
    /// Lipschitz constant of `u₀`).
    pub rough: ConservedInit,
    pub rough_u: Field,
    pub rough_rho: Field,
    pub norms: NormComparison,
}

fn sample_checked(data: &RoughInitialData, grid: &PeriodicGrid) -> Result<(Field, Field)> {
    let u = data.u.sample(grid)?;
    let rho = data.rho.sample(grid)?;
    if data.alpha > 0.0 {
        let min = rho.min();
        if min < data.alpha {
            return Err(Error::AlphaViolated {
                alpha: data.alpha,
                min,
            });
        }
    }
    Ok((u, rho))
}

fn rough_conserved(data: &RoughInitialData, u: &Field, rho: &Field) -> Result<ConservedInit> {
    let ux = u.deriv();
    Ok(ConservedInit {
        mu0: u.mean(),
        mu1_sq: ux.zip_map(rho, |a, r| a * a + r * r).mean(),
        u0_l2: u.l2_norm(),
        u0x_sup: data.u.derivative_sup(u.grid())?,
        rho0_sup: rho.sup_norm(),
        beta: rho
            .values()
            .iter()
            .fold(f64::INFINITY, |m, r| m.min(r.abs())),
    })
}

/// Samples the rough data without smoothing (for data that is already smooth).
pub fn sample_initial(data: &RoughInitialData, grid: &PeriodicGrid) -> Result<InitialData> {
    let (u, rho) = sample_checked(data, grid)?;
    let rough = rough_conserved(data, &u, &rho)?;
    let state = State::new(u.clone(), rho.clone(), 0.0)?;
    let conserved = ConservedInit::from_state(&state);
    let same = |v: f64| NormPair {
        mollified: v,
        rough: v,
    };
    let norms = NormComparison {
        u_l2: same(u.l2_norm()),
        ux_l2: same(u.deriv().l2_norm()),
        rho_l2: same(rho.l2_norm()),
        u_h1_distance: 0.0,
        rho_l2_distance: 0.0,
        rho_min: rho.min(),
    };
    Ok(InitialData {
        state,
        conserved,
        rough,
        rough_u: u,
        rough_rho: rho,
        norms,
    })
}

/// Samples the rough data, mollifies both components and records the norm
/// comparisons between the two.
pub fn make_initial(
    data: &RoughInitialData,
    grid: &PeriodicGrid,
    spec: &MollifierSpec,
) -> Result<InitialData> {
    let (u, rho) = sample_checked(data, grid)?;
    let rough = rough_conserved(data, &u, &rho)?;
    let un = mollify(&u, spec);
    let rhon = mollify(&rho, spec);
    let norms = NormComparison {
        u_l2: NormPair {
            mollified: un.l2_norm(),
            rough: u.l2_norm(),
        },
        ux_l2: NormPair {
            mollified: un.deriv().l2_norm(),
            rough: u.deriv().l2_norm(),
        },
        rho_l2: NormPair {
            mollified: rhon.l2_norm(),
            rough: rho.l2_norm(),
        },
        u_h1_distance: h1_distance(&un, &u),
        rho_l2_distance: (&rhon - &rho).l2_norm(),
        rho_min: rhon.min(),
    };
    let state = State::new(un, rhon, 0.0)?;
    let conserved = ConservedInit::from_state(&state);
    Ok(InitialData {
        state,
        conserved,
        rough,
        rough_u: u,
        rough_rho: rho,
        norms,
    })
}
