//! Right-hand side of the nonlocal system, its conserved functionals, the
//! closed-form a priori bounds, and pointwise residuals of the energy
//! transport identities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Aliasing, Field};
use crate::operator::ainv_dx;

/// Absolute slack used by every inequality monitor.
pub const BOUND_TOL: f64 = 1e-8;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// The pair `(u, ρ)` at time `t`.
#[derive(Clone, Debug)]
pub struct State {
    pub u: Field,
    pub rho: Field,
    pub t: f64,
    /// Set once a non-finite value or a gradient above the blow-up threshold
    /// has been seen.
    pub blown_up: bool,
}

impl State {
    pub fn new(u: Field, rho: Field, t: f64) -> Result<Self> {
        if u.grid() != rho.grid() {
            return Err(Error::LengthMismatch {
                expected: u.len(),
                found: rho.len(),
            });
        }
        Ok(State {
            u,
            rho,
            t,
            blown_up: false,
        })
    }

    pub fn is_finite(&self) -> bool {
        !self.blown_up && self.u.is_finite() && self.rho.is_finite()
    }

    pub fn mu0(&self) -> f64 {
        mu0(self)
    }

    pub fn energy(&self) -> f64 {
        energy(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub gamma: f64,
    #[serde(default)]
    pub aliasing: Aliasing,
}

impl Params {
    pub fn new(gamma: f64) -> Self {
        Params {
            gamma,
            aliasing: Aliasing::None,
        }
    }
}

/// Time derivatives `(u_t, ρ_t)`.
#[derive(Clone, Debug)]
pub struct Tendency {
    pub du_dt: Field,
    pub drho_dt: Field,
}

impl Tendency {
    pub fn is_finite(&self) -> bool {
        self.du_dt.is_finite() && self.drho_dt.is_finite()
    }
}

/// Invariants and norms of the initial data that feed the bound formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedInit {
    /// `μ(u₀)`
    pub mu0: f64,
    /// `∫(u₀ₓ² + ρ₀²)`
    pub mu1_sq: f64,
    pub u0_l2: f64,
    pub u0x_sup: f64,
    pub rho0_sup: f64,
    /// `inf |ρ₀|`
    pub beta: f64,
}

impl ConservedInit {
    pub fn from_state(s: &State) -> Self {
        let ux = s.u.deriv();
        ConservedInit {
            mu0: s.u.mean(),
            mu1_sq: ux.zip_map(&s.rho, |a, r| a * a + r * r).mean(),
            u0_l2: s.u.l2_norm(),
            u0x_sup: ux.sup_norm(),
            rho0_sup: s.rho.sup_norm(),
            beta: s
                .rho
                .values()
                .iter()
                .fold(f64::INFINITY, |m, r| m.min(r.abs())),
        }
    }

    pub fn mu1(&self) -> f64 {
        self.mu1_sq.sqrt()
    }

    /// `|μ₀| + (√3/6) μ₁`, the sup-norm bound on `u`.
    pub fn sup_bound(&self) -> f64 {
        self.mu0.abs() + SQRT3 / 6.0 * self.mu1()
    }

    fn check_beta(&self) -> Result<()> {
        if self.beta > 0.0 && self.beta.is_finite() {
            Ok(())
        } else {
            Err(Error::NonPositiveBeta(self.beta))
        }
    }

    fn prefactor(&self) -> f64 {
        (1.0 + self.rho0_sup.powi(2) + self.u0x_sup.powi(2)) / (2.0 * self.beta)
    }
}

fn transport_velocity(s: &State, gamma: f64) -> Field {
    s.u.map(|v| v + gamma)
}

/// `u_t = (u+γ)u_x + A⁻¹∂ₓ(2μ₀u + ½u_x² + ½ρ²)`, `ρ_t = (ρu)_x + γρ_x`,
/// with `μ₀` read from the current mean of `u`.
pub fn rhs(s: &State, p: &Params) -> Tendency {
    let ux = s.u.deriv();
    let mu = s.u.mean();
    let a = p.aliasing;

    let transport = transport_velocity(s, p.gamma).product(&ux, a);
    let ux2 = ux.product(&ux, a);
    let rho2 = s.rho.product(&s.rho, a);
    let source = Field::from_vec(
        s.u.grid(),
        s.u.values()
            .iter()
            .zip(ux2.values().iter().zip(rho2.values()))
            .map(|(u, (q, r))| 2.0 * mu * u + 0.5 * q + 0.5 * r)
            .collect(),
    );
    let du_dt = &transport + &ainv_dx(&source);

    let flux = s.rho.product(&s.u, a).deriv();
    let drift = s.rho.deriv();
    let drho_dt = flux.zip_map(&drift, |f, d| f + p.gamma * d);
    Tendency { du_dt, drho_dt }
}

pub fn mu0(s: &State) -> f64 {
    s.u.mean()
}

/// `∫(u_x² + ρ²)`.
pub fn energy(s: &State) -> f64 {
    s.u.deriv().zip_map(&s.rho, |a, r| a * a + r * r).mean()
}

/// Rate `d/dt ∫(u_x² + ρ²)` implied by a tendency.
pub fn energy_rate(s: &State, tend: &Tendency) -> f64 {
    let ux = s.u.deriv();
    let uxt = tend.du_dt.deriv();
    let a = ux.zip_map(&uxt, |a, b| 2.0 * a * b).mean();
    let b = s.rho.zip_map(&tend.drho_dt, |r, rt| 2.0 * r * rt).mean();
    a + b
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupBoundReport {
    pub margin: f64,
    pub holds: bool,
}

/// Margin of `‖u‖_∞ ≤ |μ₀| + (√3/6)μ₁`.
pub fn sup_bound_check(s: &State, c: &ConservedInit) -> SupBoundReport {
    if !s.is_finite() {
        return SupBoundReport {
            margin: f64::NEG_INFINITY,
            holds: false,
        };
    }
    let margin = c.sup_bound() - s.u.sup_norm();
    SupBoundReport {
        margin,
        holds: margin >= -BOUND_TOL,
    }
}

/// `(1/12)∫g_x² − max g²` for `g = f − μ(f)`; nonnegative for every `f`.
///
/// The derivative energy is taken from the real trigonometric interpolant of
/// the samples, with the Nyquist mode read as `cos(πnx)`, so the node maximum
/// is always dominated.
pub fn poincare_gap(f: &Field) -> f64 {
    let n = f.len();
    let coeffs = f.coefficients();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut slope_energy = 0.0;
    for (j, c) in coeffs.iter().enumerate() {
        let k = f.grid().wavenumber(j);
        if j == n / 2 {
            let s = std::f64::consts::PI * n as f64;
            slope_energy += 0.5 * s * s * c.norm_sqr();
        } else if k != 0 {
            let s = two_pi * k as f64;
            slope_energy += s * s * c.norm_sqr();
        }
    }
    let mean = f.mean();
    let max_sq = f
        .values()
        .iter()
        .fold(0.0_f64, |m, v| m.max((v - mean).powi(2)));
    slope_energy / 12.0 - max_sq
}

fn exponent(c: &ConservedInit, mean_scale: f64) -> f64 {
    let mu1 = c.mu1();
    4.0 * mean_scale * mean_scale + 0.5 * c.mu1_sq + SQRT3 / 3.0 * mean_scale * mu1 + 0.5
}

/// Bound on `‖u_x(t)‖_∞` for strong solutions with `inf|ρ₀| = β > 0`, with
/// the growth rate expressed through `μ₀`.
pub fn c1(t: f64, c: &ConservedInit) -> Result<f64> {
    c.check_beta()?;
    Ok(c.prefactor() * (exponent(c, c.mu0.abs()) * t).exp())
}

/// Bound on `‖ρ(t)‖_∞` matching [`c1`].
pub fn c2(t: f64, c: &ConservedInit) -> Result<f64> {
    Ok((c1(t, c)? * t).exp() * c.rho0_sup)
}

/// Bound on `‖u_x(t)‖_∞` with `|μ₀|` replaced by `‖u₀‖_{L²}`, which makes it
/// uniform over the mollified family.
pub fn c1_tilde(t: f64, c: &ConservedInit) -> Result<f64> {
    c.check_beta()?;
    Ok(c.prefactor() * (exponent(c, c.u0_l2) * t).exp())
}

/// `exp(C̃₁(t)·t)·‖ρ₀‖_∞`.
pub fn c2_tilde(t: f64, c: &ConservedInit) -> Result<f64> {
    Ok((c1_tilde(t, c)? * t).exp() * c.rho0_sup)
}

/// Pointwise defect of
/// `∂_t(u_x²+ρ²) − ∂ₓ[(u+γ)(u_x²+ρ²)] = −4μ₀uu_x + 4μ₀²u_x + μ₁²u_x`,
/// with the time derivative assembled from `tend` and `μ₁²` taken from `c`.
pub fn energy_transport_residual(
    s: &State,
    p: &Params,
    tend: &Tendency,
    c: &ConservedInit,
) -> Field {
    let ux = s.u.deriv();
    let uxt = tend.du_dt.deriv();
    let density = ux.zip_map(&s.rho, |a, r| a * a + r * r);
    let flux = transport_velocity(s, p.gamma)
        .zip_map(&density, |v, e| v * e)
        .deriv();
    let mu = s.u.mean();
    let values = (0..s.u.len())
        .map(|j| {
            let (u, q, r) = (s.u.values()[j], ux.values()[j], s.rho.values()[j]);
            let dt = 2.0 * q * uxt.values()[j] + 2.0 * r * tend.drho_dt.values()[j];
            let source = -4.0 * mu * u * q + 4.0 * mu * mu * q + q * c.mu1_sq;
            dt - flux.values()[j] - source
        })
        .collect();
    Field::from_vec(s.u.grid(), values)
}

/// Pointwise defect of
/// `u_tx − (u+γ)u_xx = −2μ₀u + ½u_x² − ½ρ² + 2μ₀² + ½μ₁²`.
pub fn ux_equation_residual(s: &State, p: &Params, tend: &Tendency, c: &ConservedInit) -> Field {
    let ux = s.u.deriv();
    let uxx = ux.deriv();
    let uxt = tend.du_dt.deriv();
    let mu = s.u.mean();
    let values = (0..s.u.len())
        .map(|j| {
            let (u, q, r) = (s.u.values()[j], ux.values()[j], s.rho.values()[j]);
            let lhs = uxt.values()[j] - (u + p.gamma) * uxx.values()[j];
            let right = -2.0 * mu * u + 0.5 * q * q - 0.5 * r * r + 2.0 * mu * mu + 0.5 * c.mu1_sq;
            lhs - right
        })
        .collect();
    Field::from_vec(s.u.grid(), values)
}
