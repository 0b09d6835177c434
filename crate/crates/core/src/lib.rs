//! Periodic pseudospectral simulator and verification harness for the
//! two-component μ-Hunter-Saxton system
//!
//! ```text
//! u_t − (u+γ) u_x = ∂ₓ A⁻¹(2μ₀u + ½u_x² + ½ρ²),   A = μ − ∂ₓ²
//! ρ_t − (ρu)_x    = γ ρ_x
//! ```
//!
//! on the unit circle. The crate provides the spectral substrate
//! ([`grid`]), the nonlocal operator `A⁻¹` by three independent routes
//! ([`operator`]), the right-hand side and closed-form bounds ([`dynamics`]),
//! mollification of rough data ([`mollify`]), RK4 time stepping with
//! characteristics ([`timestepper`]), weak-form and convergence checks
//! ([`verification`]) and the configuration/archive layer used by the CLI
//! ([`io`]).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod mollify;
pub mod operator;
pub mod timestepper;
pub mod verification;

pub use dynamics::{ConservedInit, Params, State};
pub use error::{Error, Result};
pub use grid::{Aliasing, Field, PeriodicGrid};
pub use mollify::{MollifierSpec, Profile, RoughInitialData};
pub use timestepper::{TimeStepConfig, TrajectoryRecord};
