//! The operator `A = μ − ∂ₓ²` on the circle and its inverse.
//!
//! `A⁻¹` is available by three routes that share nothing but the grid
//! primitives:
//!
//! * [`ainv_formula`]: the closed-form expression in iterated antiderivatives,
//! * [`conv_green`]: periodic convolution with the Green's kernel
//!   `g(x) = x(x−1)/2 + 13/12`,
//! * [`ainv_spectral`]: the Fourier symbol (`1` on the mean, `(2πk)⁻²` else).
//!
//! The spectral route is the one used by the dynamics; the other two exist to
//! cross-check it. Accuracy statements hold for band-limited input.

use rustfft::num_complex::Complex64;

use crate::grid::{Field, PeriodicGrid};

/// Constant term of the Green's kernel.
pub const GREEN_CONSTANT: f64 = 13.0 / 12.0;

/// `g(x) = x(x−1)/2 + 13/12` on `[0, 1)`, extended periodically.
pub fn green(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    0.5 * y * (y - 1.0) + GREEN_CONSTANT
}

/// Node samples of the Green's kernel.
#[derive(Clone, Debug)]
pub struct GreenKernel {
    values: Field,
}

impl GreenKernel {
    pub fn new(grid: &PeriodicGrid) -> Self {
        GreenKernel {
            values: Field::from_fn(grid, green),
        }
    }

    pub fn values(&self) -> &Field {
        &self.values
    }

    /// `∫_S g`. The kernel has a derivative jump of `+1` across `x = 0`, so the
    /// rectangle rule overshoots by `h²/12`; that endpoint term is removed.
    /// `g'''` vanishes, which makes the corrected rule exact.
    pub fn mean(&self) -> f64 {
        let h = self.values.grid().h();
        self.values.mean() - h * h / 12.0
    }

    /// Plain rectangle-rule mean of the node samples (`1 + 1/(12n²)`).
    pub fn node_mean(&self) -> f64 {
        self.values.mean()
    }
}

pub fn green_kernel(grid: &PeriodicGrid) -> GreenKernel {
    GreenKernel::new(grid)
}

fn ramp(grid: &PeriodicGrid, slope: f64) -> impl Iterator<Item = f64> + '_ {
    grid.nodes().into_iter().map(move |x| slope * x)
}

/// `∫_0^1 ∫_0^x w dy dx`, integrating the mean ramp of `cumint(w)` exactly.
fn integral_of_cumint(w: &Field, cumint: &Field) -> f64 {
    let mu = w.mean();
    let periodic_mean = cumint
        .values()
        .iter()
        .zip(ramp(w.grid(), mu))
        .map(|(c, r)| c - r)
        .sum::<f64>()
        / w.len() as f64;
    0.5 * mu + periodic_mean
}

/// `A⁻¹w` from the iterated-integral formula
///
/// ```text
/// v(x) = (x²/2 − x/2 + 13/12) μ(w) + (x − 1/2) ∫₀¹∫₀ʸ w − ∫₀ˣ∫₀ʸ w + ∫₀¹∫₀ʸ∫₀ˢ w
/// ```
///
/// Each antiderivative is a `cumint`; polynomial ramps produced by nonzero
/// means are carried analytically so that no non-periodic sample set is ever
/// transformed.
pub fn ainv_formula(w: &Field) -> Field {
    let grid = w.grid();
    let mu = w.mean();

    // I1(x) = ∫₀ˣ w = μx + P1(x)
    let first = w.cumint();
    let p1: Vec<f64> = first
        .values()
        .iter()
        .zip(ramp(grid, mu))
        .map(|(c, r)| c - r)
        .collect();
    let m1 = p1.iter().sum::<f64>() / p1.len() as f64;
    let int_first = 0.5 * mu + m1;

    // I2(x) = ∫₀ˣ I1 = μx²/2 + m1·x + P2(x), P2 = cumint(P1 − m1)
    let p1_centered = Field::from_vec(grid, p1.iter().map(|v| v - m1).collect());
    let p2 = p1_centered.cumint();
    let m2 = p2.mean();
    let int_second = mu / 6.0 + 0.5 * m1 + m2;

    let values = grid
        .nodes()
        .into_iter()
        .zip(p2.values())
        .map(|(x, &p2x)| {
            let second = 0.5 * mu * x * x + m1 * x + p2x;
            (0.5 * x * x - 0.5 * x + GREEN_CONSTANT) * mu + (x - 0.5) * int_first - second
                + int_second
        })
        .collect();
    Field::from_vec(grid, values)
}

/// `A⁻¹w` by the Fourier symbol. The Nyquist mode is dropped, as in
/// [`Field::deriv`].
pub fn ainv_spectral(w: &Field) -> Field {
    let two_pi = 2.0 * std::f64::consts::PI;
    let values = w
        .grid()
        .apply_symbol(w.values(), Complex64::new(0.0, 0.0), |k| {
            if k == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                let s = two_pi * k as f64;
                Complex64::new(1.0 / (s * s), 0.0)
            }
        });
    Field::from_vec(w.grid(), values)
}

/// Periodic convolution `g ∗ w` with the sampled kernel, computed by
/// transform multiplication, followed by Euler–Maclaurin corrections for the
/// kink of `g` at the origin:
///
/// ```text
/// g ∗ w ≈ T − (h²/12) w + (h⁴/240) w'' − (h⁶/6048) w''''
/// ```
///
/// where `T` is the rectangle-rule convolution.
pub fn conv_green(w: &Field) -> Field {
    let raw = conv_green_uncorrected(w);
    let h = w.grid().h();
    let w2 = w.deriv().deriv();
    let w4 = w2.deriv().deriv();
    let h2 = h * h;
    let values = raw
        .values()
        .iter()
        .zip(w.values())
        .zip(w2.values().iter().zip(w4.values()))
        .map(|((t, w0), (w2, w4))| {
            t - h2 / 12.0 * w0 + h2 * h2 / 240.0 * w2 - h2 * h2 * h2 / 6048.0 * w4
        })
        .collect();
    Field::from_vec(w.grid(), values)
}

/// Rectangle-rule convolution `(1/n) Σ_j g(x_i − x_j) w_j`; second-order
/// accurate because of the kernel's kink.
pub fn conv_green_uncorrected(w: &Field) -> Field {
    let grid = w.grid();
    let kernel = grid.forward(GreenKernel::new(grid).values().values());
    let mut spec = grid.forward(w.values());
    let h = grid.h();
    for (c, k) in spec.iter_mut().zip(&kernel) {
        *c *= k * h;
    }
    Field::from_vec(grid, grid.inverse(spec))
}

/// `A⁻¹∂ₓw = (x − 1/2)∫₀¹w − ∫₀ˣw + ∫₀¹∫₀ˣw`.
pub fn ainv_dx(w: &Field) -> Field {
    let mu = w.mean();
    let first = w.cumint();
    let double = integral_of_cumint(w, &first);
    let values = w
        .grid()
        .nodes()
        .into_iter()
        .zip(first.values())
        .map(|(x, &i1)| (x - 0.5) * mu - i1 + double)
        .collect();
    Field::from_vec(w.grid(), values)
}

/// `A⁻¹∂ₓ²w = −w + ∫₀¹w`, pointwise.
pub fn ainv_dxx(w: &Field) -> Field {
    let mu = w.mean();
    w.map(|v| mu - v)
}

/// `Av = μ(v) − v_xx`.
pub fn apply_a(v: &Field) -> Field {
    let mu = v.mean();
    v.deriv().deriv().map(|d| mu - d)
}
