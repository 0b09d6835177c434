//! Uniform periodic grid on the unit circle and the spectral primitives
//! built on it: differentiation, cumulative integration, quadrature, norms.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How pointwise products of fields are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aliasing {
    /// Plain pointwise product on the grid.
    #[default]
    None,
    /// 3/2 zero-padded product (the 2/3 rule); alias-free for quadratic terms.
    TwoThirds,
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(planner: &mut FftPlanner<f64>, n: usize) -> Self {
        Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

struct GridInner {
    n: usize,
    plans: Plans,
    padded: Plans,
}

/// Uniform discretization of the circle `[0, 1)` with `n` nodes `x_j = j/n`.
///
/// Cloning is cheap; transform plans are shared.
#[derive(Clone)]
pub struct PeriodicGrid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("n", &self.n())
            .finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n() == other.n()
    }
}

impl PeriodicGrid {
    /// Builds a grid with `n` nodes. `n` must be even and at least 4.
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(n));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans::new(&mut planner, n);
        let padded = Plans::new(&mut planner, 3 * n / 2);
        Ok(PeriodicGrid {
            inner: Arc::new(GridInner { n, plans, padded }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n() as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.n() as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n()).map(|j| self.node(j)).collect()
    }

    /// Signed wavenumber stored at transform index `j`. The Nyquist index
    /// `n/2` maps to `+n/2`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.n();
        if j <= n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    pub fn nyquist(&self) -> usize {
        self.n() / 2
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.n());
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inner.plans.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT including the `1/n` factor; returns the real part.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        debug_assert_eq!(spectrum.len(), self.n());
        self.inner.plans.inverse.process(&mut spectrum);
        let scale = self.h();
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Applies a per-mode multiplier `symbol(k)` to `values` in Fourier space.
    /// The multiplier is not consulted at the Nyquist index, which is set to
    /// `nyquist` times its coefficient.
    pub(crate) fn apply_symbol(
        &self,
        values: &[f64],
        nyquist: Complex64,
        symbol: impl Fn(i64) -> Complex64,
    ) -> Vec<f64> {
        let mut spec = self.forward(values);
        let nyq = self.nyquist();
        for (j, c) in spec.iter_mut().enumerate() {
            if j == nyq {
                *c *= nyquist;
            } else {
                *c *= symbol(self.wavenumber(j));
            }
        }
        self.inverse(spec)
    }

    /// Product of two grid functions, optionally through a 3/2 padded grid.
    pub fn product(&self, a: &[f64], b: &[f64], aliasing: Aliasing) -> Vec<f64> {
        match aliasing {
            Aliasing::None => a.iter().zip(b).map(|(x, y)| x * y).collect(),
            Aliasing::TwoThirds => {
                let pa = self.pad(a);
                let pb = self.pad(b);
                let prod: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
                self.unpad(&prod)
            }
        }
    }

    fn pad(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n();
        let m = 3 * n / 2;
        let spec = self.forward(values);
        let mut big = vec![Complex64::new(0.0, 0.0); m];
        for (j, c) in spec.iter().enumerate() {
            let k = self.wavenumber(j);
            if k.unsigned_abs() as usize == n / 2 {
                continue;
            }
            let idx = if k >= 0 {
                k as usize
            } else {
                (m as i64 + k) as usize
            };
            big[idx] = *c;
        }
        self.inner.padded.inverse.process(&mut big);
        // Physical values on the padded grid: scale by 1/n (not 1/m).
        big.into_iter().map(|c| c.re / n as f64).collect()
    }

    fn unpad(&self, padded: &[f64]) -> Vec<f64> {
        let n = self.n();
        let m = padded.len();
        let mut big: Vec<Complex64> = padded.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inner.padded.forward.process(&mut big);
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        for (j, c) in spec.iter_mut().enumerate() {
            let k = self.wavenumber(j);
            if k.unsigned_abs() as usize == n / 2 {
                continue;
            }
            let idx = if k >= 0 {
                k as usize
            } else {
                (m as i64 + k) as usize
            };
            *c = big[idx] * (n as f64 / m as f64);
        }
        self.inverse(spec)
    }
}

/// Checks that a grid size would be accepted.
pub fn make_grid(n: usize) -> Result<PeriodicGrid> {
    PeriodicGrid::new(n)
}

/// Real samples of a periodic function on a [`PeriodicGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                found: values.len(),
            });
        }
        Ok(Field {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_vec(grid: &PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Field {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_fn(grid: &PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn constant(grid: &PeriodicGrid, c: f64) -> Self {
        Self::from_vec(grid, vec![c; grid.n()])
    }

    pub fn zeros(grid: &PeriodicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_vec(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        Field::from_vec(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Pointwise product, formed according to `aliasing`.
    pub fn product(&self, other: &Field, aliasing: Aliasing) -> Field {
        Field::from_vec(
            &self.grid,
            self.grid.product(&self.values, &other.values, aliasing),
        )
    }

    /// `∫_S f dx` by the periodic rectangle rule.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Spectral derivative; the Nyquist mode is dropped.
    pub fn deriv(&self) -> Field {
        let two_pi = 2.0 * std::f64::consts::PI;
        let values = self
            .grid
            .apply_symbol(&self.values, Complex64::new(0.0, 0.0), |k| {
                Complex64::new(0.0, two_pi * k as f64)
            });
        Field::from_vec(&self.grid, values)
    }

    /// Antiderivative `F(x) = ∫_0^x f` with `F(0) = 0`: the mean-zero part is
    /// integrated spectrally and the mean contributes the ramp `mean(f)·x`.
    pub fn cumint(&self) -> Field {
        let mean = self.mean();
        let periodic = self.periodic_antiderivative();
        Field::from_vec(
            &self.grid,
            periodic
                .iter()
                .zip(self.grid.nodes())
                .map(|(p, x)| p + mean * x)
                .collect(),
        )
    }

    /// Periodic antiderivative of `f − mean(f)`, pinned to zero at `x = 0`.
    pub(crate) fn periodic_antiderivative(&self) -> Vec<f64> {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut spec = self.grid.forward(&self.values);
        let nyq = self.grid.nyquist();
        for (j, c) in spec.iter_mut().enumerate() {
            let k = self.grid.wavenumber(j);
            if k == 0 || j == nyq {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= Complex64::new(0.0, two_pi * k as f64);
            }
        }
        let g = self.grid.inverse(spec);
        let g0 = g[0];
        g.into_iter().map(|v| v - g0).collect()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Normalized Fourier coefficients `f̂_k / n`, in transform order.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let scale = self.grid.h();
        self.grid
            .forward(&self.values)
            .into_iter()
            .map(|c| c * scale)
            .collect()
    }

    /// Trigonometric interpolant for off-grid evaluation.
    pub fn interpolant(&self) -> SpectralInterpolant {
        SpectralInterpolant::new(self)
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.map(|a| a * rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|a| -a)
    }
}

/// Real trigonometric interpolant of grid samples; the Nyquist mode is taken
/// as `cos(π n x)`.
#[derive(Clone, Debug)]
pub struct SpectralInterpolant {
    mean: f64,
    // (k, c_k) for 1 <= k < n/2; value = mean + 2 Re Σ c_k e^{2πikx} + nyq cos(πnx)
    modes: Vec<Complex64>,
    nyquist: f64,
    n: usize,
}

impl SpectralInterpolant {
    fn new(f: &Field) -> Self {
        let coeffs = f.coefficients();
        let n = f.len();
        SpectralInterpolant {
            mean: coeffs[0].re,
            modes: coeffs[1..n / 2].to_vec(),
            nyquist: coeffs[n / 2].re,
            n,
        }
    }

    /// Value and first derivative at `x`.
    pub fn eval_with_deriv(&self, x: f64) -> (f64, f64) {
        let two_pi = 2.0 * std::f64::consts::PI;
        let step = Complex64::from_polar(1.0, two_pi * x);
        let mut phase = step;
        let mut value = self.mean;
        let mut deriv = 0.0;
        for (i, c) in self.modes.iter().enumerate() {
            let k = (i + 1) as f64;
            let term = c * phase;
            value += 2.0 * term.re;
            deriv -= 2.0 * two_pi * k * term.im;
            phase *= step;
        }
        let arg = std::f64::consts::PI * self.n as f64 * x;
        value += self.nyquist * arg.cos();
        (value, deriv)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_deriv(x).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    #[test]
    fn grid_nodes_and_spacing() {
        let g = grid(4);
        assert_eq!(g.nodes(), vec![0.0, 0.25, 0.5, 0.75]);
        assert_eq!(g.h(), 0.25);
        assert_eq!(grid(256).h(), 1.0 / 256.0);
        assert!(matches!(PeriodicGrid::new(3), Err(Error::InvalidGrid(3))));
        assert!(PeriodicGrid::new(2).is_err());
        assert!(PeriodicGrid::new(6).is_ok());
    }

    #[test]
    fn mean_examples() {
        let g = grid(64);
        assert_abs_diff_eq!(Field::constant(&g, 2.5).mean(), 2.5, epsilon = 1e-15);
        for n in [4, 8, 10, 64] {
            let f = Field::from_fn(&grid(n), |x| (2.0 * PI * x).sin());
            assert_abs_diff_eq!(f.mean(), 0.0, epsilon = 1e-15);
        }
        let f = Field::from_fn(&g, |x| 2.0 + (4.0 * PI * x).cos());
        assert_abs_diff_eq!(f.mean(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn deriv_examples() {
        let g = grid(32);
        assert!(Field::constant(&g, 3.0).deriv().sup_norm() < 1e-14);
        let d = Field::from_fn(&g, |x| (2.0 * PI * x).sin()).deriv();
        let want = Field::from_fn(&g, |x| 2.0 * PI * (2.0 * PI * x).cos());
        assert!((&d - &want).sup_norm() < 1e-12);
        let d = Field::from_fn(&g, |x| (4.0 * PI * x).cos()).deriv();
        let want = Field::from_fn(&g, |x| -4.0 * PI * (4.0 * PI * x).sin());
        assert!((&d - &want).sup_norm() < 1e-12);
    }

    #[test]
    fn nyquist_mode_is_dropped() {
        let g = grid(8);
        let f = Field::new(
            &g,
            (0..8)
                .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 })
                .collect(),
        )
        .unwrap();
        assert!(f.deriv().sup_norm() < 1e-14);
    }

    #[test]
    fn cumint_examples() {
        let g = grid(32);
        let f = Field::from_fn(&g, |x| (2.0 * PI * x).cos()).cumint();
        let want = Field::from_fn(&g, |x| (2.0 * PI * x).sin() / (2.0 * PI));
        assert!((&f - &want).sup_norm() < 1e-14);

        let f = Field::constant(&g, 1.0).cumint();
        let want = Field::from_fn(&g, |x| x);
        assert!((&f - &want).sup_norm() < 1e-14);

        let f = Field::from_fn(&g, |x| (2.0 * PI * x).sin()).cumint();
        let want = Field::from_fn(&g, |x| (1.0 - (2.0 * PI * x).cos()) / (2.0 * PI));
        assert!((&f - &want).sup_norm() < 1e-14);
        assert_eq!(f.values()[0], 0.0);
    }

    #[test]
    fn norm_examples() {
        let g = grid(16);
        let s = Field::from_fn(&g, |x| (2.0 * PI * x).sin());
        assert_abs_diff_eq!(s.l2_norm(), 0.5_f64.sqrt(), epsilon = 1e-15);
        assert_eq!(Field::constant(&g, -3.0).sup_norm(), 3.0);
        let c = Field::from_fn(&g, |x| (2.0 * PI * x).cos() + 1.0);
        assert_abs_diff_eq!(c.sup_norm(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let g = grid(8);
        assert!(matches!(
            Field::new(&g, vec![0.0; 7]),
            Err(Error::LengthMismatch {
                expected: 8,
                found: 7
            })
        ));
    }

    #[test]
    fn quadrature_exact_for_resolved_modes() {
        let n = 16;
        let g = grid(n);
        for k in 1..(n / 2) as i32 {
            let c = Field::from_fn(&g, |x| (2.0 * PI * k as f64 * x).cos()).mean();
            let s = Field::from_fn(&g, |x| (2.0 * PI * k as f64 * x).sin()).mean();
            assert!(c.abs() < 1e-15 && s.abs() < 1e-15, "k = {k}");
        }
    }

    #[test]
    fn dealiased_product_removes_aliasing() {
        // sin(2π·5x)² on 16 nodes: the mode-10 part aliases onto mode 6
        // without padding.
        let g = grid(16);
        let s = Field::from_fn(&g, |x| (10.0 * PI * x).sin());
        let plain = s.product(&s, Aliasing::None);
        let padded = s.product(&s, Aliasing::TwoThirds);
        assert!((plain.mean() - 0.5).abs() < 1e-14);
        assert!((padded.mean() - 0.5).abs() < 1e-14);
        // The padded product keeps only the mean (mode 10 is outside the band).
        assert!((&padded - &Field::constant(&g, 0.5)).sup_norm() < 1e-13);
        assert!((&plain - &Field::constant(&g, 0.5)).sup_norm() > 0.4);
    }

    #[test]
    fn interpolant_matches_trig_polynomial() {
        let g = grid(16);
        let f = |x: f64| 1.0 + (2.0 * PI * x).sin() - 0.3 * (6.0 * PI * x).cos();
        let df = |x: f64| 2.0 * PI * (2.0 * PI * x).cos() + 1.8 * PI * (6.0 * PI * x).sin();
        let p = Field::from_fn(&g, f).interpolant();
        for x in [0.0, 0.013, 0.31, 0.77, 0.999] {
            let (v, d) = p.eval_with_deriv(x);
            assert_abs_diff_eq!(v, f(x), epsilon = 1e-13);
            assert_abs_diff_eq!(d, df(x), epsilon = 1e-12);
        }
    }

    fn band_limited(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        let kmax = n / 2 - 1;
        (
            prop::collection::vec(-1.0..1.0f64, kmax + 1),
            prop::collection::vec(-1.0..1.0f64, kmax + 1),
        )
    }

    fn synth(g: &PeriodicGrid, a: &[f64], b: &[f64]) -> Field {
        Field::from_fn(g, |x| {
            a.iter()
                .zip(b)
                .enumerate()
                .map(|(k, (ca, cb))| {
                    let t = 2.0 * PI * k as f64 * x;
                    ca * t.cos() + if k == 0 { 0.0 } else { cb * t.sin() }
                })
                .sum()
        })
    }

    proptest! {
        #[test]
        fn derivative_has_zero_mean(vals in prop::collection::vec(-10.0..10.0f64, 32)) {
            let f = Field::new(&grid(32), vals).unwrap();
            prop_assert!(f.deriv().mean().abs() < 1e-12);
        }

        #[test]
        fn deriv_inverts_cumint((a, b) in band_limited(32)) {
            let g = grid(32);
            // the ramp of a nonzero mean is not periodic, so check mean-zero data
            let f = synth(&g, &a, &b);
            let centered = f.map(|v| v - f.mean());
            let back = centered.cumint().deriv();
            prop_assert!((&back - &centered).sup_norm() < 1e-12);
        }

        #[test]
        fn parseval((a, b) in band_limited(64)) {
            let g = grid(64);
            let f = synth(&g, &a, &b);
            let energy: f64 = f.coefficients().iter().map(|c| c.norm_sqr()).sum();
            let direct = f.l2_norm().powi(2);
            prop_assert!((energy - direct).abs() <= 1e-12 * direct.max(1e-300));
        }
    }
}
