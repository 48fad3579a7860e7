//! Periodic grids, the normalized discrete Fourier pair and Fourier multipliers.
//!
//! Coefficients follow the convention
//!
//! ```text
//! c_m = (1/N) * sum_j u_j * exp(-i k_m x_j),    u_j = sum_m c_m * exp(i k_m x_j)
//! ```
//!
//! with angular wavenumbers `k_m = 2 pi m / (b - a)` stored in the transform-native
//! order `m = 0, 1, ..., N/2 - 1, -N/2, ..., -1`. Integrals are rectangle-rule sums
//! `h * sum_j`, which by Parseval equal `(b - a) * sum_m |c_m|^2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic mesh on `[a, b)` together with its wavenumber table and FFT plans.
///
/// Immutable after construction; share it behind an [`Arc`].
pub struct Grid {
    a: f64,
    b: f64,
    n: usize,
    h: f64,
    x: Vec<f64>,
    k: Vec<f64>,
    // exp(-i k_m a): turns the plain FFT into the x_j-referenced transform.
    shift: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("n", &self.n)
            .field("h", &self.h)
            .finish()
    }
}

impl Grid {
    /// Builds the grid `x_j = a + j h`, `h = (b - a) / n`.
    ///
    /// `n` must be even, a power of two and at least 8.
    pub fn new(a: f64, b: f64, n: usize) -> Result<Arc<Grid>> {
        if n % 2 != 0 {
            return Err(Error::NonEvenN(n));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::BadGridSize(n));
        }
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::DegenerateInterval { a, b });
        }
        let len = b - a;
        let h = len / n as f64;
        let x = (0..n).map(|j| a + j as f64 * h).collect();
        let k: Vec<f64> = (0..n)
            .map(|j| 2.0 * PI * mode_index(j, n) as f64 / len)
            .collect();
        let shift = k
            .iter()
            .map(|&kk| Complex64::from_polar(1.0, -kk * a))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Arc::new(Grid {
            a,
            b,
            n,
            h,
            x,
            k,
            shift,
            forward,
            inverse,
        }))
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Angular wavenumbers in transform-native order.
    pub fn k(&self) -> &[f64] {
        &self.k
    }

    /// Integer mode index `m` of storage slot `j`.
    pub fn mode(&self, j: usize) -> i64 {
        mode_index(j, self.n)
    }

    /// Storage slot of mode `m`, for `-N/2 <= m < N/2`.
    pub fn slot(&self, m: i64) -> usize {
        let n = self.n as i64;
        assert!(-n / 2 <= m && m < n / 2, "mode {m} out of range");
        m.rem_euclid(n) as usize
    }

    /// Index of the grid point closest to `x0`, wrapping periodically.
    pub fn nearest_index(&self, x0: f64) -> usize {
        let j = ((x0 - self.a) / self.h).round() as i64;
        j.rem_euclid(self.n as i64) as usize
    }

    /// Same interval and resolution.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n && self.a == other.a && self.b == other.b
    }

    /// `|k|^gamma`, with the zero mode set to 0 for every `gamma != 0` and to 1 for `gamma == 0`.
    pub fn fractional_multiplier(&self, gamma: f64) -> Vec<f64> {
        fractional_symbol(&self.k, gamma)
    }

    /// 2/3-rule mask: 1 for `|m| < N/3`, 0 otherwise.
    pub fn dealias_mask(&self) -> Vec<f64> {
        let cutoff = self.n as f64 / 3.0;
        (0..self.n)
            .map(|j| {
                if (self.mode(j).abs() as f64) < cutoff {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// In-place normalized forward FFT without the `exp(-i k a)` reference phase.
    ///
    /// Multipliers and modulus-only sums do not see that phase, so internal
    /// hot loops use this form.
    pub fn fft(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.forward.process(buf);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    /// In-place inverse of [`Grid::fft`].
    pub fn ifft(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inverse.process(buf);
    }

    /// Physical-space samples in `buf` are replaced by `F^{-1}[mult * F[buf]]`.
    pub fn apply_multiplier(&self, buf: &mut [Complex64], mult: &[f64]) {
        self.fft(buf);
        for (v, &m) in buf.iter_mut().zip(mult) {
            *v *= m;
        }
        self.ifft(buf);
    }

    /// `L * sum_m weight_m |c_m|^2` for raw coefficients `c`: the spectral quadrature
    /// of `int |W^{1/2} u|^2`.
    pub fn weighted_energy(&self, coeffs: &[Complex64], weight: &[f64]) -> f64 {
        self.length()
            * coeffs
                .iter()
                .zip(weight)
                .map(|(c, w)| w * c.norm_sqr())
                .sum::<f64>()
    }
}

fn mode_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

pub(crate) fn fractional_symbol(k: &[f64], gamma: f64) -> Vec<f64> {
    if gamma == 0.0 {
        return vec![1.0; k.len()];
    }
    k.iter()
        .map(|&kk| if kk == 0.0 { 0.0 } else { kk.abs().powf(gamma) })
        .collect()
}

/// Complex samples `u_j` on a [`Grid`].
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::invalid(
                "values",
                format!("length {} does not match grid size {}", values.len(), grid.n()),
            ));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.n()];
        ComplexField { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.x().iter().map(|&x| f(x)).collect();
        ComplexField { grid, values }
    }

    pub fn from_real_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFiniteInput)
        }
    }

    pub fn ensure_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::MismatchedGrids)
        }
    }

    /// `max_j |u_j|`.
    pub fn linf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max_j |u_j - v_j|`.
    pub fn linf_distance(&self, other: &ComplexField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Index of the largest modulus (first one on ties).
    pub fn argmax_modulus(&self) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (j, v) in self.values.iter().enumerate() {
            let m = v.norm_sqr();
            if m > best_val {
                best_val = m;
                best = j;
            }
        }
        best
    }

    pub fn scaled(&self, factor: Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// `out_j = u_{j - shift}` (periodic); a positive shift moves the profile right.
    pub fn circular_shift(&self, shift: i64) -> ComplexField {
        let n = self.values.len() as i64;
        let s = shift.rem_euclid(n) as usize;
        let mut values = self.values.clone();
        values.rotate_right(s);
        ComplexField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Rectangle-rule `h * sum_j |u_j|^p`.
    pub fn lp_power(&self, p: f64) -> f64 {
        let h = self.grid.h();
        let half = 0.5 * p;
        h * self
            .values
            .iter()
            .map(|v| {
                let m2 = v.norm_sqr();
                if half == 1.0 {
                    m2
                } else if half == 2.0 {
                    m2 * m2
                } else {
                    m2.powf(half)
                }
            })
            .sum::<f64>()
    }

    /// Normalized spectral coefficients referenced to the grid points `x_j`.
    pub fn forward(&self) -> Result<SpectralField> {
        self.ensure_finite()?;
        let mut coeffs = self.values.clone();
        self.grid.fft(&mut coeffs);
        for (c, s) in coeffs.iter_mut().zip(&self.grid.shift) {
            *c *= s;
        }
        Ok(SpectralField {
            grid: self.grid.clone(),
            coeffs,
        })
    }

    /// Raw normalized FFT coefficients (no reference phase).
    pub(crate) fn raw_coeffs(&self) -> Vec<Complex64> {
        let mut c = self.values.clone();
        self.grid.fft(&mut c);
        c
    }

    fn map_spectrum(&self, symbol: impl Fn(f64) -> Complex64) -> Result<ComplexField> {
        self.ensure_finite()?;
        let mut buf = self.values.clone();
        self.grid.fft(&mut buf);
        for (v, &k) in buf.iter_mut().zip(self.grid.k()) {
            *v *= symbol(k);
        }
        self.grid.ifft(&mut buf);
        Ok(ComplexField {
            grid: self.grid.clone(),
            values: buf,
        })
    }
}

/// Spectral coefficients `c_m` of a field, in transform-native order.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(Error::invalid(
                "coeffs",
                format!("length {} does not match grid size {}", coeffs.len(), grid.n()),
            ));
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of integer mode `m`.
    pub fn mode(&self, m: i64) -> Complex64 {
        self.coeffs[self.grid.slot(m)]
    }

    pub fn inverse(&self) -> Result<ComplexField> {
        if !self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let mut values: Vec<Complex64> = self
            .coeffs
            .iter()
            .zip(&self.grid.shift)
            .map(|(c, s)| c * s.conj())
            .collect();
        self.grid.ifft(&mut values);
        Ok(ComplexField {
            grid: self.grid.clone(),
            values,
        })
    }
}

/// `D^gamma f`: coefficients multiplied by `|k|^gamma` (zero mode per [`Grid::fractional_multiplier`]).
pub fn apply_d(f: &ComplexField, gamma: f64) -> Result<ComplexField> {
    if gamma == 0.0 {
        f.ensure_finite()?;
        return Ok(f.clone());
    }
    f.map_spectrum(|k| {
        if k == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(k.abs().powf(gamma), 0.0)
        }
    })
}

/// `f_x`: coefficients multiplied by `i k`.
pub fn spatial_derivative(f: &ComplexField) -> Result<ComplexField> {
    f.map_spectrum(|k| Complex64::new(0.0, k))
}
