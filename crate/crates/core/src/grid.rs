//! Uniform periodic grids, sampled fields and their discrete spectra.

use crate::error::{Error, Result};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Periodic grid on `[-L, L)` with `n` points, `n` a power of two ≥ 16.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Grid {
    n: usize,
    half_length: f64,
    spacing: f64,
}

impl Grid {
    pub fn new(n: usize, half_length: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Validation(format!(
                "n must be a power of two >= 16, got {n}"
            )));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::Validation(format!(
                "half_length must be positive and finite, got {half_length}"
            )));
        }
        let spacing = 2.0 * half_length / n as f64;
        debug_assert_eq!(spacing * n as f64, 2.0 * half_length);
        Ok(Grid {
            n,
            half_length,
            spacing,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `x_j = -L + j h`.
    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Signed integer wavenumber stored at FFT index `idx`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        if idx <= self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// Physical frequency `ξ_k = π k / L` at FFT index `idx`.
    pub fn frequency(&self, idx: usize) -> f64 {
        PI * self.wavenumber(idx) as f64 / self.half_length
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        idx == self.n / 2
    }

    /// Same physical grid up to `rel` relative tolerance in its parameters.
    pub fn matches(&self, other: &Grid, rel: f64) -> bool {
        self.n == other.n && (self.half_length - other.half_length).abs() <= rel * self.half_length
    }
}

/// Real samples on a [`Grid`]; always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "sample {j} at x = {} is {}",
                grid.x(j),
                values[j]
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.n()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Field {
            grid,
            values: vec![c; grid.n()],
        }
    }

    /// Sample `f` at the grid points.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Field::new(grid, grid.points().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `Σ v_j h`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.grid.n() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("lincomb on different grids".into()));
        }
        Field::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Mirror image `x ↦ -x`; the grid point `-L` maps onto itself.
    pub fn mirrored(&self) -> Field {
        let n = self.grid.n();
        let values = (0..n).map(|j| self.values[(n - j) % n]).collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Field { grid, values }
    }
}

/// Discrete Fourier coefficients of a real [`Field`] in FFT ordering.
///
/// `coeffs[k] = Σ_j f_j e^{-2πi jk/n}` (no normalisation; the inverse divides
/// by `n`). The shift of the grid origin to `-L` only contributes a phase
/// that cancels in every multiplier.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<FftPair> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<FftPair>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(FftPair {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// In-place unnormalised forward transform of length `buf.len()`.
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    plans(buf.len()).forward.process(buf);
}

/// In-place unnormalised inverse transform; the caller divides by `n`.
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    plans(buf.len()).inverse.process(buf);
}

impl Spectrum {
    pub fn from_field(f: &Field) -> Spectrum {
        let mut coeffs: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plans(f.grid.n()).forward.process(&mut coeffs);
        Spectrum {
            grid: f.grid,
            coeffs,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Multiply coefficient `idx` by `m(idx)`.
    pub fn apply(&mut self, m: impl Fn(usize) -> Complex64) {
        for (idx, c) in self.coeffs.iter_mut().enumerate() {
            *c *= m(idx);
        }
    }

    /// Multiply pointwise by a precomputed table.
    pub fn apply_table(&mut self, table: &[Complex64]) {
        debug_assert_eq!(table.len(), self.coeffs.len());
        for (c, m) in self.coeffs.iter_mut().zip(table) {
            *c *= m;
        }
    }

    /// Multiply pointwise by a real table.
    pub fn apply_real_table(&mut self, table: &[f64]) {
        debug_assert_eq!(table.len(), self.coeffs.len());
        for (c, m) in self.coeffs.iter_mut().zip(table) {
            *c *= m;
        }
    }

    /// Inverse transform, keeping the real part.
    pub fn to_field(&self) -> Field {
        let mut buf = self.coeffs.clone();
        plans(self.grid.n()).inverse.process(&mut buf);
        let inv_n = 1.0 / self.grid.n() as f64;
        let values = buf.iter().map(|c| c.re * inv_n).collect();
        Field::from_values_unchecked(self.grid, values)
    }

    /// Largest violation of `c_{-k} = conj(c_k)`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n = self.grid.n();
        (0..n)
            .map(|k| (self.coeffs[k] - self.coeffs[(n - k) % n].conj()).norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(8, 1.0).is_err());
        assert!(Grid::new(48, 1.0).is_err());
        assert!(Grid::new(64, 0.0).is_err());
        assert!(Grid::new(64, f64::INFINITY).is_err());
        let g = Grid::new(64, 3.0).unwrap();
        assert_eq!(g.spacing() * 64.0, 6.0);
        assert_eq!(g.x(0), -3.0);
        assert_eq!(g.x(32), 0.0);
        assert_eq!(g.wavenumber(33), -31);
        assert_eq!(g.wavenumber(32), 32);
    }

    #[test]
    fn field_rejects_non_finite_and_wrong_length() {
        let g = Grid::new(16, 1.0).unwrap();
        assert!(matches!(
            Field::new(g, vec![0.0; 15]),
            Err(Error::GridMismatch(_))
        ));
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(matches!(Field::new(g, v), Err(Error::NonFinite(_))));
    }

    #[test]
    fn spectrum_round_trip_and_symmetry() {
        let g = Grid::new(64, 2.0).unwrap();
        let f = Field::from_fn(g, |x| (x * 1.3).sin() + 0.2 * x.cos().powi(3)).unwrap();
        let s = Spectrum::from_field(&f);
        assert!(s.conjugate_symmetry_defect() < 1e-12);
        let back = s.to_field();
        assert!(back.max_abs_diff(&f) < 1e-14);
    }

    #[test]
    fn mirror_is_involution() {
        let g = Grid::new(32, 1.0).unwrap();
        let f = Field::from_fn(g, |x| x * x * x + 0.5).unwrap();
        assert_eq!(f.mirrored().mirrored(), f);
        let m = f.mirrored();
        for j in 1..32 {
            assert!((m.values()[j] - (-(g.x(j).powi(3)) + 0.5)).abs() < 1e-14);
        }
    }
}
