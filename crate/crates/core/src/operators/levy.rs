//! Real-space quadrature of the Lévy-Khintchine form
//!
//! `Λ^α f(x) = -C ∫_0^∞ (f(x+z) + f(x-z) - 2f(x)) z^{-1-α} dz`
//!
//! on a periodic grid. The kernel is periodised by summing images explicitly
//! plus a midpoint tail, the outer part `[δ, L]` uses the trapezoid rule and
//! the inner part `[0, δ]` a second-difference Taylor term. The prefactor `C`
//! is fitted against the spectral operator on a Gaussian.

use super::{check_alpha, fractional_laplacian};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::par::{fill_indexed, ExecMode};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Default inner cut-off in grid cells.
pub const DEFAULT_INNER_CELLS: usize = 4;

const IMAGE_TERMS: usize = 32;
const CALIBRATION_MIN_HALF_LENGTH: f64 = 8.0;
const CALIBRATION_MIN_POINTS: usize = 1024;
const CALIBRATION_MAX_RESIDUAL: f64 = 0.05;

/// Sum over periodic images `k = ±1, ±2, ...` of `|z + 2Lk|^{-1-α}`.
fn image_kernel(z: f64, alpha: f64, l: f64) -> f64 {
    let mut s = 0.0;
    for k in 1..=IMAGE_TERMS {
        let p = 2.0 * l * k as f64;
        s += (p + z).powf(-1.0 - alpha) + (p - z).powf(-1.0 - alpha);
    }
    let p = 2.0 * l * (IMAGE_TERMS as f64 + 0.5);
    s + ((p + z).powf(-alpha) + (p - z).powf(-alpha)) / (2.0 * l * alpha)
}

/// Precomputed quadrature weights for one `(α, grid, δ)`.
#[derive(Debug, Clone)]
pub struct LevyOperator {
    grid: Grid,
    alpha: f64,
    inner_cells: usize,
    weights: Vec<f64>,
    weight_sum: f64,
    inner_coef: f64,
}

impl LevyOperator {
    /// `inner_cells` is δ/h; it must be at least 1 and below n/2.
    pub fn new(grid: Grid, alpha: f64, inner_cells: usize) -> Result<Self> {
        check_alpha(alpha, false)?;
        let n = grid.n();
        if inner_cells == 0 || inner_cells >= n / 2 {
            return Err(Error::Domain(format!(
                "inner cut-off must be between 1 and {} cells, got {inner_cells}",
                n / 2 - 1
            )));
        }
        let h = grid.spacing();
        let l = grid.half_length();
        let half = n / 2;
        let mut weights: Vec<f64> = (inner_cells..=half)
            .map(|m| {
                let z = m as f64 * h;
                h * (z.powf(-1.0 - alpha) + image_kernel(z, alpha, l))
            })
            .collect();
        weights[0] *= 0.5;
        *weights.last_mut().unwrap() *= 0.5;
        let weight_sum = weights.iter().sum();
        let delta = inner_cells as f64 * h;
        let inner_coef = delta.powf(2.0 - alpha) / (2.0 - alpha)
            + image_kernel(0.0, alpha, l) * delta.powi(3) / 3.0
            // Euler-Maclaurin endpoint correction at z = δ
            + (1.0 - alpha) * h * h * delta.powf(-alpha) / 12.0;
        Ok(LevyOperator {
            grid,
            alpha,
            inner_cells,
            weights,
            weight_sum,
            inner_coef,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn inner_cells(&self) -> usize {
        self.inner_cells
    }

    /// Uncalibrated quadrature, approximately `Λ^α f / C`.
    pub fn apply_raw(&self, f: &Field, mode: ExecMode) -> Result<Vec<f64>> {
        if !f.grid().matches(&self.grid, 1e-12) {
            return Err(Error::GridMismatch(
                "field grid differs from operator grid".into(),
            ));
        }
        let n = self.grid.n();
        let h2 = self.grid.spacing().powi(2);
        let v = f.values();
        let mut ext = Vec::with_capacity(2 * n);
        ext.extend_from_slice(v);
        ext.extend_from_slice(v);
        let m0 = self.inner_cells;
        let mut out = vec![0.0; n];
        fill_indexed(&mut out, mode, |j| {
            let mut acc = 0.0;
            for (i, w) in self.weights.iter().enumerate() {
                let m = m0 + i;
                acc += w * (ext[j + m] + ext[j + n - m]);
            }
            acc -= 2.0 * v[j] * self.weight_sum;
            let fpp = (ext[j + 1] - 2.0 * v[j] + ext[j + n - 1]) / h2;
            -(acc + self.inner_coef * fpp)
        });
        Ok(out)
    }

    /// Calibrated `Λ^α f`.
    pub fn apply(&self, f: &Field, mode: ExecMode) -> Result<Field> {
        let c = calibrate_levy_constant_cells(self.alpha, &self.grid, self.inner_cells)?;
        let raw = self.apply_raw(f, mode)?;
        Field::new(self.grid, raw.into_iter().map(|q| c * q).collect())
    }
}

type CacheKey = (u64, usize, u64, usize);

fn calibration_cache() -> &'static Mutex<HashMap<CacheKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Least-squares prefactor matching the quadrature to the spectral operator
/// on `exp(-x²)`, with the default inner cut-off.
pub fn calibrate_levy_constant(alpha: f64, grid: &Grid) -> Result<f64> {
    calibrate_levy_constant_cells(alpha, grid, DEFAULT_INNER_CELLS)
}

fn calibrate_levy_constant_cells(alpha: f64, grid: &Grid, cells: usize) -> Result<f64> {
    check_alpha(alpha, false)?;
    let key = (
        alpha.to_bits(),
        grid.n(),
        grid.half_length().to_bits(),
        cells,
    );
    if let Some(c) = calibration_cache().lock().unwrap().get(&key) {
        return Ok(*c);
    }
    if grid.half_length() < CALIBRATION_MIN_HALF_LENGTH || grid.n() < CALIBRATION_MIN_POINTS {
        return Err(Error::Calibration(format!(
            "calibration needs L >= {CALIBRATION_MIN_HALF_LENGTH} and n >= {CALIBRATION_MIN_POINTS}, got L = {}, n = {}",
            grid.half_length(),
            grid.n()
        )));
    }
    let op = LevyOperator::new(*grid, alpha, cells)?;
    let g = Field::from_fn(*grid, |x| (-x * x).exp())?;
    let q = op.apply_raw(&g, ExecMode::default())?;
    let s = fractional_laplacian(&g, alpha)?;
    let s = s.values();
    let qq: f64 = q.iter().map(|a| a * a).sum();
    let qs: f64 = q.iter().zip(s).map(|(a, b)| a * b).sum();
    let c = qs / qq;
    let resid = q
        .iter()
        .zip(s)
        .map(|(a, b)| (c * a - b).powi(2))
        .sum::<f64>()
        .sqrt()
        / s.iter().map(|b| b * b).sum::<f64>().sqrt();
    if !c.is_finite() || resid > CALIBRATION_MAX_RESIDUAL {
        return Err(Error::Calibration(format!(
            "relative residual {resid:.3e} exceeds {CALIBRATION_MAX_RESIDUAL}"
        )));
    }
    calibration_cache().lock().unwrap().insert(key, c);
    Ok(c)
}

/// `Λ^α f` by real-space quadrature; `inner_cut` is δ in units of x.
pub fn levy_laplacian(f: &Field, alpha: f64, inner_cut: f64) -> Result<Field> {
    levy_laplacian_with(f, alpha, inner_cut, ExecMode::default())
}

pub fn levy_laplacian_with(f: &Field, alpha: f64, inner_cut: f64, mode: ExecMode) -> Result<Field> {
    let h = f.grid().spacing();
    if !(inner_cut.is_finite() && inner_cut >= h * (1.0 - 1e-9)) {
        return Err(Error::Domain(format!(
            "inner_cut must be at least one grid spacing ({h}), got {inner_cut}"
        )));
    }
    let cells = (inner_cut / h).round() as usize;
    LevyOperator::new(*f.grid(), alpha, cells)?.apply(f, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{compute_constants, getoor_v};
    use statrs::function::gamma::gamma;
    use std::f64::consts::PI;

    fn literature_constant(a: f64) -> f64 {
        a * 2f64.powf(a - 1.0) * gamma((1.0 + a) / 2.0) / (PI.sqrt() * gamma(1.0 - a / 2.0))
    }

    fn grid() -> Grid {
        Grid::new(4096, 8.0).unwrap()
    }

    #[test]
    fn image_kernel_tail_matches_long_sum() {
        let (a, l, z) = (0.5, 8.0, 3.0);
        let mut direct = 0.0;
        for k in 1..200_000 {
            let p = 2.0 * l * k as f64;
            direct += (p + z).powf(-1.0 - a) + (p - z).powf(-1.0 - a);
        }
        // remainder beyond 200k images, integral estimate
        let p = 2.0 * l * 199_999.5;
        direct += ((p + z).powf(-a) + (p - z).powf(-a)) / (2.0 * l * a);
        assert!((image_kernel(z, a, l) - direct).abs() < 1e-5 * direct);
    }

    #[test]
    fn calibrated_constant_matches_closed_form() {
        for a in [0.25, 0.5, 1.0, 1.5, 1.75] {
            let c = calibrate_levy_constant(a, &grid()).unwrap();
            let lit = literature_constant(a);
            assert!((c - lit).abs() < 1e-4 * lit, "alpha={a}: {c} vs {lit}");
        }
    }

    #[test]
    fn calibration_is_resolution_stable() {
        let a = 0.75;
        let c1 = calibrate_levy_constant(a, &Grid::new(2048, 8.0).unwrap()).unwrap();
        let c2 = calibrate_levy_constant(a, &Grid::new(4096, 8.0).unwrap()).unwrap();
        assert!((c1 - c2).abs() < 1e-5 * c1);
    }

    #[test]
    fn calibration_preconditions() {
        assert!(matches!(
            calibrate_levy_constant(1.0, &Grid::new(512, 8.0).unwrap()),
            Err(Error::Calibration(_))
        ));
        assert!(matches!(
            calibrate_levy_constant(1.0, &Grid::new(4096, 4.0).unwrap()),
            Err(Error::Calibration(_))
        ));
        assert!(calibrate_levy_constant(2.0, &grid()).is_err());
    }

    #[test]
    fn cosine_modes_reproduced() {
        let g = grid();
        let l = g.half_length();
        for a in [0.5, 1.0, 1.5] {
            let op = LevyOperator::new(g, a, DEFAULT_INNER_CELLS).unwrap();
            for k in 1..=8 {
                let w = PI * k as f64 / l;
                let f = Field::from_fn(g, |x| (w * x).cos()).unwrap();
                let got = op.apply(&f, ExecMode::default()).unwrap();
                let want = f.map(|v| w.powf(a) * v).unwrap();
                assert!(got.max_abs_diff(&want) < 1e-4 * w.powf(a), "a={a} k={k}");
            }
        }
    }

    #[test]
    fn sign_matches_spectral_operator() {
        let g = grid();
        let f = Field::from_fn(g, |x| (-x * x).exp()).unwrap();
        let lev = levy_laplacian(&f, 1.0, 4.0 * g.spacing()).unwrap();
        // peak of a bump: Λ^α f > 0
        assert!(lev.values()[g.n() / 2] > 0.0);
        let spec = fractional_laplacian(&f, 1.0).unwrap();
        assert!(lev.max_abs_diff(&spec) < 1e-3 * spec.sup_norm());
    }

    #[test]
    fn gaussian_against_spectral_on_wide_domain() {
        let g = Grid::new(4096, 16.0).unwrap();
        let f = Field::from_fn(g, |x| (-x * x).exp()).unwrap();
        let lev = levy_laplacian(&f, 1.0, 4.0 * g.spacing()).unwrap();
        let spec = fractional_laplacian(&f, 1.0).unwrap();
        let err = (0..g.n())
            .filter(|&j| g.x(j).abs() <= 4.0)
            .map(|j| (lev.values()[j] - spec.values()[j]).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-3, "{err}");
        let c = levy_laplacian(&Field::constant(g, 2.0), 1.0, 4.0 * g.spacing()).unwrap();
        assert!(c.sup_norm() < 1e-10);
    }

    #[test]
    fn getoor_identity_by_quadrature() {
        let g = grid();
        let a = 1.5;
        let p = compute_constants(a).unwrap();
        let v = Field::from_fn(g, |x| getoor_v(x, &p)).unwrap();
        let lev = levy_laplacian(&v, a, 4.0 * g.spacing()).unwrap();
        let dev = (0..g.n())
            .filter(|&j| g.x(j).abs() <= 0.8)
            .map(|j| (lev.values()[j] - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-2, "{dev}");
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let g = Grid::new(1024, 8.0).unwrap();
        let op = LevyOperator::new(g, 0.8, 4).unwrap();
        let f = Field::from_fn(g, |x| (-x * x).exp() * (2.0 * x).sin()).unwrap();
        let a = op.apply_raw(&f, ExecMode::Sequential).unwrap();
        let b = op.apply_raw(&f, ExecMode::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_inner_cut_rejected() {
        let g = grid();
        let f = Field::zeros(g);
        assert!(levy_laplacian(&f, 1.0, 0.1 * g.spacing()).is_err());
        assert!(levy_laplacian(&f, 1.0, f64::NAN).is_err());
        assert!(LevyOperator::new(g, 1.0, g.n() / 2).is_err());
    }
}
