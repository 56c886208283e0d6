//! Nonlocal operators on a periodic grid.
//!
//! Fourier multipliers use the convention `(Λ^α w)^ = |ξ|^α ŵ` and
//! `(H w)^ = i sgn(ξ) ŵ`. Every multiplier sends the mean to zero. Odd
//! multipliers (derivative, Hilbert, Riesz flux) also zero the Nyquist mode,
//! whose sine partner vanishes on the grid.

mod levy;

pub use levy::{
    calibrate_levy_constant, levy_laplacian, levy_laplacian_with, LevyOperator, DEFAULT_INNER_CELLS,
};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Spectrum};
use rustfft::num_complex::Complex64;

fn check_alpha(alpha: f64, upper_inclusive: bool) -> Result<()> {
    let ok = alpha > 0.0 && (alpha < 2.0 || (upper_inclusive && alpha == 2.0));
    if ok {
        Ok(())
    } else if upper_inclusive {
        Err(Error::Domain(format!(
            "alpha must lie in (0,2], got {alpha}"
        )))
    } else {
        Err(Error::Domain(format!(
            "alpha must lie in (0,2), got {alpha}"
        )))
    }
}

fn apply_real(f: &Field, m: impl Fn(usize) -> f64) -> Field {
    let mut s = Spectrum::from_field(f);
    s.apply(|idx| Complex64::new(m(idx), 0.0));
    s.to_field()
}

/// `|ξ|^α` table, zero at `ξ = 0`.
pub fn fractional_table(grid: &Grid, alpha: f64) -> Vec<f64> {
    (0..grid.n())
        .map(|idx| {
            let xi = grid.frequency(idx).abs();
            if xi == 0.0 {
                0.0
            } else {
                xi.powf(alpha)
            }
        })
        .collect()
}

/// `i sgn(ξ) |ξ|^{α-1}` table for the Riesz flux `Λ^{α-1} H`.
pub fn riesz_table(grid: &Grid, alpha: f64) -> Vec<Complex64> {
    (0..grid.n())
        .map(|idx| {
            let xi = grid.frequency(idx);
            if xi == 0.0 || grid.is_nyquist(idx) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, xi.signum() * xi.abs().powf(alpha - 1.0))
            }
        })
        .collect()
}

/// `i ξ` table for the spectral derivative.
pub fn derivative_table(grid: &Grid) -> Vec<Complex64> {
    (0..grid.n())
        .map(|idx| {
            if grid.is_nyquist(idx) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, grid.frequency(idx))
            }
        })
        .collect()
}

/// Two-thirds rule mask: keeps `|k| <= n/3`.
pub fn dealias_mask(grid: &Grid) -> Vec<f64> {
    let cutoff = (grid.n() / 3) as i64;
    (0..grid.n())
        .map(|idx| {
            if grid.wavenumber(idx).abs() <= cutoff {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// `exp(-ξ² τ)` table.
pub fn heat_table(grid: &Grid, tau: f64) -> Vec<f64> {
    (0..grid.n())
        .map(|idx| {
            let xi = grid.frequency(idx);
            (-xi * xi * tau).exp()
        })
        .collect()
}

/// Λ^α f with α ∈ (0, 2]; α = 2 gives `-f''`.
pub fn fractional_laplacian(f: &Field, alpha: f64) -> Result<Field> {
    check_alpha(alpha, true)?;
    let table = fractional_table(f.grid(), alpha);
    Ok(apply_real(f, |idx| table[idx]))
}

/// Hilbert transform, multiplier `i sgn(ξ)`.
pub fn hilbert(f: &Field) -> Field {
    let grid = *f.grid();
    let mut s = Spectrum::from_field(f);
    s.apply(|idx| {
        if grid.is_nyquist(idx) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, grid.frequency(idx).signum())
        }
    });
    s.to_field()
}

/// `Λ^{α-1} H f`, multiplier `i sgn(ξ) |ξ|^{α-1}`, α ∈ (0, 2).
///
/// `-∂ₓ riesz_flux(f)` equals `Λ^α f` on every mode except Nyquist.
pub fn riesz_flux(f: &Field, alpha: f64) -> Result<Field> {
    check_alpha(alpha, false)?;
    let mut s = Spectrum::from_field(f);
    s.apply_table(&riesz_table(f.grid(), alpha));
    Ok(s.to_field())
}

/// Spectral first derivative.
pub fn spectral_derivative(f: &Field) -> Field {
    let mut s = Spectrum::from_field(f);
    s.apply_table(&derivative_table(f.grid()));
    s.to_field()
}

/// Heat semigroup `e^{τ ∂²ₓ}`, i.e. convolution with the Gauss-Weierstrass
/// kernel of time τ.
pub fn heat_multiply(f: &Field, tau: f64) -> Result<Field> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("tau must be >= 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(f.clone());
    }
    let table = heat_table(f.grid(), tau);
    Ok(apply_real(f, |idx| table[idx]))
}

/// Zero the top third of the spectrum.
pub fn dealias(f: &Field) -> Field {
    let mut s = Spectrum::from_field(f);
    s.apply_real_table(&dealias_mask(f.grid()));
    s.to_field()
}

/// `‖Λ^{α/2} f‖₂² = Σ_k |ξ_k|^α |f̂_k|²` evaluated on the coefficients.
pub fn fractional_energy(f: &Field, alpha: f64) -> Result<f64> {
    check_alpha(alpha, true)?;
    let grid = f.grid();
    let s = Spectrum::from_field(f);
    let table = fractional_table(grid, alpha);
    let sum: f64 = s
        .coeffs()
        .iter()
        .zip(&table)
        .map(|(c, m)| m * c.norm_sqr())
        .sum();
    Ok(grid.spacing() * sum / grid.n() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{compute_constants, getoor_v};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(256, 4.0).unwrap()
    }

    /// Band-limited random field with modes |k| <= kmax.
    pub(crate) fn random_band_limited(grid: Grid, kmax: usize, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = grid.half_length();
        let terms: Vec<(f64, f64, f64)> = (1..=kmax)
            .map(|k| {
                (
                    k as f64,
                    rng.random_range(-1.0..1.0) / k as f64,
                    rng.random_range(-1.0..1.0) / k as f64,
                )
            })
            .collect();
        let c0 = rng.random_range(-0.5..0.5);
        Field::from_fn(grid, |x| {
            c0 + terms
                .iter()
                .map(|&(k, a, b)| a * (PI * k * x / l).cos() + b * (PI * k * x / l).sin())
                .sum::<f64>()
        })
        .unwrap()
    }

    // Direct O(n²) DFT multiplier, independent of the FFT path.
    fn dft_multiply(f: &Field, m: impl Fn(i64) -> Complex64) -> Vec<f64> {
        let g = f.grid();
        let n = g.n();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (idx, c) in coeffs.iter_mut().enumerate() {
            let k = g.wavenumber(idx);
            for (j, &v) in f.values().iter().enumerate() {
                let ph = -2.0 * PI * (idx * j) as f64 / n as f64;
                *c += v * Complex64::new(ph.cos(), ph.sin());
            }
            *c *= m(k);
        }
        (0..n)
            .map(|j| {
                let mut s = Complex64::new(0.0, 0.0);
                for (idx, c) in coeffs.iter().enumerate() {
                    let ph = 2.0 * PI * (idx * j) as f64 / n as f64;
                    s += c * Complex64::new(ph.cos(), ph.sin());
                }
                s.re / n as f64
            })
            .collect()
    }

    #[test]
    fn fractional_laplacian_agrees_with_direct_dft() {
        let g = Grid::new(64, 3.0).unwrap();
        let f = random_band_limited(g, 20, 3);
        let alpha = 0.7;
        let fast = fractional_laplacian(&f, alpha).unwrap();
        let slow = dft_multiply(&f, |k| {
            let xi = (PI * k as f64 / 3.0).abs();
            Complex64::new(if k == 0 { 0.0 } else { xi.powf(alpha) }, 0.0)
        });
        for (a, b) in fast.values().iter().zip(&slow) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let g = grid();
        let c = Field::constant(g, 2.5);
        for alpha in [0.3, 1.0, 1.9] {
            assert!(fractional_laplacian(&c, alpha).unwrap().sup_norm() < 1e-13);
            assert!(riesz_flux(&c, alpha).unwrap().sup_norm() < 1e-13);
        }
        assert!(hilbert(&c).sup_norm() < 1e-13);
    }

    #[test]
    fn trigonometric_eigenfunctions() {
        let g = grid();
        let l = g.half_length();
        for k in [1.0, 3.0, 17.0] {
            let w = PI * k / l;
            let c = Field::from_fn(g, |x| (w * x).cos()).unwrap();
            let s = Field::from_fn(g, |x| (w * x).sin()).unwrap();
            for alpha in [0.5, 1.0, 1.5, 2.0] {
                let lap = fractional_laplacian(&c, alpha).unwrap();
                let want = c.map(|v| w.powf(alpha) * v).unwrap();
                assert!(lap.max_abs_diff(&want) < 1e-11 * w.powf(alpha).max(1.0));
            }
            assert!(hilbert(&c).max_abs_diff(&s.map(|v| -v).unwrap()) < 1e-12);
            assert!(hilbert(&s).max_abs_diff(&c) < 1e-12);
            let tau = 1.0;
            let heat = heat_multiply(&c, tau).unwrap();
            let want = c.map(|v| (-w * w * tau).exp() * v).unwrap();
            assert!(heat.max_abs_diff(&want) < 1e-13);
        }
    }

    #[test]
    fn alpha_two_is_minus_second_derivative() {
        let g = Grid::new(512, 8.0).unwrap();
        let f = Field::from_fn(g, |x| (-(x * x)).exp()).unwrap();
        let lap = fractional_laplacian(&f, 2.0).unwrap();
        let want = Field::from_fn(g, |x| -(4.0 * x * x - 2.0) * (-(x * x)).exp()).unwrap();
        assert!(lap.max_abs_diff(&want) < 1e-9);
    }

    #[test]
    fn domain_errors() {
        let f = Field::zeros(grid());
        assert!(fractional_laplacian(&f, 0.0).is_err());
        assert!(fractional_laplacian(&f, 2.1).is_err());
        assert!(riesz_flux(&f, 2.0).is_err());
        assert!(heat_multiply(&f, -1e-3).is_err());
    }

    #[test]
    fn riesz_multiplier_on_single_mode() {
        let g = grid();
        let l = g.half_length();
        let alpha = 0.6;
        for k in [1.0, 5.0] {
            let w = PI * k / l;
            let c = Field::from_fn(g, |x| (w * x).cos()).unwrap();
            // i sgn(k) w^{α-1} e^{iwx} + c.c. acting on cos gives -w^{α-1} sin
            let want = Field::from_fn(g, |x| -w.powf(alpha - 1.0) * (w * x).sin()).unwrap();
            assert!(riesz_flux(&c, alpha).unwrap().max_abs_diff(&want) < 1e-12);
        }
    }

    #[test]
    fn flux_identity_reproduces_fractional_laplacian() {
        let g = Grid::new(512, 6.0).unwrap();
        for seed in 0..10 {
            let f = random_band_limited(g, 60, seed);
            for alpha in [0.3, 0.5, 1.0, 1.5, 1.9] {
                let lhs = fractional_laplacian(&f, alpha).unwrap();
                let rhs = spectral_derivative(&riesz_flux(&f, alpha).unwrap());
                let sum = lhs.lincomb(1.0, &rhs, 1.0).unwrap();
                assert!(sum.sup_norm() <= 1e-10 * f.sup_norm());
            }
        }
    }

    #[test]
    fn hilbert_twice_is_minus_identity_on_mean_free_part() {
        let g = grid();
        let f = random_band_limited(g, 40, 11);
        let hh = hilbert(&hilbert(&f));
        let m = f.mean();
        let want = f.map(|v| -(v - m)).unwrap();
        assert!(hh.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn heat_preserves_mean_and_identity_at_zero() {
        let g = grid();
        let f = random_band_limited(g, 50, 5);
        assert_eq!(heat_multiply(&f, 0.0).unwrap(), f);
        for tau in [1e-3, 0.1, 10.0] {
            let h = heat_multiply(&f, tau).unwrap();
            assert!((h.mean() - f.mean()).abs() < 1e-14);
        }
    }

    #[test]
    fn parity_is_preserved() {
        let g = Grid::new(512, 8.0).unwrap();
        let even = Field::from_fn(g, |x| (-(x * x)).exp() * (3.0 * x).cos()).unwrap();
        let odd = Field::from_fn(g, |x| x * (-(x * x)).exp()).unwrap();
        for alpha in [0.4, 1.0, 1.6] {
            let le = fractional_laplacian(&even, alpha).unwrap();
            let lo = fractional_laplacian(&odd, alpha).unwrap();
            let n = g.n();
            for j in 1..n {
                assert!((le.values()[j] - le.values()[n - j]).abs() < 1e-12);
                assert!((lo.values()[j] + lo.values()[n - j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parseval_consistency() {
        let g = grid();
        for seed in 0..5 {
            let f = random_band_limited(g, 80, seed);
            for alpha in [0.5, 1.0, 1.5] {
                let half = fractional_laplacian(&f, alpha / 2.0).unwrap();
                let direct: f64 = half.values().iter().map(|v| v * v).sum::<f64>() * g.spacing();
                let spectral = fractional_energy(&f, alpha).unwrap();
                assert!((direct - spectral).abs() <= 1e-12 * spectral);
            }
        }
    }

    #[test]
    fn getoor_identity_interior() {
        // Λ^α v = 1 on |x| < 1, up to periodisation at L = 8.
        let g = Grid::new(4096, 8.0).unwrap();
        for alpha in [1.0, 1.5] {
            let p = compute_constants(alpha).unwrap();
            let v = Field::from_fn(g, |x| getoor_v(x, &p)).unwrap();
            let lap = fractional_laplacian(&v, alpha).unwrap();
            let dev = (0..g.n())
                .filter(|&j| g.x(j).abs() <= 0.8)
                .map(|j| (lap.values()[j] - 1.0).abs())
                .fold(0.0, f64::max);
            assert!(dev <= 1e-2, "alpha={alpha} dev={dev}");
        }
    }

    #[test]
    fn periodisation_error_halves_when_domain_doubles() {
        // Zero-mode convention: the whole-line discrepancy decays with L.
        let alpha = 1.0;
        let p = compute_constants(alpha).unwrap();
        let centre_error = |l: f64, n: usize| {
            let g = Grid::new(n, l).unwrap();
            let v = Field::from_fn(g, |x| getoor_v(x, &p)).unwrap();
            let lap = fractional_laplacian(&v, alpha).unwrap();
            (lap.values()[n / 2] - 1.0).abs()
        };
        let e1 = centre_error(8.0, 4096);
        let e2 = centre_error(16.0, 8192);
        assert!(e2 <= 0.5 * e1, "{e1} -> {e2}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn multipliers_are_linear(seed_a in 0u64..1000, seed_b in 0u64..1000,
                                  a in -3.0f64..3.0, b in -3.0f64..3.0,
                                  alpha in 0.1f64..1.9) {
            let g = Grid::new(128, 2.0).unwrap();
            let f = random_band_limited(g, 30, seed_a);
            let h = random_band_limited(g, 30, seed_b);
            let comb = f.lincomb(a, &h, b).unwrap();
            type Op = Box<dyn Fn(&Field) -> Field>;
            let ops: Vec<Op> = vec![
                Box::new(move |x| fractional_laplacian(x, alpha).unwrap()),
                Box::new(hilbert),
                Box::new(move |x| riesz_flux(x, alpha).unwrap()),
                Box::new(|x| heat_multiply(x, 0.05).unwrap()),
            ];
            for op in &ops {
                let lhs = op(&comb);
                let rhs = op(&f).lincomb(a, &op(&h), b).unwrap();
                let scale = 1.0 + lhs.sup_norm();
                prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * scale);
            }
        }

        #[test]
        fn kato_positivity(seed in 0u64..10_000, alpha in 0.2f64..1.9) {
            let g = Grid::new(512, 8.0).unwrap();
            let f = random_band_limited(g, 24, seed);
            let lap = fractional_laplacian(&f, alpha).unwrap();
            let s: f64 = lap.values().iter().zip(f.values())
                .map(|(l, v)| l * v.signum()).sum::<f64>() * g.spacing();
            prop_assert!(s >= -1e-8 * f.sup_norm());
        }
    }
}
