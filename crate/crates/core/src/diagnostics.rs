//! Norms, power-law fits, support tracking and oracle errors.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::profile::{phi, AlphaParams};
use crate::solver::recover_u;

/// Relative threshold used for support tracking along runs.
///
/// Spectral ringing and the viscous tails of regularised runs sit well above
/// `1e-8` relative, so the default is `1e-3`.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-3;

/// `(Σ |v_j|^p h)^{1/p}`, or `max |v_j|` for `p = ∞`.
pub fn lp_norm(v: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p must be >= 1, got {p}")));
    }
    let vals = v.values();
    if p.is_infinite() {
        return Ok(v.sup_norm());
    }
    let h = v.grid().spacing();
    let s: f64 = if p == 1.0 {
        vals.iter().map(|x| x.abs()).sum()
    } else if p == 2.0 {
        vals.iter().map(|x| x * x).sum()
    } else if p == 4.0 {
        vals.iter().map(|x| (x * x) * (x * x)).sum()
    } else {
        vals.iter().map(|x| x.abs().powf(p)).sum()
    };
    Ok((s * h).powf(1.0 / p))
}

/// Width of the smallest interval holding every sample with
/// `|v_j| > threshold · ‖v‖∞`; zero for the zero field.
pub fn support_width(v: &Field, threshold: f64) -> f64 {
    let cut = threshold * v.sup_norm();
    if cut == 0.0 && v.sup_norm() == 0.0 {
        return 0.0;
    }
    let vals = v.values();
    let first = vals.iter().position(|x| x.abs() > cut);
    let last = vals.iter().rposition(|x| x.abs() > cut);
    match (first, last) {
        (Some(a), Some(b)) => (b - a) as f64 * v.grid().spacing(),
        _ => 0.0,
    }
}

/// Time-indexed run diagnostics.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct DiagnosticsSeries {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub l4: Vec<f64>,
    pub linf: Vec<f64>,
    pub support_width: Vec<f64>,
    /// Present when the run has an analytic oracle.
    pub oracle_sup_error: Option<Vec<f64>>,
}

impl DiagnosticsSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Append one record; times must increase strictly and the oracle column
    /// must be supplied always or never.
    pub fn push(&mut self, t: f64, v: &Field, oracle_error: Option<f64>) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::Validation(format!(
                    "diagnostic times must increase: {t} after {last}"
                )));
            }
        }
        match (&mut self.oracle_sup_error, oracle_error) {
            (Some(col), Some(e)) => col.push(e),
            (None, Some(e)) if self.times.is_empty() => self.oracle_sup_error = Some(vec![e]),
            (None, None) => {}
            _ => {
                return Err(Error::Validation(
                    "oracle error column must be filled for every record".into(),
                ))
            }
        }
        self.times.push(t);
        self.mass.push(v.integral());
        self.l1.push(lp_norm(v, 1.0)?);
        self.l2.push(lp_norm(v, 2.0)?);
        self.l4.push(lp_norm(v, 4.0)?);
        self.linf.push(v.sup_norm());
        self.support_width
            .push(support_width(v, DEFAULT_SUPPORT_THRESHOLD));
        Ok(())
    }

    /// Norm column for `p ∈ {1, 2, 4, ∞}`.
    pub fn norms(&self, p: f64) -> Result<&[f64]> {
        if p == 1.0 {
            Ok(&self.l1)
        } else if p == 2.0 {
            Ok(&self.l2)
        } else if p == 4.0 {
            Ok(&self.l4)
        } else if p.is_infinite() && p > 0.0 {
            Ok(&self.linf)
        } else {
            Err(Error::Domain(format!(
                "no norm column recorded for p = {p}"
            )))
        }
    }

    /// Largest relative deviation of the mass from its first value.
    pub fn mass_drift(&self) -> f64 {
        let Some(&m0) = self.mass.first() else {
            return 0.0;
        };
        let scale = m0.abs().max(f64::MIN_POSITIVE);
        self.mass
            .iter()
            .map(|m| (m - m0).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Largest increase of `col` between consecutive records relative to its
    /// first value.
    pub fn max_relative_increase(col: &[f64]) -> f64 {
        let Some(&c0) = col.first() else { return 0.0 };
        let scale = c0.abs().max(f64::MIN_POSITIVE);
        col.windows(2)
            .map(|w| (w[1] - w[0]) / scale)
            .fold(0.0, f64::max)
    }

    /// Largest excess of `col` over its first value, relative to it.
    pub fn max_excess_over_initial(col: &[f64]) -> f64 {
        let Some(&c0) = col.first() else { return 0.0 };
        let scale = c0.abs().max(f64::MIN_POSITIVE);
        col.iter().map(|c| (c - c0) / scale).fold(0.0, f64::max)
    }
}

/// Result of a log-log least-squares fit `y ≈ prefactor · t^slope`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Fit `log y` against `log t` over samples with `t_lo <= t <= t_hi`.
pub fn fit_power_law(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<PowerLawFit> {
    if times.len() != values.len() {
        return Err(Error::Validation(
            "times and values differ in length".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(&t, &y)| (t, y))
        .collect();
    if pts.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "{} samples in [{}, {}], need at least 8",
            pts.len(),
            window.0,
            window.1
        )));
    }
    if pts.iter().any(|&(t, y)| !(t > 0.0) || !(y > 0.0)) {
        return Err(Error::InsufficientData(
            "log fit needs positive times and values".into(),
        ));
    }
    let k = pts.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(t, y)| (t.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all samples share one time".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(PowerLawFit {
        slope,
        prefactor: intercept.exp(),
        r_squared,
        samples: pts.len(),
    })
}

/// Decay exponent of `‖v‖_p` over `window`.
pub fn fit_decay_exponent(
    series: &DiagnosticsSeries,
    p: f64,
    window: (f64, f64),
) -> Result<PowerLawFit> {
    fit_power_law(&series.times, series.norms(p)?, window)
}

/// `sup_{|x| <= margin·L} |u(x)/m − Φ_α(x / (m t)^{1/(α+1)})|` with `u`
/// recovered from `v` and `m` its mass.
///
/// Normalising by the mass maps any solution carrying mass `m` onto the
/// unit-mass profile, so box data of any area can be compared.
pub fn self_similar_error(
    v: &Field,
    t: f64,
    params: &AlphaParams,
    compact_margin: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    let mass = v.integral();
    if !(mass > 0.0) {
        return Err(Error::Domain(format!(
            "self-similar comparison needs positive mass, got {mass}"
        )));
    }
    let u = recover_u(v, 0.0).u;
    let g = v.grid();
    let r = (mass * t).powf(-params.spread_exponent());
    let lim = compact_margin * g.half_length();
    let err = (0..g.n())
        .filter(|&j| g.x(j).abs() <= lim)
        .map(|j| (u.values()[j] / mass - phi(g.x(j) * r, params)).abs())
        .fold(0.0, f64::max);
    Ok(err)
}

/// `max (u_A − u_B)⁺` over matching snapshot pairs.
pub fn comparison_violation(run_a: &[Field], run_b: &[Field]) -> Result<f64> {
    if run_a.len() != run_b.len() {
        return Err(Error::MismatchedRuns(format!(
            "{} snapshots against {}",
            run_a.len(),
            run_b.len()
        )));
    }
    let mut worst: f64 = 0.0;
    for (a, b) in run_a.iter().zip(run_b) {
        if !a.grid().matches(b.grid(), 1e-12) {
            return Err(Error::MismatchedRuns(
                "snapshots live on different grids".into(),
            ));
        }
        for (x, y) in a.values().iter().zip(b.values()) {
            worst = worst.max(x - y);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::profile::{compute_constants, self_similar_v};
    use proptest::prelude::*;

    fn box_field(g: Grid) -> Field {
        // cell-centred edges so the discrete area is exactly 1
        Field::from_fn(g, |x| {
            if x.abs() < 0.5 - 1e-12 {
                1.0
            } else if (x.abs() - 0.5).abs() < 1e-12 {
                0.5
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn lp_norms_of_box() {
        let g = Grid::new(1024, 4.0).unwrap();
        let b = box_field(g);
        assert!((lp_norm(&b, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(lp_norm(&b, f64::INFINITY).unwrap(), 1.0);
        assert!(lp_norm(&b, 0.5).is_err());
    }

    #[test]
    fn self_similar_l2_scaling() {
        let p = compute_constants(1.0).unwrap();
        let g = Grid::new(8192, 16.0).unwrap();
        let n1 = lp_norm(
            &Field::from_fn(g, |x| self_similar_v(x, 1.0, &p).unwrap()).unwrap(),
            2.0,
        )
        .unwrap();
        for t in [2.0, 5.0, 16.0] {
            let nt = lp_norm(
                &Field::from_fn(g, |x| self_similar_v(x, t, &p).unwrap()).unwrap(),
                2.0,
            )
            .unwrap();
            let want = n1 * t.powf(-0.25);
            assert!((nt - want).abs() < 1e-4 * want, "t={t}");
        }
    }

    #[test]
    fn support_width_cases() {
        let p = compute_constants(1.0).unwrap();
        let g = Grid::new(8192, 8.0).unwrap();
        assert_eq!(support_width(&Field::zeros(g), 1e-8), 0.0);
        let w1 = support_width(
            &Field::from_fn(g, |x| self_similar_v(x, 1.0, &p).unwrap()).unwrap(),
            1e-10,
        );
        assert!((w1 - 2.0 * p.y_alpha).abs() <= 2.0 * g.spacing());
        for t in [2.0, 8.0] {
            let wt = support_width(
                &Field::from_fn(g, |x| self_similar_v(x, t, &p).unwrap()).unwrap(),
                1e-10,
            );
            assert!((wt - w1 * t.sqrt()).abs() <= 2.0 * g.spacing() * t.sqrt());
        }
    }

    #[test]
    fn exact_power_law_recovered() {
        let times: Vec<f64> = (1..=40).map(|k| k as f64).collect();
        let vals: Vec<f64> = times.iter().map(|t| 3.0 * t.powf(-0.25)).collect();
        let fit = fit_power_law(&times, &vals, (1.0, 40.0)).unwrap();
        assert!((fit.slope + 0.25).abs() < 1e-12);
        assert!((fit.prefactor - 3.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(matches!(
            fit_power_law(&times, &vals, (1.0, 5.0)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn series_on_exact_self_similar_data() {
        let p = compute_constants(1.0).unwrap();
        let g = Grid::new(8192, 16.0).unwrap();
        let mut s = DiagnosticsSeries::new();
        for k in 0..30 {
            let t = 1.0 + k as f64 * 0.5;
            let v = Field::from_fn(g, |x| self_similar_v(x, t, &p).unwrap()).unwrap();
            s.push(t, &v, None).unwrap();
        }
        let f2 = fit_decay_exponent(&s, 2.0, (1.0, 20.0)).unwrap();
        assert!((f2.slope + 0.25).abs() < 1e-3, "{}", f2.slope);
        let f1 = fit_decay_exponent(&s, 1.0, (1.0, 20.0)).unwrap();
        assert!(f1.slope.abs() < 1e-3);
        assert!(s.mass_drift() < 1e-4);
    }

    #[test]
    fn series_rejects_bad_times() {
        let g = Grid::new(64, 1.0).unwrap();
        let mut s = DiagnosticsSeries::new();
        s.push(1.0, &Field::zeros(g), None).unwrap();
        assert!(s.push(1.0, &Field::zeros(g), None).is_err());
        assert!(s.push(2.0, &Field::zeros(g), Some(0.0)).is_err());
    }

    #[test]
    fn exact_profile_has_small_self_similar_error() {
        let p = compute_constants(1.0).unwrap();
        let g = Grid::new(4096, 8.0).unwrap();
        for t in [1.0, 3.0] {
            let v = Field::from_fn(g, |x| self_similar_v(x, t, &p).unwrap()).unwrap();
            assert!(self_similar_error(&v, t, &p, 0.75).unwrap() <= 1e-3);
            assert!(self_similar_error(&v.mirrored(), t, &p, 0.75).unwrap() <= 1e-3);
        }
    }

    #[test]
    fn comparison_of_shifted_data() {
        let g = Grid::new(128, 2.0).unwrap();
        let a = vec![Field::from_fn(g, |x| x.sin()).unwrap()];
        let b = vec![a[0].map(|u| u + 0.1).unwrap()];
        assert_eq!(comparison_violation(&a, &a).unwrap(), 0.0);
        assert_eq!(comparison_violation(&a, &b).unwrap(), 0.0);
        assert!(comparison_violation(&a, &[]).is_err());
    }

    proptest! {
        #[test]
        fn lp_norms_are_ordered_for_unit_mass(w in 0.2f64..3.0) {
            // for a box of mass 1 and width w: ‖v‖_p = w^{(1-p)/p}
            let g = Grid::new(2048, 4.0).unwrap();
            let h = g.spacing();
            let cells = (w / h).round().max(1.0);
            let v = Field::from_fn(g, |x| if x >= 0.0 && x < cells * h - 1e-12 { 1.0 / (cells * h) } else { 0.0 }).unwrap();
            let wd = cells * h;
            for p in [1.0, 2.0, 4.0] {
                let want = wd.powf((1.0 - p) / p);
                prop_assert!((lp_norm(&v, p).unwrap() - want).abs() < 1e-10 * want);
            }
        }
    }
}
