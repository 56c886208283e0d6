//! Integrating-factor Heun integration of the density equation
//!
//! ```text
//! v_t = ε v_xx + (|v| Λ^{α-1} H v)_x,     v = u_x,
//! ```
//!
//! on a periodic grid. Diffusion is applied exactly in Fourier space and the
//! conservative flux explicitly. All stages stay in coefficient space, so a
//! step costs seven FFTs.

use crate::diagnostics::{support_width, DiagnosticsSeries, DEFAULT_SUPPORT_THRESHOLD};
use crate::error::{Error, Result};
use crate::grid::{fft_forward, fft_inverse, Field, Grid};
use crate::operators::{dealias_mask, derivative_table, riesz_flux, riesz_table};
use crate::profile::{self_similar_density, self_similar_half_width, AlphaParams};
use rustfft::num_complex::Complex64;
use statrs::function::erf::erf;
use std::path::PathBuf;

/// Floor on `‖Λ^{α-1} H v‖∞` in the step-size rule.
pub const DT_FLOOR: f64 = 1e-12;
/// Largest growth of `‖v‖∞` tolerated within one step.
pub const INSTABILITY_GROWTH: f64 = 1.10;
/// Runs abort once the support exceeds this fraction of the period.
pub const BOUNDARY_FRACTION: f64 = 0.8;
/// Box edges are smoothed with `erf` over this many grid spacings.
pub const BOX_EDGE_CELLS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    /// `0.1 · h^α`
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Self-similar density of mass `mass` at time `t0`; the run clock starts at `t0`.
    SelfSimilar {
        t0: f64,
        mass: f64,
    },
    /// Box of the given width and height, edges smoothed over a few cells.
    Box {
        width: f64,
        height: f64,
    },
    Gaussian {
        sigma: f64,
        mass: f64,
    },
    /// `u` rises 0 → 1 at `-s/2` and returns to 0 at `+s/2` through unit profiles.
    TwoFront {
        separation: f64,
    },
    /// CSV with `x,v` columns.
    Custom {
        path: PathBuf,
    },
}

impl InitialCondition {
    pub fn tag(&self) -> &'static str {
        match self {
            InitialCondition::SelfSimilar { .. } => "self_similar",
            InitialCondition::Box { .. } => "box",
            InitialCondition::Gaussian { .. } => "gaussian",
            InitialCondition::TwoFront { .. } => "two_front",
            InitialCondition::Custom { .. } => "custom",
        }
    }

    /// Clock value at which the run starts.
    pub fn start_time(&self) -> f64 {
        match self {
            InitialCondition::SelfSimilar { t0, .. } => *t0,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub epsilon: Epsilon,
    pub grid: Grid,
    pub dt: TimeStep,
    /// Final clock value (absolute, so self-similar runs go from `t0` to `t_end`).
    pub t_end: f64,
    pub initial_condition: InitialCondition,
    pub snapshot_every: usize,
    pub cfl_safety: f64,
}

impl RunConfig {
    pub const DEFAULT_CFL: f64 = 0.4;
    pub const DEFAULT_SNAPSHOT_EVERY: usize = 100;

    /// Config with automatic ε and dt and default cadence.
    pub fn new(alpha: f64, grid: Grid, t_end: f64, initial_condition: InitialCondition) -> Self {
        RunConfig {
            alpha,
            epsilon: Epsilon::Auto,
            grid,
            dt: TimeStep::Auto,
            t_end,
            initial_condition,
            snapshot_every: Self::DEFAULT_SNAPSHOT_EVERY,
            cfl_safety: Self::DEFAULT_CFL,
        }
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = Epsilon::Value(eps);
        self
    }

    pub fn with_snapshot_every(mut self, k: usize) -> Self {
        self.snapshot_every = k;
        self
    }

    /// ε actually used by the integrator.
    pub fn resolved_epsilon(&self) -> f64 {
        match self.epsilon {
            Epsilon::Auto => 0.1 * self.grid.spacing().powf(self.alpha),
            Epsilon::Value(e) => e,
        }
    }

    /// α ∈ (1, 2) runs rely on the viscous regularisation.
    pub fn is_experimental(&self) -> bool {
        self.alpha > 1.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return bad(format!("alpha must lie in (0,2), got {}", self.alpha));
        }
        if let Epsilon::Value(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return bad(format!("epsilon must be finite and >= 0, got {e}"));
            }
        }
        if self.alpha > 1.0 && self.resolved_epsilon() <= 0.0 {
            return bad(format!(
                "alpha = {} > 1 requires epsilon > 0: the product |u_x| Λ^α u is undefined without regularisation",
                self.alpha
            ));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be at least 1".into());
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!(
                "cfl_safety must lie in (0,1], got {}",
                self.cfl_safety
            ));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        match &self.initial_condition {
            InitialCondition::SelfSimilar { t0, mass } => {
                positive("t0", *t0)?;
                positive("mass", *mass)?;
                if self.t_end <= *t0 {
                    return bad(format!("t_end = {} must exceed t0 = {t0}", self.t_end));
                }
            }
            InitialCondition::Box { width, height } => {
                positive("width", *width)?;
                positive("height", *height)?;
            }
            InitialCondition::Gaussian { sigma, mass } => {
                positive("sigma", *sigma)?;
                positive("mass", *mass)?;
            }
            InitialCondition::TwoFront { separation } => positive("separation", *separation)?,
            InitialCondition::Custom { .. } => {}
        }
        Ok(())
    }
}

fn check_fits(half_extent: f64, grid: &Grid, what: &str) -> Result<()> {
    let lim = 0.5 * grid.half_length();
    if half_extent > lim {
        return Err(Error::Config(format!(
            "{what} reaches |x| = {half_extent:.4}, beyond the admissible half-domain {lim:.4}"
        )));
    }
    Ok(())
}

/// Initial density `v₀` on the config grid.
pub fn initial_field(config: &RunConfig, params: &AlphaParams) -> Result<Field> {
    let g = config.grid;
    match &config.initial_condition {
        InitialCondition::SelfSimilar { t0, mass } => {
            check_fits(
                self_similar_half_width(*t0, *mass, params),
                &g,
                "self-similar support",
            )?;
            let vals = g
                .points()
                .iter()
                .map(|&x| self_similar_density(x, *t0, *mass, params))
                .collect::<Result<Vec<_>>>()?;
            Field::new(g, vals)
        }
        InitialCondition::Box { width, height } => {
            let s = BOX_EDGE_CELLS * g.spacing();
            check_fits(0.5 * width + 4.0 * s, &g, "box")?;
            let raw = Field::from_fn(g, |x| {
                0.5 * height * (erf((x + 0.5 * width) / s) - erf((x - 0.5 * width) / s))
            })?;
            let scale = width * height / raw.integral();
            raw.map(|v| v * scale)
        }
        InitialCondition::Gaussian { sigma, mass } => {
            check_fits(6.0 * sigma, &g, "gaussian (6 sigma)")?;
            let raw = Field::from_fn(g, |x| (-0.5 * (x / sigma).powi(2)).exp())?;
            let scale = mass / raw.integral();
            raw.map(|v| v * scale)
        }
        InitialCondition::TwoFront { separation } => {
            let half = 0.5 * separation;
            check_fits(half + params.y_alpha, &g, "two-front support")?;
            let vals = g
                .points()
                .iter()
                .map(|&x| {
                    Ok(self_similar_density(x + half, 1.0, 1.0, params)?
                        - self_similar_density(x - half, 1.0, 1.0, params)?)
                })
                .collect::<Result<Vec<_>>>()?;
            Field::new(g, vals)
        }
        InitialCondition::Custom { path } => {
            let f = crate::run_io::read_field(path, &g)?;
            let lim = 0.5 * g.half_length();
            let tol = 1e-12 * f.sup_norm();
            if let Some(j) = (0..g.n()).find(|&j| g.x(j).abs() > lim && f.values()[j].abs() > tol) {
                return Err(Error::Config(format!(
                    "custom data is nonzero at x = {}, outside |x| <= {lim}",
                    g.x(j)
                )));
            }
            Ok(f)
        }
    }
}

/// Spectral derivative of the dealiased product `|v| · Λ^{α-1} H v`.
pub fn rhs_flux(v: &Field, alpha: f64) -> Result<Field> {
    let k = Kernels::new(*v.grid(), alpha)?;
    let mut vhat = to_complex(v.values());
    fft_forward(&mut vhat);
    let mut scratch = Scratch::new(v.grid().n());
    let (khat, _) = k.flux_hat(&vhat, v.values(), &mut scratch);
    Ok(Field::from_values_unchecked(*v.grid(), real_inverse(khat)))
}

/// CFL step `cfl · h / max(‖Λ^{α-1} H v‖∞, 1e-12)`, capped by the time left.
pub fn auto_dt(v: &Field, config: &RunConfig, time: f64) -> Result<f64> {
    let r = riesz_flux(v, config.alpha)?.sup_norm();
    Ok(cfl_dt(config, r).min(config.t_end - time))
}

fn cfl_dt(config: &RunConfig, rmax: f64) -> f64 {
    config.cfl_safety * config.grid.spacing() / rmax.max(DT_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub time: f64,
    pub v: Field,
    pub step_count: usize,
    pub dt_current: f64,
}

fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

fn real_inverse(mut c: Vec<Complex64>) -> Vec<f64> {
    fft_inverse(&mut c);
    let inv = 1.0 / c.len() as f64;
    c.iter().map(|z| z.re * inv).collect()
}

struct Kernels {
    riesz: Vec<Complex64>,
    /// `i ξ` restricted to the retained two thirds of the spectrum
    flux_deriv: Vec<Complex64>,
    xi2: Vec<f64>,
}

struct Scratch {
    a: Vec<Complex64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            a: vec![Complex64::new(0.0, 0.0); n],
        }
    }
}

impl Kernels {
    fn new(grid: Grid, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::Domain(format!(
                "alpha must lie in (0,2), got {alpha}"
            )));
        }
        let mask = dealias_mask(&grid);
        let flux_deriv = derivative_table(&grid)
            .into_iter()
            .zip(mask)
            .map(|(d, m)| d * m)
            .collect();
        let xi2 = (0..grid.n()).map(|i| grid.frequency(i).powi(2)).collect();
        Ok(Kernels {
            riesz: riesz_table(&grid, alpha),
            flux_deriv,
            xi2,
        })
    }

    /// Coefficients of the flux term and `‖Λ^{α-1} H v‖∞`, given both the
    /// coefficients and the samples of `v`.
    fn flux_hat(&self, vhat: &[Complex64], v: &[f64], s: &mut Scratch) -> (Vec<Complex64>, f64) {
        let n = v.len();
        let inv = 1.0 / n as f64;
        for ((a, c), m) in s.a.iter_mut().zip(vhat).zip(&self.riesz) {
            *a = c * m;
        }
        fft_inverse(&mut s.a);
        let mut rmax: f64 = 0.0;
        let mut prod: Vec<Complex64> = Vec::with_capacity(n);
        for (a, &vj) in s.a.iter().zip(v) {
            let r = a.re * inv;
            rmax = rmax.max(r.abs());
            prod.push(Complex64::new(vj.abs() * r, 0.0));
        }
        fft_forward(&mut prod);
        for (p, d) in prod.iter_mut().zip(&self.flux_deriv) {
            *p *= d;
        }
        (prod, rmax)
    }
}

/// Integrator bound to one configuration.
pub struct Solver {
    config: RunConfig,
    eps: f64,
    kernels: Kernels,
    scratch: Scratch,
    state: SolverState,
}

impl Solver {
    pub fn new(config: RunConfig, v0: Field) -> Result<Self> {
        config.validate()?;
        if !v0.grid().matches(&config.grid, 1e-12) {
            return Err(Error::GridMismatch(
                "initial field grid differs from config grid".into(),
            ));
        }
        let kernels = Kernels::new(config.grid, config.alpha)?;
        let state = SolverState {
            time: config.initial_condition.start_time(),
            v: v0,
            step_count: 0,
            dt_current: 0.0,
        };
        Ok(Solver {
            eps: config.resolved_epsilon(),
            scratch: Scratch::new(config.grid.n()),
            kernels,
            config,
            state,
        })
    }

    pub fn from_config(config: RunConfig, params: &AlphaParams) -> Result<Self> {
        let v0 = initial_field(&config, params)?;
        Self::new(config, v0)
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    /// One step, never past `t_stop`.
    pub fn step_until(&mut self, t_stop: f64) -> Result<()> {
        let n = self.config.grid.n();
        let v = self.state.v.values();
        let mut vhat = to_complex(v);
        fft_forward(&mut vhat);
        let (k1, rmax) = self.kernels.flux_hat(&vhat, v, &mut self.scratch);
        let remaining = t_stop - self.state.time;
        let dt = match self.config.dt {
            TimeStep::Auto => cfl_dt(&self.config, rmax),
            TimeStep::Fixed(dt) => dt,
        }
        .min(remaining);
        if !(dt > 0.0) {
            return Err(Error::Numerical(format!(
                "non-positive step {dt} at t = {}",
                self.state.time
            )));
        }
        let decay: Vec<f64> = self
            .kernels
            .xi2
            .iter()
            .map(|x| (-self.eps * x * dt).exp())
            .collect();

        let mut stage: Vec<Complex64> = (0..n).map(|i| decay[i] * (vhat[i] + dt * k1[i])).collect();
        let vs_hat = stage.clone();
        fft_inverse(&mut stage);
        let inv = 1.0 / n as f64;
        let vs: Vec<f64> = stage.iter().map(|z| z.re * inv).collect();
        let (k2, _) = self.kernels.flux_hat(&vs_hat, &vs, &mut self.scratch);

        let new_hat: Vec<Complex64> = (0..n)
            .map(|i| decay[i] * (vhat[i] + 0.5 * dt * k1[i]) + 0.5 * dt * k2[i])
            .collect();
        let new_v = real_inverse(new_hat);

        let t_new = self.state.time + dt;
        if new_v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Instability {
                time: t_new,
                msg: "non-finite values".into(),
            });
        }
        let old_sup = self.state.v.sup_norm();
        let new_sup = new_v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if new_sup > INSTABILITY_GROWTH * old_sup {
            return Err(Error::Instability {
                time: t_new,
                msg: format!(
                    "sup norm grew from {old_sup:.6e} to {new_sup:.6e} in one step (dt = {dt:.3e})"
                ),
            });
        }
        self.state.v = Field::from_values_unchecked(self.config.grid, new_v);
        self.state.time = if dt == remaining { t_stop } else { t_new };
        self.state.step_count += 1;
        self.state.dt_current = dt;
        Ok(())
    }

    /// Abort once periodic images start to interact.
    pub fn check_boundary(&self) -> Result<()> {
        let width = support_width(&self.state.v, DEFAULT_SUPPORT_THRESHOLD);
        let limit = BOUNDARY_FRACTION * 2.0 * self.config.grid.half_length();
        if width > limit {
            return Err(Error::BoundaryContamination {
                time: self.state.time,
                width,
                limit,
            });
        }
        Ok(())
    }

    /// Step until `t_stop`, calling `observer` after every step.
    pub fn advance_to(
        &mut self,
        t_stop: f64,
        mut observer: impl FnMut(&SolverState) -> Result<()>,
    ) -> Result<()> {
        while self.state.time < t_stop {
            self.step_until(t_stop)?;
            self.check_boundary()?;
            observer(&self.state)?;
        }
        Ok(())
    }
}

/// Free-standing single step (builds the kernels on every call).
pub fn step(state: &SolverState, config: &RunConfig) -> Result<SolverState> {
    let mut s = Solver::new(config.clone(), state.v.clone())?;
    s.state.time = state.time;
    s.state.step_count = state.step_count;
    s.step_until(config.t_end)?;
    Ok(s.state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub v: Field,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: SolverState,
    pub series: DiagnosticsSeries,
    pub snapshots: Vec<Snapshot>,
    pub epsilon: f64,
}

fn oracle_error(
    config: &RunConfig,
    params: &AlphaParams,
    v: &Field,
    t: f64,
) -> Result<Option<f64>> {
    if let InitialCondition::SelfSimilar { mass, .. } = config.initial_condition {
        let g = v.grid();
        let mut e: f64 = 0.0;
        for j in 0..g.n() {
            e = e.max((v.values()[j] - self_similar_density(g.x(j), t, mass, params)?).abs());
        }
        Ok(Some(e))
    } else {
        Ok(None)
    }
}

/// Integrate to `t_end`, recording diagnostics and snapshots at step 0,
/// every `snapshot_every` steps and at the final time.
pub fn evolve(config: &RunConfig) -> Result<RunOutput> {
    let params = AlphaParams::new(config.alpha)?;
    let mut solver = Solver::from_config(config.clone(), &params)?;
    let mut series = DiagnosticsSeries::new();
    let mut snapshots = Vec::new();
    let s0 = solver.state().clone();
    series.push(
        s0.time,
        &s0.v,
        oracle_error(config, &params, &s0.v, s0.time)?,
    )?;
    snapshots.push(Snapshot {
        step: 0,
        time: s0.time,
        v: s0.v,
    });
    let every = config.snapshot_every;
    let t_end = config.t_end;
    solver.advance_to(t_end, |st| {
        if st.step_count % every == 0 || st.time >= t_end {
            series.push(
                st.time,
                &st.v,
                oracle_error(config, &params, &st.v, st.time)?,
            )?;
            snapshots.push(Snapshot {
                step: st.step_count,
                time: st.time,
                v: st.v.clone(),
            });
        }
        Ok(())
    })?;
    Ok(RunOutput {
        final_state: solver.state().clone(),
        series,
        snapshots,
        epsilon: solver.epsilon(),
    })
}

/// Field values of a run at each of `times` (ascending, after the start).
pub fn evolve_recording(
    config: &RunConfig,
    params: &AlphaParams,
    times: &[f64],
) -> Result<Vec<Field>> {
    let mut solver = Solver::from_config(config.clone(), params)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t < solver.state().time {
            return Err(Error::Validation(format!(
                "recording time {t} precedes the run clock"
            )));
        }
        solver.advance_to(t, |_| Ok(()))?;
        out.push(solver.state().v.clone());
    }
    Ok(out)
}

/// Displacement recovered from a density.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredU {
    pub u: Field,
    /// `u(L) − u(−L)`, the total mass; zero for periodic `u`.
    pub jump: f64,
}

/// Trapezoid antiderivative with `u(−L) = left_value`.
pub fn recover_u(v: &Field, left_value: f64) -> RecoveredU {
    let g = *v.grid();
    let h = g.spacing();
    let vals = v.values();
    let mut u = Vec::with_capacity(g.n());
    let mut acc = left_value;
    u.push(acc);
    for w in vals.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        u.push(acc);
    }
    RecoveredU {
        u: Field::from_values_unchecked(g, u),
        jump: v.integral(),
    }
}
