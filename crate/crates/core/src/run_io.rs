//! Config files, snapshots, diagnostics tables and run manifests.
//!
//! Config files are flat `key = value` lines with `#` comments:
//!
//! ```text
//! alpha = 1.0
//! n = 4096
//! half_length = 16
//! t_end = 2
//! ic = self_similar
//! ic_params = 1.0,1.0
//! epsilon = 1e-4
//! ```

use crate::diagnostics::{fit_decay_exponent, DiagnosticsSeries, PowerLawFit};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::operators::calibrate_levy_constant;
use crate::profile::AlphaParams;
use crate::solver::{evolve, recover_u, Epsilon, InitialCondition, RunConfig, TimeStep};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

const KEYS: [&str; 10] = [
    "alpha",
    "epsilon",
    "n",
    "half_length",
    "dt",
    "t_end",
    "ic",
    "ic_params",
    "snapshot_every",
    "cfl_safety",
];

fn parse_f64(line: usize, key: &str, s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("{key}: '{s}' is not a number"),
    })
}

fn parse_list(line: usize, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| parse_f64(line, "ic_params", p.trim()))
        .collect()
}

/// Parse and validate a config file.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut raw: BTreeMap<&str, (usize, String)> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 'key = value', got '{body}'"),
            });
        };
        let k = k.trim();
        let v = v.trim();
        let Some(key) = KEYS.iter().find(|&&c| c == k) else {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("unknown key '{k}'"),
            });
        };
        if v.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("{k}: missing value"),
            });
        }
        if raw.insert(key, (lineno, v.to_string())).is_some() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("duplicate key '{k}'"),
            });
        }
    }

    let num = |key: &str| -> Result<Option<f64>> {
        match raw.get(key) {
            Some((l, s)) => parse_f64(*l, key, s).map(Some),
            None => Ok(None),
        }
    };
    let alpha = num("alpha")?;
    if let Some(a) = alpha {
        if !(a > 0.0 && a < 2.0) {
            return Err(Error::Validation(format!(
                "alpha must lie in (0,2), got {a}"
            )));
        }
    }
    let epsilon = match raw.get("epsilon") {
        None => Epsilon::Auto,
        Some((_, s)) if s == "auto" => Epsilon::Auto,
        Some((l, s)) => {
            let e = parse_f64(*l, "epsilon", s)?;
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::Validation(format!(
                    "epsilon must be finite and >= 0, got {e}"
                )));
            }
            Epsilon::Value(e)
        }
    };
    if let (Some(a), Epsilon::Value(e)) = (alpha, epsilon) {
        if a > 1.0 && e <= 0.0 {
            return Err(Error::Validation(format!(
                "alpha = {a} > 1 requires epsilon > 0: the product |u_x| Λ^α u is undefined without regularisation"
            )));
        }
    }
    let dt = match raw.get("dt") {
        None => TimeStep::Auto,
        Some((_, s)) if s == "auto" => TimeStep::Auto,
        Some((l, s)) => TimeStep::Fixed(parse_f64(*l, "dt", s)?),
    };
    let n = match raw.get("n") {
        Some((l, s)) => Some(s.parse::<usize>().map_err(|_| Error::Parse {
            line: *l,
            msg: format!("n: '{s}' is not a positive integer"),
        })?),
        None => None,
    };
    let snapshot_every = match raw.get("snapshot_every") {
        Some((l, s)) => s.parse::<usize>().map_err(|_| Error::Parse {
            line: *l,
            msg: format!("snapshot_every: '{s}' is not a positive integer"),
        })?,
        None => RunConfig::DEFAULT_SNAPSHOT_EVERY,
    };
    let cfl_safety = num("cfl_safety")?.unwrap_or(RunConfig::DEFAULT_CFL);
    let half_length = num("half_length")?;
    let t_end = num("t_end")?;

    let missing: Vec<&str> = ["alpha", "n", "half_length", "t_end", "ic"]
        .into_iter()
        .filter(|k| !raw.contains_key(k))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Validation(format!(
            "missing required keys: {}",
            missing.join(", ")
        )));
    }
    let grid = Grid::new(n.unwrap(), half_length.unwrap())
        .map_err(|e| Error::Validation(e.to_string()))?;

    let (ic_line, ic_tag) = raw.get("ic").cloned().unwrap();
    let params_entry = raw.get("ic_params").cloned();
    let nums = |want: usize, defaults: Option<&[f64]>| -> Result<Vec<f64>> {
        match &params_entry {
            Some((l, s)) => {
                let v = parse_list(*l, s)?;
                if v.len() != want {
                    return Err(Error::Parse {
                        line: *l,
                        msg: format!("ic = {ic_tag} takes {want} ic_params, got {}", v.len()),
                    });
                }
                Ok(v)
            }
            None => defaults
                .map(|d| d.to_vec())
                .ok_or_else(|| Error::Validation(format!("ic = {ic_tag} requires ic_params"))),
        }
    };
    let initial_condition = match ic_tag.as_str() {
        "self_similar" => {
            let p = nums(2, Some(&[1.0, 1.0]))?;
            InitialCondition::SelfSimilar {
                t0: p[0],
                mass: p[1],
            }
        }
        "box" => {
            let p = nums(2, Some(&[1.0, 1.0]))?;
            InitialCondition::Box {
                width: p[0],
                height: p[1],
            }
        }
        "gaussian" => {
            let p = nums(2, None)?;
            InitialCondition::Gaussian {
                sigma: p[0],
                mass: p[1],
            }
        }
        "two_front" => {
            let p = nums(1, None)?;
            InitialCondition::TwoFront { separation: p[0] }
        }
        "custom" => match &params_entry {
            Some((_, s)) => InitialCondition::Custom {
                path: PathBuf::from(s),
            },
            None => {
                return Err(Error::Validation(
                    "ic = custom requires ic_params = <path>".into(),
                ))
            }
        },
        other => return Err(Error::Parse {
            line: ic_line,
            msg: format!(
                "unknown ic '{other}' (expected self_similar, box, gaussian, two_front or custom)"
            ),
        }),
    };
    let config = RunConfig {
        alpha: alpha.unwrap(),
        epsilon,
        grid,
        dt,
        t_end: t_end.unwrap(),
        initial_condition,
        snapshot_every,
        cfl_safety,
    };
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn ic_params_text(ic: &InitialCondition) -> String {
    match ic {
        InitialCondition::SelfSimilar { t0, mass } => format!("{t0},{mass}"),
        InitialCondition::Box { width, height } => format!("{width},{height}"),
        InitialCondition::Gaussian { sigma, mass } => format!("{sigma},{mass}"),
        InitialCondition::TwoFront { separation } => format!("{separation}"),
        InitialCondition::Custom { path } => path.display().to_string(),
    }
}

/// Inverse of [`parse_config`]. Floats use the shortest round-trip form.
pub fn render_config(c: &RunConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "alpha = {}", c.alpha);
    match c.epsilon {
        Epsilon::Auto => s.push_str("epsilon = auto\n"),
        Epsilon::Value(e) => {
            let _ = writeln!(s, "epsilon = {e}");
        }
    }
    let _ = writeln!(s, "n = {}", c.grid.n());
    let _ = writeln!(s, "half_length = {}", c.grid.half_length());
    match c.dt {
        TimeStep::Auto => s.push_str("dt = auto\n"),
        TimeStep::Fixed(d) => {
            let _ = writeln!(s, "dt = {d}");
        }
    }
    let _ = writeln!(s, "t_end = {}", c.t_end);
    let _ = writeln!(s, "ic = {}", c.initial_condition.tag());
    let _ = writeln!(s, "ic_params = {}", ic_params_text(&c.initial_condition));
    let _ = writeln!(s, "snapshot_every = {}", c.snapshot_every);
    let _ = writeln!(s, "cfl_safety = {}", c.cfl_safety);
    s
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// CSV `x,v,u` with 17 significant digits.
pub fn write_snapshot(v: &Field, u: &Field, path: &Path) -> Result<()> {
    if !v.grid().matches(u.grid(), 1e-12) {
        return Err(Error::GridMismatch(
            "v and u live on different grids".into(),
        ));
    }
    let mut w = create(path)?;
    let g = v.grid();
    let io = |e| Error::io(path, e);
    writeln!(w, "x,v,u").map_err(io)?;
    for j in 0..g.n() {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e}",
            g.x(j),
            v.values()[j],
            u.values()[j]
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Read the `v` column of a CSV with `x` and `v` columns onto `grid`.
pub fn read_field(path: &Path, grid: &Grid) -> Result<Field> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(Error::Parse {
            line: 1,
            msg: "empty file".into(),
        });
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("header lacks a '{name}' column"),
            })
    };
    let (ix, iv) = (find("x")?, find("v")?);
    let mut values = Vec::with_capacity(grid.n());
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| -> Result<f64> {
            let s = fields.get(i).ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("expected {} columns", cols.len()),
            })?;
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("'{s}' is not a number"),
            })
        };
        let (x, v) = (get(ix)?, get(iv)?);
        let j = values.len();
        if j >= grid.n() {
            return Err(Error::GridMismatch(format!(
                "more than n = {} rows",
                grid.n()
            )));
        }
        let xj = grid.x(j);
        if (x - xj).abs() > 1e-9 * grid.half_length() {
            return Err(Error::GridMismatch(format!(
                "row {j} (line {lineno}) has x = {x}, grid expects {xj}"
            )));
        }
        if !v.is_finite() {
            return Err(Error::Validation(format!(
                "non-finite value on line {lineno}"
            )));
        }
        values.push(v);
    }
    if values.len() != grid.n() {
        return Err(Error::GridMismatch(format!(
            "{} rows, grid has n = {}; first missing abscissa x = {}",
            values.len(),
            grid.n(),
            grid.x(values.len())
        )));
    }
    Field::new(*grid, values)
}

/// CSV with one row per diagnostics record.
pub fn write_series(series: &DiagnosticsSeries, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    let oracle = series.oracle_sup_error.as_ref();
    write!(w, "t,mass,l1,l2,l4,linf,support_width").map_err(io)?;
    if oracle.is_some() {
        write!(w, ",oracle_sup_error").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for i in 0..series.len() {
        write!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            series.times[i],
            series.mass[i],
            series.l1[i],
            series.l2[i],
            series.l4[i],
            series.linf[i],
            series.support_width[i]
        )
        .map_err(io)?;
        if let Some(o) = oracle {
            write!(w, ",{:.16e}", o[i]).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub alpha: f64,
    pub epsilon: String,
    pub epsilon_resolved: f64,
    pub n: usize,
    pub half_length: f64,
    pub spacing: f64,
    pub dt: String,
    pub t_end: f64,
    pub ic: String,
    pub ic_params: String,
    pub snapshot_every: usize,
    pub cfl_safety: f64,
}

impl ConfigEcho {
    pub fn new(c: &RunConfig) -> Self {
        ConfigEcho {
            alpha: c.alpha,
            epsilon: match c.epsilon {
                Epsilon::Auto => "auto".into(),
                Epsilon::Value(e) => e.to_string(),
            },
            epsilon_resolved: c.resolved_epsilon(),
            n: c.grid.n(),
            half_length: c.grid.half_length(),
            spacing: c.grid.spacing(),
            dt: match c.dt {
                TimeStep::Auto => "auto".into(),
                TimeStep::Fixed(d) => d.to_string(),
            },
            t_end: c.t_end,
            ic: c.initial_condition.tag().into(),
            ic_params: ic_params_text(&c.initial_condition),
            snapshot_every: c.snapshot_every,
            cfl_safety: c.cfl_safety,
        }
    }
}

/// Run record written as `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config: ConfigEcho,
    pub experimental: bool,
    pub constants: AlphaParams,
    /// `None` when the grid is too coarse or short to calibrate.
    pub levy_constant: Option<f64>,
    pub steps: usize,
    pub final_time: f64,
    pub wall_time_seconds: f64,
    /// Decay fits of `‖v‖_p`, keyed by `p`; prefactors are for reference only.
    pub decay_fits: BTreeMap<String, PowerLawFit>,
    pub artifacts: Vec<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";
pub const SERIES_NAME: &str = "diagnostics.csv";

/// Run `config` and write snapshots, the diagnostics table and the manifest
/// into `out_dir`, which must be empty or absent.
pub fn run_evolve(config: &RunConfig, out_dir: &Path) -> Result<Manifest> {
    let started = Instant::now();
    if out_dir.exists() {
        let mut it = fs::read_dir(out_dir).map_err(|e| Error::io(out_dir, e))?;
        if it.next().is_some() {
            return Err(Error::Config(format!(
                "output directory {} is not empty",
                out_dir.display()
            )));
        }
    } else {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    }
    let params = AlphaParams::new(config.alpha)?;
    let out = evolve(config)?;
    let mut artifacts = Vec::new();
    for snap in &out.snapshots {
        let name = format!("snap_{}.csv", snap.step);
        let u = recover_u(&snap.v, 0.0).u;
        write_snapshot(&snap.v, &u, &out_dir.join(&name))?;
        artifacts.push(name);
    }
    write_series(&out.series, &out_dir.join(SERIES_NAME))?;
    artifacts.push(SERIES_NAME.into());
    artifacts.push(MANIFEST_NAME.into());

    let t_start = config.initial_condition.start_time();
    let window = (t_start.max(1.0), t_start + 0.9 * (config.t_end - t_start));
    let mut decay_fits = BTreeMap::new();
    for (label, p) in [("1", 1.0), ("2", 2.0), ("4", 4.0), ("inf", f64::INFINITY)] {
        if let Ok(fit) = fit_decay_exponent(&out.series, p, window) {
            decay_fits.insert(label.to_string(), fit);
        }
    }
    let manifest = Manifest {
        version: crate::version_string(),
        config: ConfigEcho::new(config),
        experimental: config.is_experimental(),
        constants: params,
        levy_constant: calibrate_levy_constant(config.alpha, &config.grid).ok(),
        steps: out.final_state.step_count,
        final_time: out.final_state.time,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        decay_fits,
        artifacts,
    };
    let path = out_dir.join(MANIFEST_NAME);
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Numerical(format!("manifest serialisation failed: {e}")))?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
