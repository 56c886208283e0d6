use clap::{Parser, Subcommand};
use dislocflow::error::{Error, Result};
use dislocflow::grid::{Field, Grid};
use dislocflow::operators::{fractional_laplacian, levy_laplacian, DEFAULT_INNER_CELLS};
use dislocflow::par::ExecMode;
use dislocflow::profile::{compute_constants, getoor_v, phi, phi_prime};
use dislocflow::run_io::{load_config, run_evolve};
use dislocflow::verify::{write_report, Battery, Suite};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dislocflow", version = dislocflow_version(), about = "Nonlocal dislocation-density simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn dislocflow_version() -> &'static str {
    Box::leak(dislocflow::version_string().into_boxed_str())
}

#[derive(Subcommand)]
enum Command {
    /// Sample Φ_α and Φ_α' over [-2 y_α, 2 y_α].
    Profile {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Getoor identity check: spectral and quadrature Λ^α of the Getoor function.
    Getoor {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, default_value_t = 8.0)]
        half_length: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a simulation described by a config file.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Run the verification battery.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "verify_report.csv")]
        report: PathBuf,
        /// Run the kernels on one thread.
        #[arg(long)]
        sequential: bool,
    },
}

fn csv_writer(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
}

fn profile(alpha: f64, samples: usize, out: &Path) -> Result<()> {
    if samples < 2 {
        return Err(Error::Validation("samples must be at least 2".into()));
    }
    let p = compute_constants(alpha)?;
    let mut w = csv_writer(out)?;
    let io = |e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    };
    writeln!(w, "y,phi,phi_prime").map_err(io)?;
    let lim = 2.0 * p.y_alpha;
    for i in 0..samples {
        let y = -lim + 2.0 * lim * i as f64 / (samples - 1) as f64;
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e}",
            y,
            phi(y, &p),
            phi_prime(y, &p)
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn getoor(alpha: f64, n: usize, half_length: f64, out: &Path) -> Result<()> {
    let p = compute_constants(alpha)?;
    let g = Grid::new(n, half_length).map_err(|e| Error::Validation(e.to_string()))?;
    let v = Field::from_fn(g, |x| getoor_v(x, &p))?;
    let spec = fractional_laplacian(&v, alpha)?;
    let quad = levy_laplacian(&v, alpha, DEFAULT_INNER_CELLS as f64 * g.spacing())?;
    let mut w = csv_writer(out)?;
    let io = |e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    };
    writeln!(w, "x,v,lap_spectral,lap_quadrature").map_err(io)?;
    for j in 0..n {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            g.x(j),
            v.values()[j],
            spec.values()[j],
            quad.values()[j]
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn verify(suite: &str, alpha: Option<f64>, report: &Path, sequential: bool) -> Result<bool> {
    let suite: Suite = suite.parse()?;
    if let Some(a) = alpha {
        compute_constants(a).map_err(|e| Error::Validation(e.to_string()))?;
    }
    let mode = if sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    };
    let battery = Battery::new(alpha, mode);
    let mut rows = Vec::new();
    for &k in suite.criteria() {
        for row in battery.criterion(k) {
            println!("{row}");
            rows.push(row);
        }
    }
    write_report(&rows, report)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    println!(
        "{} checks, {} failed; report written to {}",
        rows.len(),
        failed,
        report.display()
    );
    Ok(failed == 0)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Profile {
            alpha,
            samples,
            out,
        } => profile(alpha, samples, &out).map(|_| true),
        Command::Getoor {
            alpha,
            n,
            half_length,
            out,
        } => getoor(alpha, n, half_length, &out).map(|_| true),
        Command::Evolve { config, out } => {
            let c = load_config(&config)?;
            let m = run_evolve(&c, &out)?;
            println!(
                "{} steps to t = {} in {:.2} s; {} artifacts in {}",
                m.steps,
                m.final_time,
                m.wall_time_seconds,
                m.artifacts.len(),
                out.display()
            );
            Ok(true)
        }
        Command::Verify {
            suite,
            alpha,
            report,
            sequential,
        } => verify(&suite, alpha, &report, sequential),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        // a failing check is a numerical outcome
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
