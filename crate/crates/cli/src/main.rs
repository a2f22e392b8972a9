use std::path::PathBuf;
use std::process::ExitCode;

use akpz_cli::config::{Experiment, ExperimentConfig};
use akpz_cli::outputs::{cov_csv, covariance_values, ctmc_csv, sde_csv, she_check_csv, Volume};
use akpz_cli::recipes::{run_experiment, SHE_POINTS};
use akpz_cli::{parse_config, read_file, write_file, CliError, ComparisonReport};
use akpz_core::correlations::{gff_smoothed_variance, two_bump_phi, CovarianceQuery, Method, PhiGrid};
use akpz_core::ctmc::check_stationarity;
use akpz_core::lattice::{crystalline, ParticleConfig, TorusParams};
use akpz_core::sde::{drift_coeffs, spectral_data, validate_symbol_properties, EmOptions, GaussianModel, ModelParams, SpectralData};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "akpz", version, about = "Simulations and correlation checks for the (2+1)-dimensional anisotropic growth model")]
struct Cli {
    /// Worker threads (defaults to AKPZ_THREADS, then to the number of cores).
    #[arg(long, global = true, env = "AKPZ_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Slopes {
    #[arg(long = "C", alias = "c", default_value_t = 0.5)]
    c: f64,
    #[arg(long = "D", alias = "d", default_value_t = 1.0)]
    d: f64,
}

impl Slopes {
    fn model(&self) -> Result<(ModelParams, SpectralData), CliError> {
        let p = ModelParams::new(self.c, self.d)?;
        let s = spectral_data(&drift_coeffs(&p))?;
        Ok((p, s))
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum MethodArg {
    Finite,
    Quad,
    Kernel,
    Asymptotic,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the particle chain and write positions at observation times.
    Ctmc {
        #[arg(long = "L")]
        l: Option<usize>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        m1: Option<usize>,
        #[arg(long)]
        m2: usize,
        /// Scaling regime: L = ell/eps, N = m1 = m, q = e^{-eps} by default.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long = "T")]
        t: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        observe_every: f64,
        /// Initial configuration file; the crystalline state by default.
        #[arg(long)]
        start: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the linear SDE from zero initial data.
    Sde {
        #[command(flatten)]
        slopes: Slopes,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        m2: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long = "T")]
        t: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        record_every: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-time covariance W_y(t, s).
    Cov {
        #[command(flatten)]
        slopes: Slopes,
        #[arg(long, requires = "m2", conflicts_with = "infinite")]
        m: Option<usize>,
        #[arg(long, requires = "m")]
        m2: Option<usize>,
        #[arg(long)]
        infinite: bool,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        y1: i64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        y2: i64,
        #[arg(long, value_enum, default_value_t = MethodArg::Quad)]
        method: MethodArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the symbol identities, or validate a particle configuration file.
    Validate {
        #[command(flatten)]
        slopes: Slopes,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Brute-force stationarity residual of the product measure.
    OracleStationarity {
        #[arg(long = "L", default_value_t = 4)]
        l: usize,
        #[arg(long = "N", default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m1: usize,
        #[arg(long, default_value_t = 1)]
        m2: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.3, 0.7])]
        q: Vec<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Rescaled covariance against the additive stochastic heat equation.
    SheCheck {
        #[command(flatten)]
        slopes: Slopes,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-1, 1e-2, 1e-3])]
        delta_list: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smoothed-field variance: lattice against continuum.
    Gff {
        #[command(flatten)]
        slopes: Slopes,
        #[arg(long, default_value_t = 0.0625)]
        delta: f64,
        #[arg(long, default_value_t = 256)]
        m: usize,
        /// Test-function grid file; two offset bumps on a 1/64 grid by default.
        #[arg(long)]
        phi: Option<PathBuf>,
    },
    /// Run every acceptance recipe at its default parameters.
    All {
        /// Directory for one CSV report per recipe.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the experiment described by a configuration file.
    Run { config: PathBuf },
}

/// Writes to `out`, or stdout without one.
fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_report(r: &ComparisonReport) {
    println!("{}", r.summary());
    print!("{}", r.to_table());
}

fn status(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(cmd: Command) -> Result<ExitCode, CliError> {
    match cmd {
        Command::Ctmc { l, n, m1, m2, eps, ell, m, q, t, seed, observe_every, start, out } => {
            let (torus, q) = match eps {
                Some(eps) => {
                    let (ell, m) = ell.zip(m).ok_or_else(|| CliError::Usage("--eps needs --ell and --m".into()))?;
                    (TorusParams::scaling(ell, m, m2, eps)?, q.unwrap_or((-eps).exp()))
                }
                None => {
                    let (l, n, m1) = match (l, n, m1) {
                        (Some(l), Some(n), Some(m1)) => (l, n, m1),
                        _ => return Err(CliError::Usage("give --L, --N and --m1, or --eps with --ell and --m".into())),
                    };
                    (TorusParams::new(l, n, m1, m2)?, q.ok_or_else(|| CliError::Usage("--q is required without --eps".into()))?)
                }
            };
            let config = match start {
                Some(path) => {
                    let c = ParticleConfig::from_text(&read_file(&path)?)?;
                    let t0 = c.torus();
                    if (t0.l, t0.n, t0.m1, t0.m2) != (torus.l, torus.n, torus.m1, torus.m2) {
                        return Err(CliError::Usage("start configuration lives on a different torus".into()));
                    }
                    c
                }
                None => crystalline(&torus)?,
            };
            emit(out.as_ref(), &ctmc_csv(&config, q, t, seed, observe_every)?)?;
        }
        Command::Sde { slopes, m, m2, dt, t, seed, record_every, out } => {
            let (p, _) = slopes.model()?;
            let model = GaussianModel::new(p, m, m2)?;
            let opts = EmOptions { record_every: Some(record_every.max(1)), ..EmOptions::new(dt, t) };
            emit(out.as_ref(), &sde_csv(&model, &opts, seed)?)?;
        }
        Command::Cov { slopes, m, m2, infinite, t, s, y1, y2, method, out } => {
            let (p, sp) = slopes.model()?;
            let q = CovarianceQuery::new([y1, y2], t, s)?;
            let volume = match (m, m2, infinite) {
                (Some(m), Some(m2), false) => Volume::Finite { m, m2 },
                _ => Volume::Infinite,
            };
            let method = match method {
                MethodArg::Finite => Method::FiniteM,
                MethodArg::Quad => Method::Quadrature,
                MethodArg::Kernel => Method::HeatKernel,
                MethodArg::Asymptotic => Method::Asymptotic,
            };
            let values = covariance_values(&q, method, volume, &p, &sp)?;
            if values.is_empty() {
                eprintln!("warning: no asymptotic regime applies to this query");
            }
            emit(out.as_ref(), &cov_csv(&q, &values))?;
        }
        Command::Validate { slopes, config } => {
            if let Some(path) = config {
                let c = ParticleConfig::from_text(&read_file(&path)?)?;
                return Ok(match c.validate().violation {
                    None => {
                        println!("valid configuration, sector m2 = {}", c.sector()?);
                        ExitCode::SUCCESS
                    }
                    Some(v) => {
                        println!("invalid configuration: {v}");
                        ExitCode::from(1)
                    }
                });
            }
            let p = ModelParams::new(slopes.c, slopes.d)?;
            let report = validate_symbol_properties(&p);
            for c in &report.checks {
                println!("[{}] {:<28} value={:.3e} tol={:.1e}", if c.passed { "ok" } else { "FAIL" }, c.name, c.value, c.tolerance);
            }
            return Ok(status(report.all_passed()));
        }
        Command::OracleStationarity { l, n, m1, m2, q, tol } => {
            let torus = TorusParams::new(l, n, m1, m2)?;
            let mut pass = true;
            for q in q {
                let r = check_stationarity(&torus, q)?;
                pass &= r < tol;
                println!("q={q} residual={r:.3e} {}", if r < tol { "ok" } else { "FAIL" });
            }
            return Ok(status(pass));
        }
        Command::SheCheck { slopes, delta_list, out } => {
            let (p, s) = slopes.model()?;
            emit(out.as_ref(), &she_check_csv(&delta_list, SHE_POINTS, &p, &s)?)?;
        }
        Command::Gff { slopes, delta, m, phi } => {
            let (p, s) = slopes.model()?;
            let grid = match phi {
                Some(path) => PhiGrid::from_text(&read_file(&path)?)?,
                None => two_bump_phi(1.0 / 64.0),
            };
            let g = gff_smoothed_variance(&grid, delta, m, &s, &p)?;
            println!("lattice,continuum,rel_err");
            println!("{:.16e},{:.16e},{:.16e}", g.lattice, g.continuum, ((g.lattice - g.continuum) / g.continuum).abs());
        }
        Command::All { out_dir } => {
            let mut pass = true;
            for e in Experiment::ALL {
                let start = std::time::Instant::now();
                let report = run_experiment(&ExperimentConfig::new(e))?;
                println!("criterion {:>2} {} [{:.1?}]", e.criterion(), report.summary(), start.elapsed());
                for row in report.failures() {
                    println!("    failed: {} ({}={:.6e}, {}={:.6e})", row.query, row.method_a, row.value_a, row.method_b, row.value_b);
                }
                if let Some(dir) = &out_dir {
                    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
                    write_file(&dir.join(format!("{}.csv", e.name())), &report.to_csv())?;
                }
                pass &= report.passed();
            }
            return Ok(status(pass));
        }
        Command::Run { config } => {
            let cfg = parse_config(&read_file(&config)?)?;
            let report = run_experiment(&cfg)?;
            print_report(&report);
            if let Some(out) = &cfg.out {
                write_file(out, &report.to_csv())?;
            }
            return Ok(status(report.passed()));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
