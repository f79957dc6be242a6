use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use flowlab_core::experiment::{self, ExperimentConfig, ReportFormat};
use flowlab_core::fbm::{sample, FbmSpec, Method};
use flowlab_core::fraccalc::{lambda_alpha_upper_bound, lambda_alpha_with, EndpointMode};
use flowlab_core::sde::{coefficient_field, solve_backward, solve_forward, Scheme, SolverConfig};
use flowlab_core::young::{rs_integral, young_bound_check, zahle_integral};
use flowlab_core::{FracOrder, GridPath};

#[derive(Parser)]
#[command(name = "flowlab", version, about = "Fractional Brownian motion, fractional calculus and flows of fBm-driven equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample fBm paths and measure polygonal approximation rates.
    #[command(subcommand)]
    Fbm(FbmCommand),
    /// Fractional calculus on a path.
    #[command(subcommand)]
    Fraccalc(FraccalcCommand),
    /// Young integrals of two paths.
    #[command(subcommand)]
    Young(YoungCommand),
    /// Solve a differential equation driven by fBm.
    #[command(subcommand)]
    Sde(SdeCommand),
    /// Run an experiment from a JSON configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-derive a persisted result from its records and compare.
    Verify {
        #[arg(long)]
        result: PathBuf,
    },
    /// Print the statistics and criteria of a persisted result.
    Report {
        #[arg(long)]
        result: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

#[derive(Subcommand)]
enum FbmCommand {
    Sample {
        #[arg(long)]
        hurst: f64,
        #[arg(long)]
        n: usize,
        /// Number of independent components.
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value = "circulant")]
        method: Method,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Rate {
        #[arg(long)]
        hurst: f64,
        #[arg(long, default_value_t = 0.55)]
        theta: f64,
        #[arg(long, default_value_t = 8192)]
        fine: usize,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256,512")]
        coarse: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FraccalcCommand {
    Lambda {
        #[arg(long)]
        alpha: f64,
        #[arg(long = "in")]
        input: PathBuf,
        /// Use only `⌈√n⌉` right endpoints plus the horizon.
        #[arg(long)]
        decimated: bool,
    },
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    g: PathBuf,
}

#[derive(Subcommand)]
enum YoungCommand {
    Integrate {
        #[command(flatten)]
        paths: PairArgs,
        /// `rs` (Riemann-Stieltjes sums) or `zahle` (fractional representation).
        #[arg(long, default_value = "rs")]
        method: String,
        #[arg(long)]
        alpha: Option<f64>,
    },
    CheckBound {
        #[command(flatten)]
        paths: PairArgs,
        #[arg(long)]
        alpha: f64,
    },
}

#[derive(Subcommand)]
enum SdeCommand {
    Solve {
        /// Builtin field (`zero`, `additive:<rows>`, `geometric[:σ₀]`, `sin`,
        /// `linear-drift[:σ]`) or `file:<expressions.json>`.
        #[arg(long)]
        coeffs: String,
        #[arg(long)]
        sigma0: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
        #[arg(long)]
        hurst: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "euler")]
        scheme: Scheme,
        #[arg(long, default_value = "circulant")]
        method: Method,
        /// Read the driver from a CSV path instead of sampling it.
        #[arg(long)]
        driver: Option<PathBuf>,
        /// Solve the backward equation with terminal condition at this time.
        #[arg(long)]
        backward: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failed checks exit with 1; errors with 2.
enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Fbm(c) => fbm(c),
        Command::Fraccalc(FraccalcCommand::Lambda { alpha, input, decimated }) => {
            let g = GridPath::load_csv(&input).with_context(|| format!("reading {}", input.display()))?;
            let alpha = FracOrder::new(alpha)?;
            let mode = if decimated { EndpointMode::Decimated } else { EndpointMode::Exact };
            let est = lambda_alpha_with(&g, alpha, mode)?;
            let bound = lambda_alpha_upper_bound(&g, alpha)?;
            print_json(&json!({
                "lambda": est.value,
                "argmax": [est.argmax.0, est.argmax.1],
                "upper_bound": bound,
                "mode": est.mode,
            }))?;
            Ok(Outcome::Pass)
        }
        Command::Young(c) => young(c),
        Command::Sde(c) => sde(c),
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let (result, dir) = experiment::run_and_persist(&cfg, out.as_deref())?;
            let mut stdout = io::stdout().lock();
            for c in &result.summary.criteria {
                writeln!(stdout, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
            }
            if let Some(d) = dir {
                writeln!(stdout, "results written to {}", d.display())?;
            }
            Ok(if result.passed() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Verify { result } => {
            let v = experiment::verify(&result)?;
            let mut stdout = io::stdout().lock();
            for m in &v.mismatches {
                writeln!(stdout, "mismatch: {m}")?;
            }
            writeln!(
                stdout,
                "{}: summary {}, criteria {}",
                result.display(),
                if v.consistent { "reproduced" } else { "NOT reproduced" },
                if v.passed { "pass" } else { "fail" }
            )?;
            Ok(if v.consistent && v.passed { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Report { result, format } => {
            let format: ReportFormat = format.parse()?;
            experiment::report(&result, format, io::stdout().lock())?;
            Ok(Outcome::Pass)
        }
    }
}

fn fbm(command: FbmCommand) -> Result<Outcome> {
    match command {
        FbmCommand::Sample {
            hurst,
            n,
            m,
            seed,
            horizon,
            method,
            out,
        } => {
            let spec = FbmSpec::new(hurst, m, horizon, n, seed)?;
            write_path(sample(&spec, method)?.path(), out.as_deref())?;
        }
        FbmCommand::Rate {
            hurst,
            theta,
            fine,
            coarse,
            seeds,
            out,
        } => {
            let cfg = ExperimentConfig::from_json(&json!({
                "kind": "rate",
                "hurst": hurst,
                "theta": theta,
                "fine_n": fine,
                "ladder": coarse,
                "seeds": {"start": 0, "count": seeds},
            })
            .to_string())?;
            let result = experiment::run(&cfg)?;
            let series = result
                .summary
                .series
                .iter()
                .find(|s| s.name == "holder_error")
                .context("rate summary has no error series")?;
            let mut text = String::from("coarse_n,median_error,q25,q75\n");
            for [x, y, lo, hi] in &series.points {
                text.push_str(&format!("{x},{y:e},{lo:e},{hi:e}\n"));
            }
            write_text(&text, out.as_deref())?;
        }
    }
    Ok(Outcome::Pass)
}

fn load_pair(p: &PairArgs) -> Result<(GridPath, GridPath)> {
    let f = GridPath::load_csv(&p.f).with_context(|| format!("reading {}", p.f.display()))?;
    let g = GridPath::load_csv(&p.g).with_context(|| format!("reading {}", p.g.display()))?;
    Ok((f, g))
}

fn young(command: YoungCommand) -> Result<Outcome> {
    match command {
        YoungCommand::Integrate { paths, method, alpha } => {
            let (f, g) = load_pair(&paths)?;
            match method.as_str() {
                "rs" => print_json(&json!({ "method": "rs", "value": rs_integral(&f, &g)? }))?,
                "zahle" => {
                    let alpha = alpha.map(FracOrder::new).transpose()?;
                    let z = zahle_integral(&f, &g, alpha)?;
                    print_json(&json!({
                        "method": "zahle",
                        "value": z.value,
                        "alpha": z.alpha,
                        "holder_f": z.holder_f,
                        "holder_g": z.holder_g,
                        "regular": z.regular,
                    }))?;
                }
                other => bail!("unknown method {other:?}; expected rs or zahle"),
            }
            Ok(Outcome::Pass)
        }
        YoungCommand::CheckBound { paths, alpha } => {
            let (f, g) = load_pair(&paths)?;
            let report = young_bound_check(&f, &g, FracOrder::new(alpha)?)?;
            print_json(&serde_json::to_value(report)?)?;
            Ok(if report.holds { Outcome::Pass } else { Outcome::Fail })
        }
    }
}

fn sde(command: SdeCommand) -> Result<Outcome> {
    let SdeCommand::Solve {
        coeffs,
        sigma0,
        x0,
        hurst,
        n,
        seed,
        horizon,
        alpha,
        scheme,
        method,
        driver,
        backward,
        out,
    } = command;
    let spec = match sigma0 {
        Some(s) if !coeffs.contains(|c: char| c.is_ascii_digit()) => format!("{coeffs}:{s}"),
        Some(_) => bail!("--sigma0 conflicts with the value inside {coeffs:?}"),
        None => coeffs,
    };
    let field = coefficient_field(&spec)?;
    let x0 = if x0.is_empty() { vec![0.0; field.dim()] } else { x0 };
    let driver = match driver {
        Some(p) => GridPath::load_csv(&p).with_context(|| format!("reading {}", p.display()))?,
        None => sample(&FbmSpec::new(hurst, field.noise_dim(), horizon, n, seed)?, method)?.into_path(),
    };
    let constants = field.constants();
    let steps = driver.steps();
    let cfg = match alpha {
        Some(a) => SolverConfig::new(a, steps, hurst, &constants)?,
        None => SolverConfig::centred(steps, hurst, &constants)?,
    }
    .with_scheme(scheme);
    let solution = match backward {
        Some(t) => solve_backward(&x0, t, field.as_ref(), &driver, &cfg)?,
        None => solve_forward(&x0, driver.origin(), field.as_ref(), &driver, &cfg)?,
    };
    write_path(&solution, out.as_deref())?;
    Ok(Outcome::Pass)
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_path(path: &GridPath, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => path.save_csv(p).with_context(|| format!("writing {}", p.display()))?,
        None => path.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn write_text(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
