use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use fedwave::federation::{self, ServerSpec};
use fedwave::harness::{self, ExperimentConfig, SweepAxis};
use fedwave::{theory, FamilyName};

#[derive(Parser)]
#[command(name = "fedwave", version, about = "Federated private wavelet regression simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Effective resolution D for a list of servers.
    SolveD {
        #[arg(long)]
        gamma: f64,
        /// JSON file holding an array of {"n", "eps", "delta"}.
        #[arg(long)]
        servers: PathBuf,
    },
    /// Homogeneous minimax rate.
    Rates {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        m: f64,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = f64::INFINITY)]
        p: f64,
    },
    /// One Monte Carlo run.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo runs along one axis and a log-log slope fit.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compares empirical and analytic sensitivities; fails if any ratio exceeds 1
    /// beyond rounding.
    SensTest {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Global,
    Point,
}

/// Input errors map to exit code 2, failed checks to 1.
enum Failure {
    BadInput(anyhow::Error),
    Check(String),
}

impl From<fedwave::Error> for Failure {
    fn from(e: fedwave::Error) -> Self {
        Failure::BadInput(e.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::BadInput(e)
    }
}

/// Formats with 15 significant digits.
fn sig15(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let decimals = (14 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::SolveD { gamma, servers } => {
            let text = std::fs::read_to_string(&servers).with_context(|| format!("reading {}", servers.display()))?;
            let specs: Vec<ServerSpec> = serde_json::from_str(&text).context("parsing server list")?;
            for s in &specs {
                s.validate()?;
            }
            println!("{}", sig15(federation::solve_resolution(gamma, &specs)?));
        }
        Command::Rates { mode, m, n, eps, alpha, p } => {
            let rate = match mode {
                Mode::Global => theory::rate_global_hom(m, n, eps, alpha)?,
                Mode::Point => theory::rate_point_hom(m, n, eps, alpha, p)?,
            };
            println!("{}", sig15(rate));
        }
        Command::Simulate { config, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let report = harness::monte_carlo(&cfg)?;
            harness::emit_csv(std::slice::from_ref(&report), &out)?;
            println!(
                "mean_risk {} stderr {} theory_rate {} (D {}, L {}, tau {})",
                report.mean_risk, report.stderr, report.theory_rate, report.d, report.level, report.tau
            );
        }
        Command::Sweep { config, axis, values, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let axis: SweepAxis = axis.parse()?;
            let values: Vec<f64> = values
                .split(',')
                .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad sweep value {v:?}")))
                .collect::<anyhow::Result<_>>()?;
            let result = harness::rate_sweep(&cfg, axis, &values)?;
            harness::emit_csv(&result.reports, &out)?;
            let summary = serde_json::json!({
                "abscissa": result.abscissa,
                "slope": result.fit.slope,
                "slope_stderr": result.fit.slope_stderr,
                "intercept": result.fit.intercept,
                "r_squared": result.fit.r_squared,
                "points": result.fit.points,
            });
            println!("{summary}");
        }
        Command::SensTest { family, trials, seed } => {
            let name: FamilyName = family.parse()?;
            if !matches!(name, FamilyName::Haar | FamilyName::Daubechies2) {
                return Err(Failure::BadInput(anyhow::anyhow!("sens-test supports haar and daubechies-2")));
            }
            let fam = fedwave::build_family(name, fedwave::wavelet::DEFAULT_CASCADE_DEPTH)?;
            let cases = harness::sensitivity_audit(&fam, &[2, 4, 6], &[1.0, 5.0], &[1, 10, 100], trials, seed)?;
            let worst = cases.iter().map(|c| c.ratio()).fold(0.0, f64::max);
            println!("{}", sig15(worst));
            if !cases.iter().all(|c| c.within_bounds()) {
                return Err(Failure::Check(format!("empirical sensitivity exceeds the bound (ratio {worst})")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::BadInput(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
