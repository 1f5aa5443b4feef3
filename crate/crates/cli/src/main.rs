//! `kcontact`: derivation reports, simulations and verification suites for
//! k-contact Lagrangian field theories.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure or a
//! failed verification.

mod config;
mod derive;
mod failure;
mod inverse;
mod report;
mod simulate;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{GridArgs, ModelArgs, RunConfig};
use failure::{CliResult, Failure};

const THREADS_ENV: &str = "KCONTACT_THREADS";

#[derive(Parser)]
#[command(
    name = "kcontact",
    version,
    about = "k-contact Lagrangian field theories with dissipation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Geometry at sample points: L, E_L, momenta, Hessian, Reeb fields, SOPDE.
    Derive(DeriveArgs),
    /// Integrate the field equations and write a CSV trace with a JSON manifest.
    Simulate(SimulateArgs),
    /// Run verification suites on sampled points or a stored trace.
    Verify(VerifyArgs),
    /// Build the Lagrangian of a linear second-order PDE and check it.
    Inverse(InverseArgs),
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct Sampling {
    /// Seed for sample points.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of random sample points.
    #[arg(long)]
    samples: Option<usize>,
    /// Sample coordinates are drawn from [-range, range].
    #[arg(long)]
    range: Option<f64>,
}

impl Sampling {
    fn resolve(&self, cfg: &RunConfig, samples: usize) -> (u64, usize, f64) {
        (
            self.seed.or(cfg.seed).unwrap_or(0),
            self.samples.or(cfg.samples).unwrap_or(samples),
            self.range.or(cfg.range).unwrap_or(2.0),
        )
    }
}

#[derive(Args)]
struct DeriveArgs {
    #[command(flatten)]
    common: Common,
    /// Sample point, e.g. "q=0.5;v=1,2,-1;s=0.1,0,0". Repeatable.
    #[arg(long = "point")]
    points: Vec<String>,
    #[command(flatten)]
    sampling: Sampling,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    /// dt = courant * (smallest spacing); default 0.4.
    #[arg(long)]
    courant: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    output_every: Option<usize>,
    /// Output directory for trace.csv and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Symmetry whose dissipation law is recorded. Repeatable.
    #[arg(long)]
    symmetry: Vec<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Suites: reeb, legendre, sopde, dissipation, symmetry, inverse-roundtrip, hdw.
    #[arg(long = "suite", value_delimiter = ',')]
    suites: Vec<String>,
    #[command(flatten)]
    sampling: Sampling,
    /// Trace directory for the dissipation and hdw suites.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Symmetry generator: du, dq<i>, ds<a>, scaling, stringY.
    #[arg(long, alias = "field")]
    symmetry: Option<String>,
}

#[derive(Args)]
struct InverseArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sampling: Sampling,
}

fn setup_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::config(format!("{THREADS_ENV} must be a positive integer, got \"{value}\"")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::config(e.to_string()))
}

fn execute(cli: Cli) -> CliResult<bool> {
    setup_threads()?;
    match cli.command {
        Command::Derive(a) => {
            let cfg = config::load(a.common.config.as_deref())?;
            let (seed, samples, range) = a.sampling.resolve(&cfg, 1);
            let points = if a.points.is_empty() {
                cfg.points.clone().unwrap_or_default()
            } else {
                a.points
            };
            let input = derive::DeriveInput {
                model: a.common.model.apply(cfg.model)?,
                points,
                seed,
                samples,
                range,
            };
            report::emit(&derive::run(&input)?, a.common.report.as_deref())?;
            Ok(true)
        }
        Command::Simulate(a) => {
            let cfg = config::load(a.common.config.as_deref())?;
            let model = a.common.model.apply(cfg.model)?;
            let k = model.spec()?.build()?.k();
            let out = a
                .out
                .or(cfg.out)
                .ok_or_else(|| Failure::config("simulate needs --out"))?;
            let input = simulate::SimulateInput {
                grid: a.grid.apply(cfg.grid, k - 1)?,
                model,
                dt: a.dt.or(cfg.dt),
                courant: if a.dt.is_some() {
                    a.courant
                } else {
                    a.courant.or(cfg.courant)
                },
                t_end: a.t_end.or(cfg.t_end).unwrap_or(5.0),
                output_every: a.output_every.or(cfg.output_every).unwrap_or(1),
                initial: cfg.initial,
                out,
                symmetries: if a.symmetry.is_empty() {
                    cfg.symmetry.map(|s| vec![s])
                } else {
                    Some(a.symmetry)
                },
            };
            report::emit(&simulate::run(&input)?, a.common.report.as_deref())?;
            Ok(true)
        }
        Command::Verify(a) => {
            let cfg = config::load(a.common.config.as_deref())?;
            let (seed, samples, range) = a.sampling.resolve(&cfg, 100);
            let input = verify::VerifyInput {
                model: a.common.model.apply(cfg.model)?,
                suites: if a.suites.is_empty() {
                    cfg.suites.unwrap_or_default()
                } else {
                    a.suites
                },
                seed,
                samples,
                range,
                trace: a.trace.or(cfg.trace),
                symmetry: a.symmetry.or(cfg.symmetry),
            };
            let (report, pass) = verify::run(&input)?;
            report::emit(&report, a.common.report.as_deref())?;
            Ok(pass)
        }
        Command::Inverse(a) => {
            let cfg = config::load(a.common.config.as_deref())?;
            let (seed, samples, range) = a.sampling.resolve(&cfg, 100);
            let input = inverse::InverseInput {
                model: a.common.model.apply(cfg.model)?,
                seed,
                samples,
                range,
            };
            let (report, pass) = inverse::run(&input)?;
            report::emit(&report, a.common.report.as_deref())?;
            Ok(pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("kcontact: verification failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("kcontact: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
