//! `edgeworth` — equilibria of exchange economies from the command line.
//!
//! Three subcommands:
//!
//! * `solve FILE --mode walrasian|yquilibrium|dual-negishi` runs a solver on
//!   an economy file and writes a JSON (or CSV) report.
//! * `sample FILE --set ups|vps|contract --resolution R` scans utility
//!   possibility clouds or the efficient-trade surface to CSV.
//! * `demo ID` regenerates the bundled demonstration data sets (`fig1`,
//!   `fig3-regions`, `fig5`) and prints closed-form references next to the
//!   computed values.
//!
//! Exit codes: 0 on success, 1 on input or validation errors, 2 when the
//! requested object does not exist (no market-clearing price, or the weight
//! iteration fails to converge) — the report is still written in that case,
//! with a warning. Warnings alone never change a 0 into a 2.

mod demos;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use edgeworth::economy::io::economy_from_json;
use edgeworth::oracle;
use edgeworth::solver::{
    dual_negishi_minimize, solve_walrasian_endowment, solve_walrasian_income, solve_yquilibrium,
    SolveError,
};
use edgeworth::{Economy, Ownership, SolverConfig};

use report::{EconomyDigest, ReportBody, RunReport};

/// Environment variable read when `--threads` is absent.
const THREADS_ENV: &str = "EDGEWORTH_THREADS";

#[derive(Parser)]
#[command(
    name = "edgeworth",
    version,
    about = "Walrasian equilibria and Yquilibria of exchange economies",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Cap the number of worker threads (default: EDGEWORTH_THREADS, then
    /// all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an economy file for an equilibrium.
    Solve(SolveArgs),
    /// Sample utility clouds or the efficient-trade surface to CSV.
    Sample(SampleArgs),
    /// Regenerate a bundled demonstration data set.
    Demo(DemoArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Economy description (JSON).
    file: PathBuf,
    /// Which solution concept to compute.
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Override one solver setting, e.g. `--config tol-solve=1e-8`.
    /// May be repeated. Keys: grid-resolution, multistart-count,
    /// refine-iterations, tol-solve, tol-accept, price-floor, seed.
    #[arg(long = "config", value_name = "KEY=VALUE")]
    config: Vec<String>,
    /// Seed for the randomized stages (shorthand for --config seed=N).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Write the report to this file instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SampleArgs {
    /// Economy description (JSON).
    file: PathBuf,
    /// Which set to sample.
    #[arg(long, value_enum)]
    set: SampleSet,
    /// Grid resolution per scan axis (at least 2).
    #[arg(long, default_value_t = 120, value_name = "R")]
    resolution: usize,
    /// Write the output to this file instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format: `csv` emits the bare table, `json` wraps it in a run
    /// report.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct DemoArgs {
    /// Which demonstration to regenerate: fig1, fig3-regions, or fig5.
    id: String,
    /// Directory for the emitted CSV files (created if missing).
    #[arg(long, default_value = ".", value_name = "DIR")]
    out_dir: PathBuf,
    /// Override one solver setting (same keys as `solve`).
    #[arg(long = "config", value_name = "KEY=VALUE")]
    config: Vec<String>,
    /// Seed for the randomized stages.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Market-clearing prices with optimizing consumers.
    Walrasian,
    /// Potential-maximizing individually-rational trade (coincides with
    /// walrasian when an equilibrium exists).
    Yquilibrium,
    /// Welfare-weight iteration on indirect utilities.
    DualNegishi,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleSet {
    /// Utility vectors of market-clearing allocations.
    Ups,
    /// Restricted indirect-utility vectors over prices and incomes.
    Vps,
    /// Efficient individually-rational trades with supporting prices.
    Contract,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let run = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Demo(args) => demos::cmd_demo(args),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Bound rayon's global pool before any parallel work happens.
fn configure_threads(flag: Option<usize>) -> Result<()> {
    let from_env = || -> Result<Option<usize>> {
        match std::env::var(THREADS_ENV) {
            Ok(v) => {
                let n: usize = v
                    .parse()
                    .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
                Ok(Some(n))
            }
            Err(_) => Ok(None),
        }
    };
    let Some(n) = flag.or(from_env()?) else { return Ok(()) };
    if n == 0 {
        bail!("--threads must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("worker pool already started")?;
    Ok(())
}

/// Load and validate an economy file, naming the file in every failure.
fn load_economy(path: &PathBuf) -> Result<Economy> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let economy = economy_from_json(&text)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok(economy)
}

/// Build the solver configuration from defaults, `--config` overrides and
/// the `--seed` shorthand, then validate it.
fn build_config(overrides: &[String], seed: Option<u64>) -> Result<SolverConfig> {
    let mut config = SolverConfig::default();
    for entry in overrides {
        let Some((key, value)) = entry.split_once('=') else {
            bail!("--config expects KEY=VALUE, got {entry:?}");
        };
        apply_override(&mut config, key.trim(), value.trim())
            .with_context(|| format!("in --config {entry:?}"))?;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(config)
}

fn apply_override(config: &mut SolverConfig, key: &str, value: &str) -> Result<()> {
    let bad_num = |what: &str| format!("{what} is not a valid number: {value:?}");
    match key {
        "grid-resolution" => {
            config.grid_resolution = value.parse().with_context(|| bad_num(key))?
        }
        "multistart-count" => {
            config.multistart_count = value.parse().with_context(|| bad_num(key))?
        }
        "refine-iterations" => {
            config.refine_iterations = value.parse().with_context(|| bad_num(key))?
        }
        "tol-solve" => config.tol_solve = value.parse().with_context(|| bad_num(key))?,
        "tol-accept" => config.tol_accept = value.parse().with_context(|| bad_num(key))?,
        "price-floor" => config.price_floor = value.parse().with_context(|| bad_num(key))?,
        "seed" => config.seed = value.parse().with_context(|| bad_num(key))?,
        other => bail!(
            "unknown configuration key {other:?} (expected grid-resolution, \
             multistart-count, refine-iterations, tol-solve, tol-accept, \
             price-floor, or seed)"
        ),
    }
    Ok(())
}

/// Reconstruct the invocation for the report's `command` field.
fn command_echo() -> String {
    std::env::args().skip(1).collect::<Vec<_>>().join(" ")
}

fn write_output(out: Option<&PathBuf>, contents: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, contents)
            .with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode> {
    let economy = load_economy(&args.file)?;
    let config = build_config(&args.config, args.seed)?;
    let digest = EconomyDigest::of(&economy);

    let started = Instant::now();
    let mut warnings: Vec<String> = Vec::new();
    let mut exit = ExitCode::SUCCESS;
    let results = match args.mode {
        ModeArg::Walrasian => {
            let solved = match economy.ownership {
                Ownership::Incomes(_) => {
                    solve_walrasian_income(&economy, &config).map(|r| vec![r])
                }
                Ownership::Endowments(_) => solve_walrasian_endowment(&economy, &config),
            };
            match solved {
                Ok(rs) => ReportBody::Equilibria { equilibria: rs },
                Err(SolveError::NoRoot { incumbent }) => {
                    // A shortfall beyond the acceptance tolerance means the
                    // equilibrium genuinely does not exist; anything closer
                    // is reported as a borderline root.
                    if incumbent.potential < -config.tol_accept {
                        exit = ExitCode::from(2);
                    }
                    warnings.push(format!(
                        "no market-clearing price found: the best potential is {:.6e}; \
                         reporting the incumbent optimum",
                        incumbent.potential
                    ));
                    ReportBody::Equilibria { equilibria: vec![*incumbent] }
                }
                Err(SolveError::Economy(e)) => bail!("{e}"),
                Err(e @ SolveError::NoConverge { .. }) => bail!("{e}"),
            }
        }
        ModeArg::Yquilibrium => match solve_yquilibrium(&economy, &config) {
            Ok(r) => ReportBody::Equilibria { equilibria: vec![r] },
            Err(SolveError::Economy(e)) => bail!("{e}"),
            Err(e) => bail!("{e}"),
        },
        ModeArg::DualNegishi => match dual_negishi_minimize(&economy, &config) {
            Ok(outcome) => ReportBody::WeightIteration { outcome },
            Err(SolveError::NoConverge { iterations, outcome }) => {
                exit = ExitCode::from(2);
                warnings.push(format!(
                    "weight iteration did not converge within {iterations} iterations; \
                     reporting the last state"
                ));
                ReportBody::WeightIteration { outcome: *outcome }
            }
            Err(SolveError::Economy(e)) => bail!("{e}"),
            Err(e @ SolveError::NoRoot { .. }) => bail!("{e}"),
        },
    };
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;

    let report = RunReport {
        command: command_echo(),
        library_version: edgeworth::VERSION.to_string(),
        seed: config.seed,
        config,
        economy: digest,
        results,
        warnings,
        wall_time_ms,
    };
    let rendered = match args.format {
        Format::Json => report.to_json(),
        Format::Csv => match &report.results {
            ReportBody::Equilibria { equilibria } => {
                report::equilibria_to_csv(equilibria, &economy.goods)
            }
            ReportBody::WeightIteration { outcome } => {
                report::negishi_to_csv(outcome, &economy.goods)
            }
            _ => unreachable!("solve only produces equilibria or weight iterations"),
        },
    };
    write_output(args.out.as_ref(), &rendered)?;
    Ok(exit)
}

fn cmd_sample(args: SampleArgs) -> Result<ExitCode> {
    let economy = load_economy(&args.file)?;
    if args.resolution < 2 {
        bail!("--resolution must be at least 2, got {}", args.resolution);
    }
    let digest = EconomyDigest::of(&economy);
    let started = Instant::now();
    let (results, csv) = match args.set {
        SampleSet::Ups => {
            let cloud = oracle::sample_ups(&economy, args.resolution)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let csv = cloud.to_csv();
            (ReportBody::Cloud { cloud }, csv)
        }
        SampleSet::Vps => {
            let cloud = oracle::sample_vps(&economy, args.resolution, true)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let csv = cloud.to_csv();
            (ReportBody::Cloud { cloud }, csv)
        }
        SampleSet::Contract => {
            let points = oracle::contract_surface_sample(&economy, args.resolution)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let csv = report::contract_to_csv(&points, &economy.goods);
            (ReportBody::Contract { points }, csv)
        }
    };
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;

    let rendered = match args.format {
        Format::Csv => csv,
        Format::Json => RunReport {
            command: command_echo(),
            library_version: edgeworth::VERSION.to_string(),
            seed: 0,
            config: SolverConfig::default(),
            economy: digest,
            results,
            warnings: Vec::new(),
            wall_time_ms,
        }
        .to_json(),
    };
    write_output(args.out.as_ref(), &rendered)?;
    Ok(ExitCode::SUCCESS)
}
