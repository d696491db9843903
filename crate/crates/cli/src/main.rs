use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use skewgarch::data::DayCount;
use skewgarch_cli::config::parse_model;
use skewgarch_cli::{run, Command, Overrides, RunConfig};

/// Bayesian GARCH(1,1)-in-Mean models with skewed Student-t innovations.
#[derive(Parser)]
#[command(name = "skewgarch", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed for sampling, evidence estimation and simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Comma-separated models (M0..M6 or mechanism names).
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_model)]
    models: Option<Vec<skewgarch::MechanismKind>>,

    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Risk-free rate CSV, or `none` for a zero rate.
    #[arg(long, global = true)]
    riskfree: Option<String>,

    #[arg(long, global = true, value_enum)]
    day_count: Option<DayCountArg>,

    /// Excess-return CSV (`date,excess_return`).
    #[arg(long, global = true)]
    data: Option<PathBuf>,

    /// Total sampler iterations including burn-in.
    #[arg(long, global = true)]
    iterations: Option<usize>,

    #[arg(long, global = true)]
    burn_in: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample the posterior of each model; writes chain_<id>.csv and summary_<id>.json.
    Fit,
    /// Estimate evidence and posterior model probabilities; writes comparison.csv and comparison.json.
    Compare,
    /// Simulate a GARCH-M series from the `simulate` section of the config.
    Simulate,
    /// Turn a price CSV (plus optional risk-free quotes) into excess returns.
    Convert,
}

#[derive(Clone, Copy, ValueEnum)]
enum DayCountArg {
    Act360,
    Act365,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        seed: cli.seed,
        models: cli.models,
        output_dir: cli.output_dir,
        riskfree: cli.riskfree.map(|r| if r.eq_ignore_ascii_case("none") { None } else { Some(PathBuf::from(r)) }),
        day_count: cli.day_count.map(|d| match d {
            DayCountArg::Act360 => DayCount::Act360,
            DayCountArg::Act365 => DayCount::Act365,
        }),
        returns: cli.data,
        iterations: cli.iterations,
        burn_in: cli.burn_in,
    };
    let command = match cli.command {
        Cmd::Fit => Command::Fit,
        Cmd::Compare => Command::Compare,
        Cmd::Simulate => Command::Simulate,
        Cmd::Convert => Command::Convert,
    };
    let result = RunConfig::load(cli.config.as_deref(), &overrides).and_then(|cfg| run(command, &cfg));
    match result {
        Ok(outcome) => {
            for (model, msg) in &outcome.failures {
                eprintln!("error: {model}: {msg}");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
