//! `netmeasure`: degeneracy, complexity and robustness reports for reaction
//! networks and built-in test systems.
//!
//! Exit codes: 0 success, 1 unreadable or malformed input, 2 no stable
//! equilibrium (or every chain diverged), 3 an enumeration or size cap was
//! hit, 4 inputs inconsistent with each other.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod analyze;
mod error;
mod report;
mod simulate;
mod sweep;
mod system;
mod validation;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use error::{CliError, CliResult};
use system::System;

#[derive(Debug, Parser)]
#[command(name = "netmeasure", version, about = "Degeneracy, complexity and robustness of networked dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a network file and print a JSON summary.
    Parse {
        file: String,
    },
    /// Gaussian-limit measures and robustness at the stable equilibrium.
    Analyze(analyze::AnalyzeArgs),
    /// Interaction MI over a grid of rate constants, as CSV.
    Sweep(sweep::SweepArgs),
    /// Write a stationary sample ensemble.
    Simulate(simulate::SimulateArgs),
    /// Compare an ensemble with the closed-form predictions for its system.
    Validate(simulate::ValidateArgs),
    /// Print the JSON schema of analysis reports.
    Schema,
}

#[derive(Serialize)]
struct ParseSummary {
    source: String,
    fingerprint: String,
    species: Vec<String>,
    reactions: Vec<String>,
    params: Vec<Param>,
}

#[derive(Serialize)]
struct Param {
    name: String,
    value: f64,
}

fn parse_summary(file: &str) -> CliResult<ParseSummary> {
    let sys = System::load(file)?;
    let net = sys
        .network()
        .ok_or_else(|| CliError::parse("parse expects a network file"))?;
    Ok(ParseSummary {
        source: file.to_string(),
        fingerprint: netmeasure_core::mc::fingerprint(&net.to_string()),
        species: sys.names.clone(),
        reactions: net.reactions().iter().map(|r| net.reaction_string(r)).collect(),
        params: net
            .params()
            .iter()
            .map(|(name, value)| Param {
                name: name.clone(),
                value: *value,
            })
            .collect(),
    })
}

fn emit(text: &str, path: Option<&str>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::parse(format!("{p}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Parse { file } => emit(&report::to_json(&parse_summary(&file)?)?, None),
        Command::Analyze(args) => {
            let r = analyze::run(&args)?;
            emit(&report::to_json(&r)?, args.json.as_deref())
        }
        Command::Sweep(args) => emit(&sweep::run(&args)?, args.csv.as_deref()),
        Command::Simulate(args) => emit(&report::to_json(&simulate::run_simulate(&args)?)?, None),
        Command::Validate(args) => emit(&report::to_json(&simulate::run_validate(&args)?)?, None),
        Command::Schema => emit(report::SCHEMA, None),
    }
}

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("NETMEASURE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::parse(format!("NETMEASURE_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::parse(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // clap's own usage code (2) would collide with the instability code.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match init_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
