//! Command-line front end.

pub mod commands;
pub mod config;
pub mod output;
pub mod shape;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use commands::{cmd_estimate, cmd_oracle, cmd_sweep, cmd_table, Settings};
use config::ExperimentConfig;
use output::emit;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_ORACLE_FAIL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "ruinnet", version, about = "Ruin probabilities of agent groups sharing risks on a bipartite network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: GlobalOpts,
}

#[derive(Debug, Subcommand, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Ψ^Q(u) and P(P^Q < 1) for the configured group.
    Estimate,
    /// Every group size 1..q for each ns on the grid.
    Sweep,
    /// Normal approximation, Stein bound and simulated tail per ns.
    Table,
    /// Formula estimate against direct path simulation (q·d ≤ 100).
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Args, Clone)]
pub struct GlobalOpts {
    /// JSON experiment file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// SVG plot of a sweep.
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t)]
    pub format: Format,
}

/// What `main` turns into an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    OracleFail,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::OracleFail => EXIT_ORACLE_FAIL,
        }
    }
}

/// Exit status for an error: configuration and input problems give 2.
pub fn error_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) => 1,
        _ => EXIT_CONFIG,
    }
}

fn render<T: Serialize>(format: Format, report: &T, csv: impl FnOnce() -> Result<String>) -> Result<String> {
    match format {
        Format::Csv => csv(),
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let opts = &cli.opts;
    let path = opts.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    if opts.svg.is_some() && cli.command != Command::Sweep {
        return Err(Error::Config("--svg applies to sweep only".into()));
    }
    let config = ExperimentConfig::load(path)?;
    let settings = Settings::resolve(config, opts.seed, opts.replicates)?;
    let out = opts.out.as_deref();
    match cli.command {
        Command::Estimate => {
            let r = cmd_estimate(&settings)?;
            emit(out, &render(opts.format, &r, || r.to_csv())?)?;
        }
        Command::Sweep => {
            if settings.config.group.is_some() {
                eprintln!("note: sweep covers every group size; the configured group is ignored");
            }
            let r = cmd_sweep(&settings)?;
            emit(out, &render(opts.format, &r, || r.to_csv())?)?;
            if let Some(svg) = &opts.svg {
                std::fs::write(svg, r.to_svg())?;
            }
            for p in &r.shapes {
                match (&p.shape, &p.note) {
                    (Some(shape), _) => eprintln!("ns = {}: {shape}", p.ns),
                    (None, note) => eprintln!("ns = {}: unclassified ({})", p.ns, note.as_deref().unwrap_or("")),
                }
            }
        }
        Command::Table => {
            let r = cmd_table(&settings)?;
            emit(out, &render(opts.format, &r, || r.to_csv())?)?;
        }
        Command::Oracle => {
            let r = cmd_oracle(&settings)?;
            emit(out, &render(opts.format, &r, || r.to_csv())?)?;
            eprintln!(
                "{}: psi_hat {} oracle {} discrepancy {} tolerance {}",
                r.verdict(),
                output::fmt_g(r.psi_hat),
                output::fmt_g(r.oracle),
                output::fmt_g(r.discrepancy),
                output::fmt_g(r.tolerance)
            );
            if !r.pass {
                return Ok(Outcome::OracleFail);
            }
        }
    }
    Ok(Outcome::Success)
}
