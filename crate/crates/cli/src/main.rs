//! `fundsize` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod analytic;
mod calibrate;
mod compare;
mod gini;
mod manifest;
mod output;
mod params;
mod replay;
mod simulate;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

pub const DEFAULT_OUT_DIR: &str = "fundsize-out";

#[derive(Debug, Parser)]
#[command(name = "fundsize", version, about = "Entry, exit and growth model of mutual fund sizes")]
pub struct Cli {
    /// Root seed of all random streams.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Directory receiving the command's outputs and manifest.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[command(flatten)]
    pub params: params::ParamArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo ensemble of the industry.
    Simulate(simulate::Args),
    /// Closed-form solutions for constant coefficients.
    Analytic(analytic::Args),
    /// Estimate model parameters from a fund-month panel.
    Calibrate(calibrate::Args),
    /// ECDFs, QQ pairs and KS distance of two samples.
    Compare(compare::Args),
    /// Gini coefficients of Pareto or lognormal size distributions.
    Gini(gini::Args),
    /// Synthetic fund-month panel generated by the model.
    Synth(synth::Args),
    /// Re-run the command recorded in a manifest and check its outputs.
    Replay(replay::Args),
}

impl Cli {
    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

pub fn execute(cli: &Cli, argv: &[String]) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate::run(cli, a, argv),
        Command::Analytic(a) => analytic::run(cli, a, argv),
        Command::Calibrate(a) => calibrate::run(cli, a, argv),
        Command::Compare(a) => compare::run(cli, a, argv),
        Command::Gini(a) => gini::run(cli, a, argv),
        Command::Synth(a) => synth::run(cli, a, argv),
        Command::Replay(a) => replay::run(cli, a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&argv);
    match execute(&cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(exit_code(&e))
        }
    }
}

fn report(e: &anyhow::Error) {
    eprintln!("error: {e:#}");
    for cause in e.chain() {
        match cause.downcast_ref::<fundsize::Error>() {
            Some(fundsize::Error::InvalidParams(diags)) => {
                for d in diags {
                    eprintln!("  {d}");
                }
            }
            Some(fundsize::Error::Schema(rows)) => {
                for v in rows {
                    eprintln!("  {v}");
                }
            }
            _ => {}
        }
    }
}

/// 2 for rejected inputs, 1 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    let rejected = e.chain().any(|c| {
        matches!(
            c.downcast_ref::<fundsize::Error>(),
            Some(fundsize::Error::InvalidParams(_) | fundsize::Error::Schema(_) | fundsize::Error::InvalidArgument(_))
        )
    });
    if rejected {
        2
    } else {
        1
    }
}
