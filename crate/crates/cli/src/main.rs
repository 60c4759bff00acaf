//! `microcavity` command-line front end.
//!
//! Every subcommand reads the run configuration, does its work and writes
//! CSV tables into the output directory. Exit status is 0 on success, 1 when
//! a fit or analysis fails on valid input and 2 for input or configuration
//! errors.

// `!(x > 0.0)` also rejects NaN, which is the point of those checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod context;
mod failure;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{fit_geometry, linewidth, modes, purcell, synth, vibration};
use crate::context::Context;
use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "microcavity", version, about = "Hybrid diamond-membrane microcavity modelling and scan analysis")]
struct Cli {
    /// JSON run configuration (defaults to the built-in reference cavity).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory receiving output tables.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Seed for every random draw.
    #[arg(long, global = true, value_name = "U64", default_value_t = 0)]
    seed: u64,

    /// Also render simple SVG line plots next to the tables.
    #[arg(long, global = true)]
    svg: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dispersion and air-character tables versus air gap.
    Modes(modes::Args),
    /// Fit air gap and membrane thickness to measured mode frequencies.
    FitGeometry(fit_geometry::Args),
    /// Sideband-calibrated linewidth and finesse from cavity-length scans.
    Linewidth(linewidth::Args),
    /// Vibration broadening from repeated laser sweeps.
    Vibration(vibration::Args),
    /// Purcell enhancement, ZPL fraction and lifetime curves.
    Purcell(purcell::Args),
    /// Seeded synthetic datasets for every fitter.
    Synth(synth::Args),
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = Context::new(cli.config.as_deref(), cli.out, cli.seed, cli.svg)?;
    match cli.command {
        Command::Modes(a) => modes::run(&ctx, &a),
        Command::FitGeometry(a) => fit_geometry::run(&ctx, &a),
        Command::Linewidth(a) => linewidth::run(&ctx, &a),
        Command::Vibration(a) => vibration::run(&ctx, &a),
        Command::Purcell(a) => purcell::run(&ctx, &a),
        Command::Synth(a) => synth::run(&ctx, &a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
