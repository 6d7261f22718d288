//! Command-line front end: `relax`, `simulate`, `find-orbit`, `continue` and
//! `verify`, each driven by a TOML config file.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 numerical failure, 3 collapse of
//! a closed string, 4 energy outside the range where the requested orbit can
//! exist, 64 configuration error.

mod commands;
pub mod config;
pub mod record;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
use commands::Ctx;
pub use config::{ConfigError, EnergySpec, OrbitJob, RunConfig};
pub use record::{OrbitRecord, Provenance, SampleColumns};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_COLLAPSE: i32 = 3;
pub const EXIT_ENERGY: i32 = 4;
pub const EXIT_CONFIG: i32 = 64;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CollapseDetected { .. } => EXIT_COLLAPSE,
        Error::EnergyOutOfRange { .. } => EXIT_ENERGY,
        Error::InvalidParams(_)
        | Error::InvalidArgument(_)
        | Error::TooFewVertices { .. }
        | Error::NullClassWithoutSeed
        | Error::InvalidString(_)
        | Error::StabilityViolation { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

#[derive(Debug, Parser)]
#[command(name = "jacobi-orbits", version, about = "Constant-energy trajectories and periodic orbits of the double pendulum")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// TOML run configuration.
    config: PathBuf,
    /// Override a config entry, e.g. `--set relax.energy=umin+20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Relax a string under the Jacobi metric (pinned ends or a closed loop).
    Relax(RunArgs),
    /// Simulate the equations of motion from a state or a relaxed string.
    Simulate(RunArgs),
    /// Search toroidal, brake or disk orbits.
    FindOrbit(RunArgs),
    /// Continue an orbit family in the energy.
    Continue(RunArgs),
    /// Re-validate an orbit record by forward simulation.
    Verify(RunArgs),
}

/// Parses the arguments, runs the command and returns the exit code.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    let (name, args, f): (&'static str, RunArgs, fn(&Ctx) -> Result<i32, CliError>) = match cli.command {
        Command::Relax(a) => ("relax", a, commands::cmd_relax),
        Command::Simulate(a) => ("simulate", a, commands::cmd_simulate),
        Command::FindOrbit(a) => ("find-orbit", a, commands::cmd_find_orbit),
        Command::Continue(a) => ("continue", a, commands::cmd_continue),
        Command::Verify(a) => ("verify", a, commands::cmd_verify),
    };
    let cfg = match RunConfig::load(&args.config, &args.set) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let ctx = Ctx::new(cfg, &args.config, name);
    match f(&ctx) {
        Ok(code) => code,
        Err(CliError::Config(m)) => {
            eprintln!("config error: {}: {m}", args.config.display());
            EXIT_CONFIG
        }
        Err(CliError::Io(m)) => {
            eprintln!("I/O error: {m}");
            EXIT_IO
        }
    }
}
