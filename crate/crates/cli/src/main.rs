//! `spinflow` — a numerical laboratory for the spinorial energy
//! functional on flat tori.
//!
//! Subcommands share one configuration mechanism: an optional
//! `--config` file of `key = value` lines plus positional `key=value`
//! overrides. Exit codes: 0 success, 1 check-suite failure, 2
//! configuration error, 3 flow blow-up.

mod artifacts;
mod cmd_flow;
mod cmd_g2;
mod cmd_gradcheck;
mod cmd_oracle;
mod cmd_symbol;
mod config;
mod errors;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::errors::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "spinflow", version, about = "Spinorial energy flows on flat tori")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (`key = value` lines, `#` comments).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory for artifacts; reports go to stdout when omitted.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Inline overrides applied after the config file.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl CommonArgs {
    fn config(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        cfg.apply_overrides(&self.overrides)?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the negative gradient flow; writes diagnostics CSV,
    /// snapshots, and a run report.
    Flow(CommonArgs),
    /// Verify the discrete gradient against finite differences (and the
    /// second variation at critical points).
    Gradcheck(CommonArgs),
    /// Eigen/kernel analysis of the exact principal symbol of the
    /// linearized operator.
    Symbol(CommonArgs),
    /// Evaluate the associated 3-form and its Dirichlet functionals
    /// (dimension 7 only), either on a scenario or a saved snapshot.
    G2(CommonArgs),
    /// Dump exact reference values from the analytic point oracle.
    Oracle(CommonArgs),
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.cmd {
        Cmd::Flow(args) => {
            let cfg = args.config()?;
            let out = args.out.as_deref().ok_or_else(|| {
                CliError::Config(
                    "flow requires --out <DIR> for diagnostics and snapshots".into(),
                )
            })?;
            cmd_flow::run(&cfg, out)
        }
        Cmd::Gradcheck(args) => cmd_gradcheck::run(&args.config()?, args.out.as_deref()),
        Cmd::Symbol(args) => cmd_symbol::run(&args.config()?, args.out.as_deref()),
        Cmd::G2(args) => cmd_g2::run(&args.config()?, args.out.as_deref()),
        Cmd::Oracle(args) => cmd_oracle::run(&args.config()?, args.out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.exit_code()
        }
    }
}
