//! Command line front end shared by the `besovlab` binary and tests.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Result;
use crate::experiment::{cmd_decompose, cmd_exponents, cmd_gen, cmd_profile, cmd_report, ExperimentConfig, Overrides};

#[derive(Debug, Parser)]
#[command(name = "besovlab", version, about = "Besov energies, critical exponents and decompositions")]
pub struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Cross-check kernels against direct loops on small spaces.
    #[arg(long, global = true)]
    pub oracle: bool,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Write the spaces of every configured level.
    Gen,
    /// Multiscale energy profiles of the configured functions.
    Profile,
    /// Scaling factor, walk dimension and critical exponents.
    Exponents,
    /// Components and irreducibility verdict.
    Decompose,
    /// Summarize the artifacts in the output directory.
    Report,
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        out: cli.out.clone(),
        jobs: cli.jobs,
        oracle: cli.oracle,
        seed: cli.seed,
    });
    cfg.validate()?;
    Ok(match cli.command {
        Command::Gen => cmd_gen(&cfg)?,
        Command::Profile => vec![cmd_profile(&cfg)?],
        Command::Exponents => vec![cmd_exponents(&cfg)?],
        Command::Decompose => vec![cmd_decompose(&cfg)?],
        Command::Report => vec![cmd_report(&cfg)?],
    })
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
