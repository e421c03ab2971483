//! Command-line front end: loads an experiment config, runs one action and
//! writes its report, structured result and trace.
//!
//! Exit status is 0 when the action passes or converges, 1 when it fails or
//! its hypotheses fail, and 2 on input or I/O errors.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ifmfix::report::ToRecords;
use ifmfix::solver::SolveConfig;
use serde::Serialize;

use crate::commands::{run_action, validate_result, RunSummary, RESULT_FILE};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::to_json;

pub const OUT_DIR_ENV: &str = "IFMFIX_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "ifmfix-out";

#[derive(Debug, Parser)]
#[command(name = "ifmfix", version, about = "Fixed points in intuitionistic fuzzy metric spaces")]
pub struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `solve.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Skips hypothesis checks before solving.
    #[arg(long, global = true)]
    pub no_hypothesis_checks: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Audits the configured space or operator pair.
    Audit,
    /// Runs the configured contraction check.
    Check,
    /// Runs the configured solve.
    Solve,
    /// Prints the default solver settings and probe grid as TOML.
    ExportDefaults,
    /// Re-verifies the convergence certificate of a stored solve result.
    Validate {
        /// Result file; defaults to `result.json` in the output directory.
        result: Option<PathBuf>,
    },
}

/// What a command produced, and the exit status it maps to.
#[derive(Debug)]
pub enum Outcome {
    Run(RunSummary),
    Text { text: String, passed: bool },
}

impl Outcome {
    pub fn passed(&self) -> bool {
        match self {
            Outcome::Run(s) => s.passed,
            Outcome::Text { passed, .. } => *passed,
        }
    }
}

#[derive(Serialize)]
struct Defaults {
    solve: SolveConfig,
}

fn load_for(cli: &Cli, kind: &str) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("`{kind}` needs --config <path>")))?;
    let mut config = ExperimentConfig::load(path)?;
    if config.action.kind() != kind {
        return Err(CliError::Config {
            field: "action.kind".into(),
            message: format!(
                "config action is `{}` but the subcommand is `{kind}`",
                config.action.kind()
            ),
        });
    }
    if let Some(seed) = cli.seed {
        config.solve.seed = seed;
    }
    if cli.no_hypothesis_checks {
        config.solve.hypothesis_checks = false;
    }
    Ok(config)
}

fn out_dir(cli: &Cli, config: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.and_then(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Audit | Command::Check | Command::Solve => {
            let kind = match cli.command {
                Command::Audit => "audit",
                Command::Check => "check",
                _ => "solve",
            };
            let config = load_for(cli, kind)?;
            let out = out_dir(cli, Some(&config));
            Ok(Outcome::Run(run_action(&config, &out)?))
        }
        Command::ExportDefaults => {
            let text = toml::to_string(&Defaults {
                solve: SolveConfig::default(),
            })
            .expect("defaults serialize");
            Ok(Outcome::Text { text, passed: true })
        }
        Command::Validate { result } => {
            let path = match result {
                Some(p) => p.clone(),
                None => {
                    let config = match &cli.config {
                        Some(p) => Some(ExperimentConfig::load(p)?),
                        None => None,
                    };
                    out_dir(cli, config.as_ref()).join(RESULT_FILE)
                }
            };
            let validation = validate_result(&path)?;
            Ok(Outcome::Text {
                text: validation.render_records(),
                passed: validation.passed(),
            })
        }
    }
}

/// Parses `args`, runs the command and reports to stdout and stderr.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            match &outcome {
                Outcome::Run(summary) => print!("{}", to_json(summary)),
                Outcome::Text { text, .. } => print!("{text}"),
            }
            ExitCode::from(if outcome.passed() { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
