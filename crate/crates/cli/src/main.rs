//! irforge: batch RGB/SAR -> IR translation, pair-manifest sampling,
//! pipeline execution, and image-set scoring.
//!
//! Exit codes: 0 full success, 1 usage or configuration error, 2 partial
//! failure (some records or files failed while the batch completed).

mod config;
mod pair;
mod run;
mod score;
mod translate;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;

#[derive(Parser)]
#[command(
    name = "irforge",
    about = "Pixel-level RGB/SAR to IR translation and image-set scoring",
    version
)]
struct Cli {
    /// Optional key=value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate images: full rgb2ir chain, grayscale only, or density
    /// adjustment of grayscale inputs.
    Translate(translate::TranslateArgs),
    /// Scan a dataset root and sample a pair manifest.
    Pair(pair::PairArgs),
    /// Execute a task pipeline over a pair manifest.
    Run(run::RunArgs),
    /// Score a generated image set against a target set.
    Score(score::ScoreArgs),
}

/// Command failure carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    /// Usage or configuration problem: exit 1.
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 1,
        }
    }

    /// Some inputs failed while the batch completed: exit 2.
    pub fn partial(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version print and succeed; real parse errors are
            // usage errors.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    let config = match &cli.config {
        Some(path) => match Config::load(path) {
            Ok(config) => config,
            Err(err) => {
                eprintln!("irforge: {err}");
                return ExitCode::from(err.code);
            }
        },
        None => Config::default(),
    };

    let result = match cli.command {
        Command::Translate(args) => translate::execute(&args, &config),
        Command::Pair(args) => pair::execute(&args, &config),
        Command::Run(args) => run::execute(&args, &config),
        Command::Score(args) => score::execute(&args, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if !err.message.is_empty() {
                eprintln!("irforge: {err}");
            }
            ExitCode::from(err.code)
        }
    }
}
