//! `irforge run`: execute a task pipeline over a manifest.

use std::path::PathBuf;

use clap::Args;

use irforge_core::pairing::{PairManifest, Task};
use irforge_core::pipeline::{plan_for, run_pipeline};
use irforge_core::translate::IntensityFactor;
use irforge_core::Error;

use crate::config::Config;
use crate::CliError;

#[derive(Args)]
pub struct RunArgs {
    /// Task to run: sar2eo, sar2rgb, rgb2ir or sar2ir.
    #[arg(long)]
    task: String,
    /// Pair manifest produced by `irforge pair`.
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    /// Output directory for generated images and run.log.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Directory of pre-generated external model outputs, matched to
    /// manifest sources by filename stem.
    #[arg(long, value_name = "DIR")]
    external: Option<PathBuf>,
    /// Intensity factor override for the density stage.
    #[arg(long)]
    factor: Option<f64>,
    /// Parallel worker count (default: IRFORGE_WORKERS, config, then
    /// available cores).
    #[arg(long)]
    workers: Option<usize>,
}

pub fn execute(args: &RunArgs, config: &Config) -> Result<(), CliError> {
    let task: Task = args
        .task
        .parse()
        .map_err(|e: Error| CliError::usage(e.to_string()))?;
    let manifest =
        PairManifest::read_from(&args.manifest).map_err(|e| CliError::usage(e.to_string()))?;
    if manifest.task != task {
        return Err(CliError::usage(format!(
            "--task {task} does not match manifest task {}",
            manifest.task
        )));
    }

    let mut plan = plan_for(task);
    if let Some(factor) = resolved_factor(args, config, task)? {
        plan = plan
            .with_factor(factor)
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    match (&args.external, plan.requires_external()) {
        (Some(dir), true) => {
            plan = plan
                .with_external_dir(dir)
                .map_err(|e| CliError::usage(e.to_string()))?;
        }
        (Some(_), false) => {
            return Err(CliError::usage(format!(
                "task {task} takes no --external directory"
            )))
        }
        (None, true) => {
            return Err(CliError::usage(format!(
                "task {task} requires --external with pre-generated outputs"
            )))
        }
        (None, false) => {}
    }

    let workers = config.resolve_workers(args.workers)?;
    let summary = run_pipeline(&plan, &manifest, &args.out, workers)
        .map_err(|e| CliError::usage(e.to_string()))?;

    print!("{}", summary.to_text());
    for failure in &summary.failures {
        eprintln!(
            "run: record {} {}: {}",
            failure.index,
            failure.source.display(),
            failure.message
        );
    }
    if summary.failed > 0 {
        Err(CliError::partial(format!(
            "{} of {} records failed",
            summary.failed, summary.record_count
        )))
    } else {
        Ok(())
    }
}

/// The --factor flag wins; otherwise tasks with a density stage read
/// their factor from the config defaults.
fn resolved_factor(
    args: &RunArgs,
    config: &Config,
    task: Task,
) -> Result<Option<IntensityFactor>, CliError> {
    let value = match (args.factor, task) {
        (Some(v), _) => v,
        (None, Task::Rgb2Ir) => config.intensity_rgb2ir,
        (None, Task::Sar2Ir) => config.intensity_sar2ir,
        (None, _) => return Ok(None),
    };
    IntensityFactor::new(value)
        .map(Some)
        .map_err(|e| CliError::usage(e.to_string()))
}
