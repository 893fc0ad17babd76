//! `irforge pair`: scan a dataset root and write a pair manifest.

use std::path::PathBuf;

use clap::Args;

use irforge_core::pairing::{sample_pairs, scan_locations, PairCount, Task};

use crate::config::Config;
use crate::CliError;

#[derive(Args)]
pub struct PairArgs {
    /// Dataset root laid out as `<root>/<location>/<rgb|ir|sar>/<file>`.
    #[arg(long, value_name = "DIR")]
    root: PathBuf,
    /// Task to pair for: sar2eo, sar2rgb, rgb2ir or sar2ir.
    #[arg(long)]
    task: String,
    /// Records per location, or `all` for every stem-aligned pair.
    #[arg(long = "per-location", value_name = "N|all")]
    per_location: String,
    /// Sampling seed (default from config).
    #[arg(long)]
    seed: Option<u64>,
    /// Manifest file to write.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

pub fn execute(args: &PairArgs, config: &Config) -> Result<(), CliError> {
    let task: Task = args
        .task
        .parse()
        .map_err(|e| CliError::usage(format!("{e}")))?;
    let count = parse_per_location(&args.per_location)?;
    let seed = args.seed.unwrap_or(config.seed);

    let outcome = scan_locations(&args.root).map_err(|e| CliError::usage(e.to_string()))?;
    for warning in &outcome.warnings {
        eprintln!("pair: {warning}");
    }
    let manifest = sample_pairs(&outcome.pools, task, count, seed)
        .map_err(|e| CliError::usage(e.to_string()))?;
    manifest
        .write_to(&args.out)
        .map_err(|e| CliError::usage(e.to_string()))?;
    println!(
        "manifest: {} records for {} at seed {seed} -> {}",
        manifest.records.len(),
        task,
        args.out.display()
    );
    Ok(())
}

fn parse_per_location(raw: &str) -> Result<PairCount, CliError> {
    if raw.eq_ignore_ascii_case("all") {
        return Ok(PairCount::AllAligned);
    }
    let n: u64 = raw
        .parse()
        .map_err(|_| CliError::usage(format!("--per-location: `{raw}` is not a count or `all`")))?;
    if n == 0 {
        return Err(CliError::usage("--per-location must be >= 1"));
    }
    Ok(PairCount::Sampled(n))
}
