//! `irforge translate`: the pixel-level ops over one file or a directory.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use irforge_core::codec::{read_image, write_image};
use irforge_core::raster::{quantize, GrayMap, Raster};
use irforge_core::translate::{reconstruct_density, rgb_to_ir, to_grayscale, IntensityFactor};
use irforge_core::Error;

use crate::config::Config;
use crate::util::list_image_files;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TranslateTask {
    /// Grayscale conversion, density adjustment, quantization.
    Rgb2ir,
    /// Grayscale conversion only.
    Gray,
    /// Density adjustment of an already-gray image.
    Density,
}

#[derive(Args)]
pub struct TranslateArgs {
    /// Operation to apply.
    #[arg(long, value_enum)]
    task: TranslateTask,
    /// Input image file or directory of images.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Output image file (file input) or directory (directory input).
    #[arg(long = "out", value_name = "PATH")]
    output: PathBuf,
    /// Intensity factor for rgb2ir (default from config, 1.3) and
    /// density (default 1.0). Not applicable to gray.
    #[arg(long)]
    factor: Option<f64>,
}

pub fn execute(args: &TranslateArgs, config: &Config) -> Result<(), CliError> {
    let factor = match args.task {
        TranslateTask::Gray => {
            if args.factor.is_some() {
                return Err(CliError::usage(
                    "--factor is not applicable to --task gray",
                ));
            }
            None
        }
        TranslateTask::Rgb2ir => {
            let value = args.factor.unwrap_or(config.intensity_rgb2ir);
            Some(parse_factor(value)?)
        }
        TranslateTask::Density => {
            let value = args.factor.unwrap_or(1.0);
            Some(parse_factor(value)?)
        }
    };

    if args.input.is_dir() {
        translate_directory(args, factor)
    } else {
        match translate_file(args.task, factor, &args.input, &args.output) {
            Ok(()) => Ok(()),
            Err(err) => {
                eprintln!("translate: {}: {err}", args.input.display());
                Err(CliError::partial(String::new()))
            }
        }
    }
}

fn parse_factor(value: f64) -> Result<IntensityFactor, CliError> {
    IntensityFactor::new(value).map_err(|e| CliError::usage(e.to_string()))
}

fn translate_directory(
    args: &TranslateArgs,
    factor: Option<IntensityFactor>,
) -> Result<(), CliError> {
    let files = list_image_files(&args.input)?;
    if files.is_empty() {
        return Err(CliError::usage(format!(
            "no input images in {}",
            args.input.display()
        )));
    }
    std::fs::create_dir_all(&args.output)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.output.display())))?;

    let mut seen = std::collections::BTreeSet::new();
    let mut failed = 0usize;
    for file in &files {
        let result = (|| -> Result<(), Error> {
            let stem = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| Error::MalformedFile("input has no file stem".into()))?;
            if !seen.insert(stem.clone()) {
                return Err(Error::MalformedFile(format!(
                    "duplicate stem `{stem}` would overwrite an earlier output"
                )));
            }
            translate_file(
                args.task,
                factor,
                file,
                &args.output.join(format!("{stem}.png")),
            )
        })();
        if let Err(err) = result {
            eprintln!("translate: {}: {err}", file.display());
            failed += 1;
        }
    }
    if failed > 0 {
        Err(CliError::partial(format!(
            "{failed} of {} files failed",
            files.len()
        )))
    } else {
        Ok(())
    }
}

fn translate_file(
    task: TranslateTask,
    factor: Option<IntensityFactor>,
    input: &Path,
    output: &Path,
) -> Result<(), Error> {
    let img = read_image(input)?;
    let result = match task {
        TranslateTask::Rgb2ir => rgb_to_ir(&img, factor.expect("factor resolved"))?,
        TranslateTask::Gray => quantize(&to_grayscale(&img)?)?,
        TranslateTask::Density => {
            let gray = as_gray_map(&img)?;
            quantize(&reconstruct_density(&gray, factor.expect("factor resolved")))?
        }
    };
    write_image(output, &result)
}

fn as_gray_map(img: &Raster) -> Result<GrayMap, Error> {
    if img.channels() != 1 {
        return Err(Error::ChannelMismatch {
            expected: 1,
            actual: img.channels(),
        });
    }
    GrayMap::new(
        img.width(),
        img.height(),
        img.samples().iter().map(|&s| s as f64).collect(),
    )
}
