//! `irforge score`: score a generated image set against a target set,
//! matching files by filename stem.

use std::path::{Path, PathBuf};

use clap::Args;

use irforge_core::codec::read_image;
use irforge_core::features::{extract_with_bank, load_features, FeatureSet, FilterBank};
use irforge_core::metrics::{evaluate_set_with_features, EvalPairWithFeatures};
use irforge_core::Error;

use crate::config::Config;
use crate::util::{list_image_files, stem_index};
use crate::CliError;

#[derive(Args)]
pub struct ScoreArgs {
    /// Directory of generated images.
    #[arg(long, value_name = "DIR")]
    generated: PathBuf,
    /// Directory of target (ground-truth) images.
    #[arg(long, value_name = "DIR")]
    target: PathBuf,
    /// Directory of externally computed features holding
    /// `generated/<stem>.iff` and `target/<stem>.iff` files; replaces the
    /// built-in extractor.
    #[arg(long, value_name = "DIR")]
    features: Option<PathBuf>,
    /// Also write the report to this file.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

pub fn execute(args: &ScoreArgs, config: &Config) -> Result<(), CliError> {
    let generated_files = list_image_files(&args.generated)?;
    let target_files = list_image_files(&args.target)?;
    let warn_duplicate = |path: &Path| {
        eprintln!("score: duplicate stem, ignoring {}", path.display());
    };
    let generated_index = stem_index(&generated_files, warn_duplicate);
    let target_index = stem_index(&target_files, warn_duplicate);

    for stem in generated_index.keys() {
        if !target_index.contains_key(stem) {
            eprintln!("score: stem `{stem}` only in generated set; excluded");
        }
    }
    for stem in target_index.keys() {
        if !generated_index.contains_key(stem) {
            eprintln!("score: stem `{stem}` only in target set; excluded");
        }
    }

    let spec = config.extractor_spec()?;
    let bank = FilterBank::build(&spec);
    let mut pairs: Vec<EvalPairWithFeatures> = Vec::new();
    let mut matched = 0usize;
    for (stem, generated_path) in &generated_index {
        let Some(target_path) = target_index.get(stem) else {
            continue;
        };
        matched += 1;
        let built = (|| -> Result<EvalPairWithFeatures, Error> {
            let generated = read_image(generated_path)?;
            let target = read_image(target_path)?;
            if !generated.same_shape(&target) {
                return Err(Error::ShapeMismatch(format!(
                    "generated {}x{}x{} vs target {}x{}x{}",
                    generated.width(),
                    generated.height(),
                    generated.channels(),
                    target.width(),
                    target.height(),
                    target.channels()
                )));
            }
            let (generated_features, target_features) = match &args.features {
                Some(dir) => (
                    load_feature_file(&dir.join("generated"), stem)?,
                    load_feature_file(&dir.join("target"), stem)?,
                ),
                None => (
                    extract_with_bank(&generated, &spec, &bank)?,
                    extract_with_bank(&target, &spec, &bank)?,
                ),
            };
            Ok(EvalPairWithFeatures {
                id: stem.clone(),
                generated,
                target,
                generated_features,
                target_features,
            })
        })();
        match built {
            Ok(pair) => pairs.push(pair),
            Err(err) => eprintln!("score: `{stem}`: {err}; excluded"),
        }
    }

    if matched == 0 {
        return Err(CliError::usage(
            "no filename stems matched between the generated and target sets",
        ));
    }
    if pairs.is_empty() {
        return Err(CliError::usage(
            "every matched pair was excluded; nothing to score",
        ));
    }

    let report =
        evaluate_set_with_features(pairs).map_err(|e| CliError::usage(e.to_string()))?;
    let text = report.to_text();
    print!("{text}");
    if let Some(path) = &args.report {
        std::fs::write(path, &text)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn load_feature_file(dir: &Path, stem: &str) -> Result<FeatureSet, Error> {
    let path = dir.join(format!("{stem}.iff"));
    let bytes = std::fs::read(&path)
        .map_err(|e| Error::MalformedFeatureFile(format!("{}: {e}", path.display())))?;
    load_features(&bytes)
}
