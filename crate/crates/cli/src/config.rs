//! Optional key=value configuration file. Precedence everywhere:
//! command-line flag, then IRFORGE_WORKERS (for --workers), then config
//! file, then built-in default.

use std::path::Path;

use irforge_core::features::ExtractorSpec;
use irforge_core::translate::{RGB2IR_FACTOR, SAR2IR_FACTOR};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct Config {
    pub intensity_rgb2ir: f64,
    pub intensity_sar2ir: f64,
    pub workers: Option<usize>,
    pub seed: u64,
    pub patch_size: u32,
    pub scales: u32,
    pub filters_per_scale: u32,
    pub extractor_seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            intensity_rgb2ir: RGB2IR_FACTOR,
            intensity_sar2ir: SAR2IR_FACTOR,
            workers: None,
            seed: 0,
            patch_size: 8,
            scales: 3,
            filters_per_scale: 16,
            extractor_seed: 0,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        let mut config = Config::default();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!(
                    "config {}:{}: expected key=value",
                    path.display(),
                    number + 1
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                CliError::usage(format!(
                    "config {}:{}: invalid {what} `{value}`",
                    path.display(),
                    number + 1
                ))
            };
            match key {
                "intensity_rgb2ir" => {
                    config.intensity_rgb2ir = value.parse().map_err(|_| bad("factor"))?
                }
                "intensity_sar2ir" => {
                    config.intensity_sar2ir = value.parse().map_err(|_| bad("factor"))?
                }
                "workers" => {
                    let n: usize = value.parse().map_err(|_| bad("worker count"))?;
                    if n == 0 {
                        return Err(bad("worker count"));
                    }
                    config.workers = Some(n);
                }
                "seed" => config.seed = value.parse().map_err(|_| bad("seed"))?,
                "patch_size" => config.patch_size = value.parse().map_err(|_| bad("patch size"))?,
                "scales" => config.scales = value.parse().map_err(|_| bad("scale count"))?,
                "filters_per_scale" => {
                    config.filters_per_scale = value.parse().map_err(|_| bad("filter count"))?
                }
                "extractor_seed" => {
                    config.extractor_seed = value.parse().map_err(|_| bad("seed"))?
                }
                other => {
                    return Err(CliError::usage(format!(
                        "config {}:{}: unknown key `{other}`",
                        path.display(),
                        number + 1
                    )))
                }
            }
        }
        Ok(config)
    }

    pub fn extractor_spec(&self) -> Result<ExtractorSpec, CliError> {
        ExtractorSpec::new(
            self.patch_size,
            self.scales,
            self.filters_per_scale,
            self.extractor_seed,
        )
        .map_err(|e| CliError::usage(format!("extractor config: {e}")))
    }

    /// Worker count for batch commands: flag, IRFORGE_WORKERS, config
    /// file, then available parallelism.
    pub fn resolve_workers(&self, flag: Option<usize>) -> Result<usize, CliError> {
        if let Some(n) = flag {
            if n == 0 {
                return Err(CliError::usage("--workers must be >= 1".to_string()));
            }
            return Ok(n);
        }
        if let Ok(raw) = std::env::var("IRFORGE_WORKERS") {
            let n: usize = raw
                .parse()
                .map_err(|_| CliError::usage(format!("IRFORGE_WORKERS=`{raw}` is not a count")))?;
            if n == 0 {
                return Err(CliError::usage("IRFORGE_WORKERS must be >= 1".to_string()));
            }
            return Ok(n);
        }
        if let Some(n) = self.workers {
            return Ok(n);
        }
        Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1))
    }
}
