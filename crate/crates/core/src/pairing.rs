//! Manifest construction: scans per-location image pools and draws
//! source/target pairs by seeded random sampling.
//!
//! Draws come from a counter-based generator keyed by
//! (seed, location_id, record index): each draw hashes its key with
//! SHA-256 and maps the leading words onto the index ranges. Manifests
//! are therefore a pure function of their inputs, and editing one
//! location never disturbs another location's records.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The four translation tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Sar2Eo,
    Sar2Rgb,
    Rgb2Ir,
    Sar2Ir,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Sar2Eo, Task::Sar2Rgb, Task::Rgb2Ir, Task::Sar2Ir];

    /// Modality sampled as the pair source.
    pub fn source_modality(&self) -> Modality {
        match self {
            Task::Sar2Eo | Task::Sar2Rgb | Task::Sar2Ir => Modality::Sar,
            Task::Rgb2Ir => Modality::Rgb,
        }
    }

    /// Modality sampled as the pair target. EO imagery lives in the rgb
    /// pool.
    pub fn target_modality(&self) -> Modality {
        match self {
            Task::Sar2Eo | Task::Sar2Rgb => Modality::Rgb,
            Task::Rgb2Ir | Task::Sar2Ir => Modality::Ir,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Task::Sar2Eo => "SAR2EO",
            Task::Sar2Rgb => "SAR2RGB",
            Task::Rgb2Ir => "RGB2IR",
            Task::Sar2Ir => "SAR2IR",
        };
        f.write_str(name)
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Task> {
        match s.to_ascii_uppercase().as_str() {
            "SAR2EO" => Ok(Task::Sar2Eo),
            "SAR2RGB" => Ok(Task::Sar2Rgb),
            "RGB2IR" => Ok(Task::Rgb2Ir),
            "SAR2IR" => Ok(Task::Sar2Ir),
            other => Err(Error::UnknownTask(other.to_string())),
        }
    }
}

/// Image modality, doubling as the pool subdirectory name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Rgb,
    Ir,
    Sar,
}

impl Modality {
    pub fn dir_name(&self) -> &'static str {
        match self {
            Modality::Rgb => "rgb",
            Modality::Ir => "ir",
            Modality::Sar => "sar",
        }
    }
}

/// All images of one capture location, split by modality. Paths are
/// sorted; existence is validated lazily when a manifest is executed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocationPool {
    pub location_id: String,
    pub rgb: Vec<PathBuf>,
    pub ir: Vec<PathBuf>,
    pub sar: Vec<PathBuf>,
}

impl LocationPool {
    pub fn list(&self, modality: Modality) -> &[PathBuf] {
        match modality {
            Modality::Rgb => &self.rgb,
            Modality::Ir => &self.ir,
            Modality::Sar => &self.sar,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rgb.is_empty() && self.ir.is_empty() && self.sar.is_empty()
    }
}

/// One sampled source/target pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRecord {
    pub location_id: String,
    pub source: PathBuf,
    pub target: PathBuf,
}

/// Ordered pair records for one task, with the seed that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairManifest {
    pub task: Task,
    pub seed: u64,
    pub records: Vec<PairRecord>,
}

/// Result of scanning a dataset root: usable pools plus human-readable
/// warnings about skipped locations.
#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub pools: Vec<LocationPool>,
    pub warnings: Vec<String>,
}

/// How many records to draw per location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairCount {
    /// Draw exactly this many source/target pairs per location.
    Sampled(u64),
    /// Emit every source/target pair whose filename stems match. Used for
    /// tasks trained on the full aligned data.
    AllAligned,
}

/// Scans `root/<location_id>/<modality>/<file>` into per-location pools.
///
/// Locations containing no images at all are reported in the warnings and
/// skipped. Files without a recognized image extension are ignored.
pub fn scan_locations(root: &Path) -> Result<ScanOutcome> {
    if !root.is_dir() {
        return Err(Error::MissingRoot(root.to_path_buf()));
    }
    let mut locations: Vec<String> = Vec::new();
    for entry in std::fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        if entry.path().is_dir() {
            locations.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    locations.sort();

    let mut pools = Vec::new();
    let mut warnings = Vec::new();
    if locations.is_empty() {
        warnings.push(format!("dataset root {} has no locations", root.display()));
    }
    for location_id in locations {
        let dir = root.join(&location_id);
        let pool = LocationPool {
            rgb: list_images(&dir.join(Modality::Rgb.dir_name()))?,
            ir: list_images(&dir.join(Modality::Ir.dir_name()))?,
            sar: list_images(&dir.join(Modality::Sar.dir_name()))?,
            location_id: location_id.clone(),
        };
        if pool.is_empty() {
            warnings.push(format!("location `{location_id}` has no images; skipped"));
            continue;
        }
        pools.push(pool);
    }
    Ok(ScanOutcome { pools, warnings })
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    if !dir.is_dir() {
        return Ok(files);
    }
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() && crate::codec::ImageFormat::from_path(&path).is_ok() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Draws a pair manifest over the given pools.
///
/// With [`PairCount::Sampled`], each location contributes `n` records
/// whose source and target are drawn uniformly and independently, with
/// replacement, from that location's two modality lists. With
/// [`PairCount::AllAligned`], each location contributes every
/// stem-matched pair. Identical inputs produce identical manifests.
pub fn sample_pairs(
    pools: &[LocationPool],
    task: Task,
    count: PairCount,
    seed: u64,
) -> Result<PairManifest> {
    if let PairCount::Sampled(0) = count {
        return Err(Error::MalformedManifest(
            "pairs per location must be >= 1".into(),
        ));
    }
    let mut ordered: Vec<&LocationPool> = pools.iter().collect();
    ordered.sort_by(|a, b| a.location_id.cmp(&b.location_id));

    let mut records = Vec::new();
    for pool in ordered {
        let sources = pool.list(task.source_modality());
        let targets = pool.list(task.target_modality());
        if sources.is_empty() {
            return Err(Error::ModalityUnavailable {
                location: pool.location_id.clone(),
                modality: task.source_modality().dir_name(),
                task: task.to_string(),
            });
        }
        if targets.is_empty() {
            return Err(Error::ModalityUnavailable {
                location: pool.location_id.clone(),
                modality: task.target_modality().dir_name(),
                task: task.to_string(),
            });
        }
        match count {
            PairCount::Sampled(n) => {
                for index in 0..n {
                    let (si, ti) = draw_pair_indices(
                        seed,
                        &pool.location_id,
                        index,
                        sources.len(),
                        targets.len(),
                    );
                    records.push(PairRecord {
                        location_id: pool.location_id.clone(),
                        source: sources[si].clone(),
                        target: targets[ti].clone(),
                    });
                }
            }
            PairCount::AllAligned => {
                let by_stem: BTreeMap<String, &PathBuf> = targets
                    .iter()
                    .rev() // keep the sorted-first path on stem collisions
                    .filter_map(|p| Some((stem_of(p)?, p)))
                    .collect();
                for source in sources {
                    if let Some(target) = stem_of(source).and_then(|s| by_stem.get(&s)) {
                        records.push(PairRecord {
                            location_id: pool.location_id.clone(),
                            source: source.clone(),
                            target: (*target).clone(),
                        });
                    }
                }
            }
        }
    }
    if records.is_empty() {
        return Err(Error::MalformedManifest(
            "no records: no locations, or no aligned pairs".into(),
        ));
    }
    Ok(PairManifest {
        task,
        seed,
        records,
    })
}

fn stem_of(path: &Path) -> Option<String> {
    path.file_stem().map(|s| s.to_string_lossy().into_owned())
}

/// Counter-based draw for one record: SHA-256 over the keyed counter,
/// first two 64-bit words mapped onto the two index ranges.
fn draw_pair_indices(
    seed: u64,
    location_id: &str,
    index: u64,
    source_count: usize,
    target_count: usize,
) -> (usize, usize) {
    let mut hasher = Sha256::new();
    hasher.update(b"irforge-pair-v1");
    hasher.update(seed.to_le_bytes());
    hasher.update((location_id.len() as u64).to_le_bytes());
    hasher.update(location_id.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let a = u64::from_le_bytes(digest[0..8].try_into().unwrap());
    let b = u64::from_le_bytes(digest[8..16].try_into().unwrap());
    (scale_to_range(a, source_count), scale_to_range(b, target_count))
}

/// Fixed-point map of a uniform u64 onto [0, n). The bias is below
/// n / 2^64, far under anything a uniformity test can see.
fn scale_to_range(word: u64, n: usize) -> usize {
    ((word as u128 * n as u128) >> 64) as usize
}

const MANIFEST_HEADER_PREFIX: &str = "#irforge-manifest v1 seed=";

impl PairManifest {
    /// Renders the tab-separated manifest file content.
    pub fn to_text(&self) -> Result<String> {
        let mut out = format!("{MANIFEST_HEADER_PREFIX}{}\n", self.seed);
        for record in &self.records {
            let source = path_field(&record.source)?;
            let target = path_field(&record.target)?;
            if record.location_id.contains(['\t', '\n']) {
                return Err(Error::MalformedManifest(format!(
                    "location id `{}` contains a tab or newline",
                    record.location_id
                )));
            }
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                self.task, record.location_id, source, target
            ));
        }
        Ok(out)
    }

    /// Parses manifest file content.
    pub fn from_text(text: &str) -> Result<PairManifest> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedManifest("empty manifest".into()))?;
        let seed: u64 = header
            .strip_prefix(MANIFEST_HEADER_PREFIX)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| {
                Error::MalformedManifest(format!("bad header line `{header}`"))
            })?;
        let mut task: Option<Task> = None;
        let mut records = Vec::new();
        for (number, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::MalformedManifest(format!(
                    "line {}: expected 4 tab-separated fields, got {}",
                    number + 2,
                    fields.len()
                )));
            }
            let line_task: Task = fields[0].parse()?;
            match task {
                None => task = Some(line_task),
                Some(t) if t == line_task => {}
                Some(t) => {
                    return Err(Error::MalformedManifest(format!(
                        "line {}: task {line_task} conflicts with {t}",
                        number + 2
                    )))
                }
            }
            records.push(PairRecord {
                location_id: fields[1].to_string(),
                source: PathBuf::from(fields[2]),
                target: PathBuf::from(fields[3]),
            });
        }
        let task = task.ok_or_else(|| Error::MalformedManifest("no records".into()))?;
        Ok(PairManifest {
            task,
            seed,
            records,
        })
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_from(path: &Path) -> Result<PairManifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PairManifest::from_text(&text)
    }
}

fn path_field(path: &Path) -> Result<String> {
    let s = path.to_string_lossy();
    if s.contains(['\t', '\n']) {
        return Err(Error::MalformedManifest(format!(
            "path `{s}` contains a tab or newline"
        )));
    }
    Ok(s.into_owned())
}
