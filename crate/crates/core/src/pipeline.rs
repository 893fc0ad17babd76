//! Per-task stage plans and the batch executor that runs them over a
//! pair manifest.
//!
//! External generators are never executed here: an `external_generator`
//! stage simply reads pre-generated counterpart files (matched by source
//! filename stem) from a caller-supplied directory. Records are
//! independent; one bad file fails its own record and nothing else.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::codec::{read_image, write_image};
use crate::error::{Error, Result};
use crate::features::{extract_with_bank, ExtractorSpec, FilterBank};
use crate::metrics::{evaluate_set_with_features, EvalPairWithFeatures, ScoreReport};
use crate::pairing::{PairManifest, PairRecord, Task};
use crate::raster::{quantize, GrayMap, Raster};
use crate::translate::{reconstruct_density, to_grayscale, IntensityFactor};

/// One step of a task plan.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    /// Consume pre-generated model outputs from this directory.
    ExternalGenerator { dir: Option<PathBuf> },
    /// Convert to a grayscale map (channel mean).
    Grayscale,
    /// Scale the gray map by the intensity factor and clamp to [0, 255].
    Density { factor: IntensityFactor },
    /// Score final outputs against manifest targets after the batch.
    Evaluate { spec: ExtractorSpec },
}

/// The ordered stages for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskPlan {
    task: Task,
    stages: Vec<Stage>,
}

/// Canonical plan for a task, with the default intensity factors.
pub fn plan_for(task: Task) -> TaskPlan {
    let stages = match task {
        Task::Rgb2Ir => vec![
            Stage::Grayscale,
            Stage::Density {
                factor: IntensityFactor::rgb2ir_default(),
            },
        ],
        Task::Sar2Ir => vec![
            Stage::ExternalGenerator { dir: None },
            Stage::Grayscale,
            Stage::Density {
                factor: IntensityFactor::sar2ir_default(),
            },
        ],
        Task::Sar2Eo | Task::Sar2Rgb => vec![Stage::ExternalGenerator { dir: None }],
    };
    TaskPlan { task, stages }
}

impl TaskPlan {
    pub fn task(&self) -> Task {
        self.task
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn requires_external(&self) -> bool {
        self.stages
            .iter()
            .any(|s| matches!(s, Stage::ExternalGenerator { .. }))
    }

    /// The factor of the density stage, if the plan has one.
    pub fn intensity(&self) -> Option<IntensityFactor> {
        self.stages.iter().find_map(|s| match s {
            Stage::Density { factor } => Some(*factor),
            _ => None,
        })
    }

    /// Points the external stage at the directory of pre-generated
    /// outputs. Errors if the plan has no external stage.
    pub fn with_external_dir(mut self, dir: &Path) -> Result<TaskPlan> {
        let mut found = false;
        for stage in &mut self.stages {
            if let Stage::ExternalGenerator { dir: slot } = stage {
                *slot = Some(dir.to_path_buf());
                found = true;
            }
        }
        if !found {
            return Err(Error::InvalidPlan(format!(
                "task {} takes no external generator outputs",
                self.task
            )));
        }
        Ok(self)
    }

    /// Overrides the density factor. Errors if the plan has no density
    /// stage.
    pub fn with_factor(mut self, factor: IntensityFactor) -> Result<TaskPlan> {
        let mut found = false;
        for stage in &mut self.stages {
            if let Stage::Density { factor: slot } = stage {
                *slot = factor;
                found = true;
            }
        }
        if !found {
            return Err(Error::InvalidPlan(format!(
                "task {} has no density stage to apply a factor to",
                self.task
            )));
        }
        Ok(self)
    }

    /// Appends an evaluation stage scoring outputs against targets.
    pub fn with_evaluation(mut self, spec: ExtractorSpec) -> TaskPlan {
        self.stages.retain(|s| !matches!(s, Stage::Evaluate { .. }));
        self.stages.push(Stage::Evaluate { spec });
        self
    }

    fn evaluation_spec(&self) -> Option<&ExtractorSpec> {
        self.stages.iter().find_map(|s| match s {
            Stage::Evaluate { spec } => Some(spec),
            _ => None,
        })
    }

    /// External stage directory, once set.
    fn external_dir(&self) -> Result<Option<&Path>> {
        for stage in &self.stages {
            if let Stage::ExternalGenerator { dir } = stage {
                return match dir {
                    Some(d) => Ok(Some(d)),
                    None => Err(Error::InvalidPlan(format!(
                        "task {} requires an external generator output directory",
                        self.task
                    ))),
                };
            }
        }
        Ok(None)
    }
}

/// Outcome of one failed record.
#[derive(Debug, Clone)]
pub struct RecordFailure {
    pub index: usize,
    pub source: PathBuf,
    pub message: String,
}

/// Batch outcome: totals, per-record failures, and the score report when
/// an evaluation stage was planned and at least one pair survived.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub task: Task,
    pub record_count: usize,
    pub processed: usize,
    pub failed: usize,
    pub failures: Vec<RecordFailure>,
    pub report: Option<ScoreReport>,
}

impl RunSummary {
    /// Key-value rendering, score report appended when present. Contains
    /// nothing time- or machine-dependent.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "task={}\nrecords={}\nprocessed={}\nfailed={}\n",
            self.task, self.record_count, self.processed, self.failed
        );
        if let Some(report) = &self.report {
            out.push_str(&report.to_text());
        }
        out
    }
}

enum PixelState {
    Image(Raster),
    Gray(GrayMap),
}

struct RecordOutput {
    stem: String,
    file_name: String,
    /// Kept in memory only when an evaluation stage will consume it.
    output: Option<Raster>,
}

/// One translate-and-write unit of work. Sampling with replacement can
/// list the same source several times; all of its records share one job,
/// so every output path has exactly one writer.
struct Job {
    source: PathBuf,
    stem: String,
    file_name: String,
    record_indices: Vec<usize>,
}

/// Executes the plan over every manifest record, writing outputs (and
/// `run.log`) under `out_dir`. Failures are per-record; the batch always
/// runs to completion.
pub fn run_pipeline(
    plan: &TaskPlan,
    manifest: &PairManifest,
    out_dir: &Path,
    workers: usize,
) -> Result<RunSummary> {
    if manifest.task != plan.task {
        return Err(Error::InvalidPlan(format!(
            "manifest is for task {}, plan is for {}",
            manifest.task, plan.task
        )));
    }
    if workers == 0 {
        return Err(Error::InvalidPlan("worker count must be >= 1".into()));
    }
    let external_dir = plan.external_dir()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidPlan(format!("thread pool: {e}")))?;

    let mut failures: Vec<RecordFailure> = Vec::new();
    let (jobs, collisions) = plan_jobs(plan, manifest);
    failures.extend(collisions);

    let job_results: Vec<std::result::Result<Raster, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                process_job(plan, job, external_dir, out_dir).map_err(|e| e.to_string())
            })
            .collect()
    });

    let keep_rasters = plan.evaluation_spec().is_some();
    let mut outputs: Vec<(usize, RecordOutput)> = Vec::new();
    for (job, result) in jobs.iter().zip(job_results) {
        for &index in &job.record_indices {
            match &result {
                Ok(raster) => outputs.push((
                    index,
                    RecordOutput {
                        stem: job.stem.clone(),
                        file_name: job.file_name.clone(),
                        output: keep_rasters.then(|| raster.clone()),
                    },
                )),
                Err(message) => failures.push(RecordFailure {
                    index,
                    source: manifest.records[index].source.clone(),
                    message: message.clone(),
                }),
            }
        }
    }
    outputs.sort_by_key(|(index, _)| *index);

    let report = match plan.evaluation_spec() {
        Some(spec) => {
            let (pairs, eval_failures) =
                build_eval_pairs(&outputs, &manifest.records, spec, &pool);
            let failed_indices: Vec<usize> = eval_failures.iter().map(|f| f.index).collect();
            failures.extend(eval_failures);
            outputs.retain(|(i, _)| !failed_indices.contains(i));
            if pairs.is_empty() {
                None
            } else {
                Some(pool.install(|| evaluate_set_with_features(pairs))?)
            }
        }
        None => None,
    };

    failures.sort_by_key(|f| f.index);
    let processed = outputs.len();
    let summary = RunSummary {
        task: plan.task,
        record_count: manifest.records.len(),
        processed,
        failed: failures.len(),
        failures,
        report,
    };
    write_run_log(out_dir, manifest, &summary, &outputs)?;
    Ok(summary)
}

/// Groups the manifest into one job per output file. The first record
/// naming an output owns it; a later record whose *different* source
/// would land on the same output name fails deterministically instead of
/// racing the owner.
fn plan_jobs(plan: &TaskPlan, manifest: &PairManifest) -> (Vec<Job>, Vec<RecordFailure>) {
    let task_suffix = plan.task().to_string().to_lowercase();
    let mut jobs: Vec<Job> = Vec::new();
    let mut by_name: std::collections::BTreeMap<String, usize> = std::collections::BTreeMap::new();
    let mut failures = Vec::new();
    for (index, record) in manifest.records.iter().enumerate() {
        let Some(stem) = record
            .source
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
        else {
            failures.push(RecordFailure {
                index,
                source: record.source.clone(),
                message: format!("source path `{}` has no file stem", record.source.display()),
            });
            continue;
        };
        let file_name = format!("{stem}_{task_suffix}.png");
        match by_name.get(&file_name) {
            Some(&job_id) if jobs[job_id].source == record.source => {
                jobs[job_id].record_indices.push(index);
            }
            Some(&job_id) => failures.push(RecordFailure {
                index,
                source: record.source.clone(),
                message: format!(
                    "output `{file_name}` already produced from `{}`",
                    jobs[job_id].source.display()
                ),
            }),
            None => {
                by_name.insert(file_name.clone(), jobs.len());
                jobs.push(Job {
                    source: record.source.clone(),
                    stem,
                    file_name,
                    record_indices: vec![index],
                });
            }
        }
    }
    (jobs, failures)
}

fn process_job(
    plan: &TaskPlan,
    job: &Job,
    external_dir: Option<&Path>,
    out_dir: &Path,
) -> Result<Raster> {
    let input_path = match external_dir {
        Some(dir) => find_external_counterpart(dir, &job.stem)?,
        None => job.source.clone(),
    };
    let mut state = PixelState::Image(read_image(&input_path)?);

    for stage in plan.stages() {
        state = match stage {
            Stage::ExternalGenerator { .. } | Stage::Evaluate { .. } => state,
            Stage::Grayscale => match state {
                PixelState::Image(img) => PixelState::Gray(to_grayscale(&img)?),
                PixelState::Gray(_) => {
                    return Err(Error::InvalidPlan("duplicate grayscale stage".into()))
                }
            },
            Stage::Density { factor } => {
                let gray = match state {
                    PixelState::Gray(g) => g,
                    PixelState::Image(img) if img.channels() == 1 => GrayMap::new(
                        img.width(),
                        img.height(),
                        img.samples().iter().map(|&s| s as f64).collect(),
                    )?,
                    PixelState::Image(img) => {
                        return Err(Error::ChannelMismatch {
                            expected: 1,
                            actual: img.channels(),
                        })
                    }
                };
                PixelState::Gray(reconstruct_density(&gray, *factor))
            }
        };
    }

    let output = match state {
        PixelState::Image(img) => img,
        PixelState::Gray(g) => quantize(&g)?,
    };
    write_image(&out_dir.join(&job.file_name), &output)?;
    Ok(output)
}

/// Pre-generated outputs are matched by source stem; extensions are tried
/// in a fixed order so lookup is deterministic.
fn find_external_counterpart(dir: &Path, stem: &str) -> Result<PathBuf> {
    for ext in ["png", "ppm", "pgm"] {
        let candidate = dir.join(format!("{stem}.{ext}"));
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(Error::MissingExternalOutput {
        stem: stem.to_string(),
        dir: dir.to_path_buf(),
    })
}

fn build_eval_pairs(
    outputs: &[(usize, RecordOutput)],
    records: &[PairRecord],
    spec: &ExtractorSpec,
    pool: &rayon::ThreadPool,
) -> (Vec<EvalPairWithFeatures>, Vec<RecordFailure>) {
    let bank = FilterBank::build(spec);
    let attempts: Vec<std::result::Result<EvalPairWithFeatures, RecordFailure>> =
        pool.install(|| {
            outputs
                .par_iter()
                .map(|(index, out)| {
                    let record = &records[*index];
                    let build = || -> Result<EvalPairWithFeatures> {
                        let generated = out
                            .output
                            .as_ref()
                            .expect("rasters are retained when evaluation is staged");
                        let target = read_image(&record.target)?;
                        if !generated.same_shape(&target) {
                            return Err(Error::ShapeMismatch(format!(
                                "output {}x{}x{} vs target {}x{}x{}",
                                generated.width(),
                                generated.height(),
                                generated.channels(),
                                target.width(),
                                target.height(),
                                target.channels()
                            )));
                        }
                        let generated_features = extract_with_bank(generated, spec, &bank)?;
                        let target_features = extract_with_bank(&target, spec, &bank)?;
                        Ok(EvalPairWithFeatures {
                            id: out.stem.clone(),
                            generated: generated.clone(),
                            target,
                            generated_features,
                            target_features,
                        })
                    };
                    build().map_err(|e| RecordFailure {
                        index: *index,
                        source: record.source.clone(),
                        message: format!("evaluation: {e}"),
                    })
                })
                .collect()
        });
    let mut pairs = Vec::new();
    let mut failures = Vec::new();
    for attempt in attempts {
        match attempt {
            Ok(pair) => pairs.push(pair),
            Err(failure) => failures.push(failure),
        }
    }
    (pairs, failures)
}

/// One manifest-ordered status line per record.
fn write_run_log(
    out_dir: &Path,
    manifest: &PairManifest,
    summary: &RunSummary,
    outputs: &[(usize, RecordOutput)],
) -> Result<()> {
    let mut lines: Vec<String> = Vec::with_capacity(manifest.records.len());
    let mut by_index: std::collections::BTreeMap<usize, &RecordOutput> =
        std::collections::BTreeMap::new();
    for (index, out) in outputs {
        by_index.insert(*index, out);
    }
    let failure_by_index: std::collections::BTreeMap<usize, &RecordFailure> =
        summary.failures.iter().map(|f| (f.index, f)).collect();
    for (index, record) in manifest.records.iter().enumerate() {
        let line = match (by_index.get(&index), failure_by_index.get(&index)) {
            (Some(out), None) => format!(
                "{index}\tOK\t{}\t{}",
                record.source.display(),
                out.file_name
            ),
            (_, Some(failure)) => format!(
                "{index}\tFAIL\t{}\t{}",
                record.source.display(),
                failure.message
            ),
            _ => format!("{index}\tFAIL\t{}\tunknown", record.source.display()),
        };
        lines.push(line);
    }
    let path = out_dir.join("run.log");
    std::fs::write(&path, lines.join("\n") + "\n").map_err(|e| Error::io(&path, e))
}
