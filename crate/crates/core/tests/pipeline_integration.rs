//! End-to-end pipeline tests over real files: batch/unit equivalence,
//! fault isolation, the external-generator path, idempotence, and the
//! staged evaluation.

mod common;

use std::path::{Path, PathBuf};

use common::{random_raster, TestRng};
use irforge_core::codec::{encode_image, read_image, ImageFormat};
use irforge_core::features::ExtractorSpec;
use irforge_core::pairing::{PairManifest, PairRecord, Task};
use irforge_core::pipeline::{plan_for, run_pipeline};
use irforge_core::raster::Raster;
use irforge_core::translate::{rgb_to_ir, IntensityFactor};

fn write_png(path: &Path, raster: &Raster) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, encode_image(raster, ImageFormat::Png).unwrap()).unwrap();
}

fn manifest_over(task: Task, entries: &[(PathBuf, PathBuf)]) -> PairManifest {
    PairManifest {
        task,
        seed: 0,
        records: entries
            .iter()
            .map(|(source, target)| PairRecord {
                location_id: "L".into(),
                source: source.clone(),
                target: target.clone(),
            })
            .collect(),
    }
}

#[test]
fn rgb2ir_batch_equals_the_unit_op_per_record() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = TestRng::new(10);
    let mut entries = Vec::new();
    let mut sources = Vec::new();
    for i in 0..3 {
        let img = random_raster(&mut rng, 12, 9, 3);
        let source = dir.path().join(format!("src/img{i}.png"));
        write_png(&source, &img);
        let target = dir.path().join(format!("tgt/img{i}.png"));
        write_png(&target, &random_raster(&mut rng, 12, 9, 1));
        entries.push((source, target));
        sources.push(img);
    }
    let manifest = manifest_over(Task::Rgb2Ir, &entries);
    let out_dir = dir.path().join("out");
    let summary = run_pipeline(&plan_for(Task::Rgb2Ir), &manifest, &out_dir, 2).unwrap();
    assert_eq!(summary.processed, 3);
    assert_eq!(summary.failed, 0);
    assert!(summary.report.is_none());

    let factor = IntensityFactor::new(1.3).unwrap();
    for (i, img) in sources.iter().enumerate() {
        let produced = std::fs::read(out_dir.join(format!("img{i}_rgb2ir.png"))).unwrap();
        let expected =
            encode_image(&rgb_to_ir(img, factor).unwrap(), ImageFormat::Png).unwrap();
        assert_eq!(produced, expected, "record {i}");
    }
    assert!(out_dir.join("run.log").is_file());
}

#[test]
fn one_bad_record_fails_alone() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = TestRng::new(11);
    let good = random_raster(&mut rng, 8, 8, 3);
    let good_src = dir.path().join("src/good.png");
    write_png(&good_src, &good);
    let bad_src = dir.path().join("src/bad.png");
    std::fs::write(&bad_src, b"this is not a png").unwrap();
    let target = dir.path().join("tgt/t.png");
    write_png(&target, &random_raster(&mut rng, 8, 8, 1));

    let manifest = manifest_over(
        Task::Rgb2Ir,
        &[
            (good_src, target.clone()),
            (bad_src.clone(), target.clone()),
        ],
    );
    let out_dir = dir.path().join("out");
    let summary = run_pipeline(&plan_for(Task::Rgb2Ir), &manifest, &out_dir, 4).unwrap();
    assert_eq!(summary.record_count, 2);
    assert_eq!(summary.processed, 1);
    assert_eq!(summary.failed, 1);
    assert_eq!(summary.failures.len(), 1);
    assert_eq!(summary.failures[0].index, 1);
    assert!(out_dir.join("good_rgb2ir.png").is_file());
    assert!(!out_dir.join("bad_rgb2ir.png").exists());

    let log = std::fs::read_to_string(out_dir.join("run.log")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("0\tOK\t"));
    assert!(lines[1].starts_with("1\tFAIL\t"));
}

#[test]
fn sar2ir_consumes_external_outputs_and_matches_the_scalar_chain() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = TestRng::new(12);

    // Manifest sources are "SAR" files; the external dir holds hand-made
    // RGB outputs keyed by the source stems.
    let mut entries = Vec::new();
    let mut external_rgbs = Vec::new();
    let external_dir = dir.path().join("external");
    for i in 0..4 {
        let sar = dir.path().join(format!("sar/scene{i}.png"));
        write_png(&sar, &random_raster(&mut rng, 10, 10, 1));
        let target = dir.path().join(format!("ir/scene{i}.png"));
        write_png(&target, &random_raster(&mut rng, 10, 10, 1));
        let rgb = random_raster(&mut rng, 10, 10, 3);
        write_png(&external_dir.join(format!("scene{i}.png")), &rgb);
        entries.push((sar, target));
        external_rgbs.push(rgb);
    }

    let manifest = manifest_over(Task::Sar2Ir, &entries);
    let plan = plan_for(Task::Sar2Ir)
        .with_external_dir(&external_dir)
        .unwrap();
    let out_dir = dir.path().join("out");
    let summary = run_pipeline(&plan, &manifest, &out_dir, 1).unwrap();
    assert_eq!(summary.processed, 4);

    let factor = IntensityFactor::new(1.15).unwrap();
    for (i, rgb) in external_rgbs.iter().enumerate() {
        let produced = read_image(&out_dir.join(format!("scene{i}_sar2ir.png"))).unwrap();
        let expected = rgb_to_ir(rgb, factor).unwrap();
        assert_eq!(produced, expected, "record {i}");
    }
}

#[test]
fn missing_external_counterpart_is_a_per_record_failure() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = TestRng::new(13);
    let sar = dir.path().join("sar/present.png");
    write_png(&sar, &random_raster(&mut rng, 8, 8, 1));
    let orphan = dir.path().join("sar/orphan.png");
    write_png(&orphan, &random_raster(&mut rng, 8, 8, 1));
    let target = dir.path().join("ir/t.png");
    write_png(&target, &random_raster(&mut rng, 8, 8, 1));
    let external_dir = dir.path().join("external");
    write_png(
        &external_dir.join("present.png"),
        &random_raster(&mut rng, 8, 8, 3),
    );

    let manifest = manifest_over(
        Task::Sar2Ir,
        &[(sar, target.clone()), (orphan, target.clone())],
    );
    let plan = plan_for(Task::Sar2Ir)
        .with_external_dir(&external_dir)
        .unwrap();
    let summary = run_pipeline(&plan, &manifest, &dir.path().join("out"), 2).unwrap();
    assert_eq!(summary.processed, 1);
    assert_eq!(summary.failed, 1);
    assert!(summary.failures[0].message.contains("orphan"));
}

#[test]
fn rerunning_reproduces_byte_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = TestRng::new(14);
    let mut entries = Vec::new();
    for i in 0..5 {
        let source = dir.path().join(format!("src/im{i}.png"));
        write_png(&source, &random_raster(&mut rng, 16, 16, 3));
        let target = dir.path().join(format!("tgt/im{i}.png"));
        write_png(&target, &random_raster(&mut rng, 16, 16, 1));
        entries.push((source, target));
    }
    let manifest = manifest_over(Task::Rgb2Ir, &entries);
    let plan = plan_for(Task::Rgb2Ir);

    let snapshot = |out: &Path| -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|p| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read(&p).unwrap(),
                )
            })
            .collect()
    };

    let out_a = dir.path().join("out_a");
    run_pipeline(&plan, &manifest, &out_a, 3).unwrap();
    let first = snapshot(&out_a);
    run_pipeline(&plan, &manifest, &out_a, 3).unwrap();
    assert_eq!(snapshot(&out_a), first);

    let out_b = dir.path().join("out_b");
    run_pipeline(&plan, &manifest, &out_b, 1).unwrap();
    assert_eq!(snapshot(&out_b), first);
}

#[test]
fn staged_evaluation_scores_outputs_against_targets() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = TestRng::new(15);
    let factor = IntensityFactor::new(1.3).unwrap();
    let mut entries = Vec::new();
    for i in 0..3 {
        let img = random_raster(&mut rng, 16, 16, 3);
        let source = dir.path().join(format!("src/e{i}.png"));
        write_png(&source, &img);
        // Target equals the exact pipeline output, so the report is zero.
        let target = dir.path().join(format!("tgt/e{i}.png"));
        write_png(&target, &rgb_to_ir(&img, factor).unwrap());
        entries.push((source, target));
    }
    let manifest = manifest_over(Task::Rgb2Ir, &entries);
    let spec = ExtractorSpec::new(4, 2, 4, 9).unwrap();
    let plan = plan_for(Task::Rgb2Ir).with_evaluation(spec);
    let summary = run_pipeline(&plan, &manifest, &dir.path().join("out"), 2).unwrap();
    assert_eq!(summary.failed, 0);
    let report = summary.report.as_ref().expect("evaluation was staged");
    assert_eq!(report.l2, 0.0);
    assert_eq!(report.lpips, 0.0);
    assert_eq!(report.fid, 0.0);
    assert_eq!(report.final_score, 0.0);
    assert_eq!(report.per_image.len(), 3);
    let text = summary.to_text();
    assert!(text.contains("processed=3"));
    assert!(text.contains("final=0.00000000000e0"));
}

#[test]
fn mismatched_manifest_task_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = manifest_over(
        Task::Sar2Eo,
        &[(dir.path().join("a.png"), dir.path().join("b.png"))],
    );
    let err = run_pipeline(&plan_for(Task::Rgb2Ir), &manifest, &dir.path().join("o"), 1);
    assert!(err.is_err());
}
