//! Behavioral tests of the `pcseg` binary: exit codes, diagnostics, and
//! output determinism.

use std::path::Path;
use std::process::{Command, Output};

fn pcseg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcseg"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

const SCENE_SPEC: &str = r#"{
  "num_instances": 5,
  "classes": [0, 1, 2],
  "shape": "box",
  "points_per_instance": [60, 120],
  "instance_extent": [0.2, 0.3],
  "min_gap": 0.15,
  "intra_spacing": 0.008,
  "bounds": [[0, 0, 0], [3, 3, 2]],
  "seed": 11
}"#;

#[test]
fn synth_segment_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("scene.json"), SCENE_SPEC);

    let out = pcseg(&["synth", "--spec", "scene.json", "--out", "scenes"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("scenes/scene_0000/cloud.txt").exists());
    assert!(dir.path().join("scenes/scene_0000/gt.json").exists());
    assert!(dir.path().join("scenes/manifest.json").exists());

    let out = pcseg(
        &[
            "segment",
            "--cloud",
            "scenes/scene_0000/cloud.txt",
            "--gt",
            "scenes/scene_0000/gt.json",
            "--predictor",
            "exact",
            "--out",
            "seg",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = pcseg(
        &[
            "eval",
            "--pred",
            "seg/predictions.json",
            "--gt",
            "scenes/scene_0000/gt.json",
            "--out",
            "report.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(report["ap50"], 1.0);
    assert_eq!(report["ap"], 1.0);
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn synth_batches_are_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("scene.json"), SCENE_SPEC);
    for out_dir in ["a", "b"] {
        let out = pcseg(
            &["synth", "--spec", "scene.json", "--out", out_dir, "--count", "10"],
            dir.path(),
        );
        assert!(out.status.success());
    }
    for i in 0..10 {
        let a = std::fs::read(dir.path().join(format!("a/scene_{i:04}/cloud.txt"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("b/scene_{i:04}/cloud.txt"))).unwrap();
        assert_eq!(a, b, "scene {i} differs between identical runs");
        let ga = std::fs::read(dir.path().join(format!("a/scene_{i:04}/gt.json"))).unwrap();
        let gb = std::fs::read(dir.path().join(format!("b/scene_{i:04}/gt.json"))).unwrap();
        assert_eq!(ga, gb);
    }
}

#[test]
fn invalid_spec_field_gives_validation_exit_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("bad.json"),
        &SCENE_SPEC.replace("\"min_gap\": 0.15", "\"min_gap\": -1.0"),
    );
    let out = pcseg(&["synth", "--spec", "bad.json", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("min_gap"), "{stderr}");
}

#[test]
fn missing_offsets_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("bare.txt"),
        "x y z sem\n0 0 0 1\n0.001 0 0 1\n",
    );
    write(&dir.path().join("gt.json"), "[]");
    let out = pcseg(
        &[
            "segment", "--cloud", "bare.txt", "--gt", "gt.json", "--predictor", "exact",
            "--out", "seg",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("offsets required"), "{stderr}");
}

#[test]
fn missing_input_file_gives_io_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcseg(&["synth", "--spec", "nope.json", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_radius_flag_is_recorded_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("scene.json"), SCENE_SPEC);
    assert!(pcseg(&["synth", "--spec", "scene.json", "--out", "s"], dir.path())
        .status
        .success());
    let out = pcseg(
        &[
            "segment",
            "--cloud",
            "s/scene_0000/cloud.txt",
            "--gt",
            "s/scene_0000/gt.json",
            "--radii",
            "0.03",
            "--out",
            "seg",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("seg/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["radii"].as_array().unwrap().len(), 1);
    assert_eq!(manifest["config"]["radii"][0], 0.03);
}

#[test]
fn ply_format_flows_through_segment() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("scene.json"), SCENE_SPEC);
    assert!(pcseg(
        &["synth", "--spec", "scene.json", "--out", "s", "--format", "ply"],
        dir.path()
    )
    .status
    .success());
    let out = pcseg(
        &[
            "segment",
            "--cloud",
            "s/scene_0000/cloud.ply",
            "--format",
            "ply",
            "--gt",
            "s/scene_0000/gt.json",
            "--out",
            "seg",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eval_normalizes_unsorted_indices_and_rejects_bad_confidence() {
    let dir = tempfile::tempdir().unwrap();
    // Indices deliberately unsorted with a duplicate.
    write(
        &dir.path().join("preds.json"),
        r#"[{"class": 1, "confidence": 0.9, "indices": [2, 0, 1, 2]}]"#,
    );
    write(
        &dir.path().join("gt.json"),
        r#"[{"id": 0, "class": 1, "indices": [1, 0, 2], "centroid": [0, 0, 0]}]"#,
    );
    let out = pcseg(&["eval", "--pred", "preds.json", "--gt", "gt.json"], dir.path());
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(report["ap50"], 1.0);

    write(
        &dir.path().join("bad.json"),
        r#"[{"class": 1, "confidence": 1.5, "indices": [0]}]"#,
    );
    let out = pcseg(&["eval", "--pred", "bad.json", "--gt", "gt.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eval_with_empty_predictions_reports_zeros() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("preds.json"), "[]");
    write(
        &dir.path().join("gt.json"),
        r#"[{"id": 0, "class": 1, "indices": [0, 1, 2], "centroid": [0, 0, 0]}]"#,
    );
    let out = pcseg(
        &["eval", "--pred", "preds.json", "--gt", "gt.json"],
        dir.path(),
    );
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(report["ap"], 0.0);
    assert_eq!(report["ap50"], 0.0);
    assert_eq!(report["ap25"], 0.0);
}

#[test]
fn voxel_flag_downsamples_before_segmenting() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("scene.json"), SCENE_SPEC);
    assert!(pcseg(&["synth", "--spec", "scene.json", "--out", "s"], dir.path())
        .status
        .success());
    // A voxel far larger than the intra-instance spacing collapses points;
    // everything still runs and the manifest records the setting.
    let out = pcseg(
        &[
            "segment",
            "--cloud",
            "s/scene_0000/cloud.txt",
            "--gt",
            "s/scene_0000/gt.json",
            "--voxel",
            "0.02",
            "--min-group-size",
            "5",
            "--out",
            "seg",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("seg/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["voxel"], 0.02);
}

#[test]
fn ablate_single_setting_yields_one_row_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("scene.json"), SCENE_SPEC);
    write(
        &dir.path().join("ablate.json"),
        &format!(
            r#"{{"scene": {SCENE_SPEC}, "num_scenes": 2, "radius_sets": [[0.01, 0.03, 0.05]]}}"#
        ),
    );
    for out_dir in ["ab1", "ab2"] {
        let out = pcseg(
            &["ablate", "--spec", "ablate.json", "--out", out_dir],
            dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read_to_string(dir.path().join("ab1/ablation.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("ab2/ablation.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 2, "header plus exactly one data row:\n{a}");
}

#[test]
fn bench_runs_small_sizes_quickly_and_scales_monotonically() {
    let dir = tempfile::tempdir().unwrap();
    let start = std::time::Instant::now();
    let out = pcseg(
        &["bench", "--sizes", "1000", "--repeats", "1"],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(
        start.elapsed().as_secs_f64() < 1.0,
        "bench at n=1000 took {:?}",
        start.elapsed()
    );

    let out = pcseg(
        &["bench", "--sizes", "1000,20000", "--repeats", "3"],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let totals: Vec<f64> = stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(6).unwrap().parse().unwrap())
        .collect();
    assert_eq!(totals.len(), 2);
    assert!(
        totals[1] >= totals[0],
        "total time fell with scene size: {totals:?}"
    );

    // Empty size list: header only.
    let out = pcseg(&["bench", "--repeats", "1"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 1);
}
