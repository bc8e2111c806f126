//! Black-box tests of the command-line surface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_craft-kernels"))
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = bin().args(args).current_dir(dir).output().unwrap();
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Non-manifest files of a directory, sorted by name.
fn payload_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            !name.ends_with("manifest.json")
        })
        .collect();
    files.sort();
    files
}

fn assert_dirs_byte_identical(a: &Path, b: &Path) {
    let fa = payload_files(a);
    let fb = payload_files(b);
    assert_eq!(fa.len(), fb.len());
    for (pa, pb) in fa.iter().zip(&fb) {
        assert_eq!(pa.file_name(), pb.file_name());
        assert_eq!(
            std::fs::read(pa).unwrap(),
            std::fs::read(pb).unwrap(),
            "{} differs",
            pa.display()
        );
    }
}

#[test]
fn synth_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &["synth", "--seed", "42", "--count", "2", "--out", "a"],
        dir.path(),
    );
    run_ok(
        &["synth", "--seed", "42", "--count", "2", "--out", "b"],
        dir.path(),
    );
    assert_dirs_byte_identical(&dir.path().join("a"), &dir.path().join("b"));
    // The manifest exists alongside outputs and carries the only timestamp.
    assert!(dir.path().join("a/manifest.json").exists());
}

#[test]
fn infer_on_zero_maps_is_empty_boxes_document() {
    let dir = tempfile::tempdir().unwrap();
    let maps = vec![craft_kernels::ScoreMap::zeros(32, 32); 4];
    let bytes = craft_kernels::rastermap::encode_map(&maps).unwrap();
    std::fs::write(dir.path().join("zero.crmap"), bytes).unwrap();
    run_ok(&["infer", "zero.crmap", "--out", "boxes.json"], dir.path());
    let out = std::fs::read_to_string(dir.path().join("boxes.json")).unwrap();
    assert_eq!(out, "{\"boxes\":[]}\n");
}

#[test]
fn infer_emits_polygons_only_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["synth", "--seed", "7", "--out", "s"], dir.path());
    run_ok(
        &["infer", "s/scene_000007.crmap", "--out", "plain.json"],
        dir.path(),
    );
    let plain = std::fs::read_to_string(dir.path().join("plain.json")).unwrap();
    assert!(!plain.contains("polygons"));
    run_ok(
        &[
            "infer",
            "s/scene_000007.crmap",
            "--out",
            "poly.json",
            "--polygons",
        ],
        dir.path(),
    );
    let poly = std::fs::read_to_string(dir.path().join("poly.json")).unwrap();
    assert!(poly.contains("\"polygons\":[{"));
}

#[test]
fn eval_identical_files_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["synth", "--seed", "3", "--out", "s"], dir.path());
    run_ok(
        &["infer", "s/scene_000003.crmap", "--out", "p.json"],
        dir.path(),
    );
    let out = run_ok(&["eval", "--pred", "p.json", "--gt", "p.json"], dir.path());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["hmean"], 1.0);
    assert_eq!(report["precision"], 1.0);
    // Against the annotation ground truth the detections still match.
    let out = run_ok(
        &[
            "eval",
            "--pred",
            "p.json",
            "--gt",
            "s/scene_000003.json",
            "--out",
            "report.json",
        ],
        dir.path(),
    );
    assert!(out.stdout.is_empty());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["recall"], 1.0);
}

#[test]
fn gtgen_matches_library_render_and_stacks_linkrefiner() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["synth", "--seed", "11", "--out", "s"], dir.path());
    run_ok(
        &["gtgen", "s/scene_000011.json", "--out", "rendered.crmap"],
        dir.path(),
    );
    // The synth maps at noise 0 are exactly the gtgen render.
    let a = std::fs::read(dir.path().join("s/scene_000011.crmap")).unwrap();
    let b = std::fs::read(dir.path().join("rendered.crmap")).unwrap();
    assert_eq!(a, b);
    run_ok(
        &[
            "gtgen",
            "s/scene_000011.json",
            "--out",
            "withlink.crmap",
            "--link-refiner",
        ],
        dir.path(),
    );
    let channels = craft_kernels::rastermap::read_map(dir.path().join("withlink.crmap")).unwrap();
    assert_eq!(channels.len(), 5);
    assert!(channels[4].data().iter().any(|v| *v > 0.0));
}

#[test]
fn rectify_writes_per_word_maps_and_points() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["synth", "--seed", "5", "--out", "s"], dir.path());
    run_ok(
        &["rectify", "s/scene_000005.crmap", "--out-dir", "rect"],
        dir.path(),
    );
    let words: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("rect/scene_000005.words.json")).unwrap(),
    )
    .unwrap();
    let n = words.as_array().unwrap().len();
    assert!(n >= 1);
    for i in 0..n {
        let path = dir.path().join(format!("rect/scene_000005_w{i:02}.crmap"));
        let channels = craft_kernels::rastermap::read_map(path).unwrap();
        assert_eq!(channels.len(), 4);
    }
}

#[test]
fn render_writes_deterministic_pngs() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["synth", "--seed", "9", "--out", "s"], dir.path());
    run_ok(
        &["render", "s/scene_000009.crmap", "--out-dir", "p1"],
        dir.path(),
    );
    run_ok(
        &["render", "s/scene_000009.crmap", "--out-dir", "p2"],
        dir.path(),
    );
    let first = std::fs::read(dir.path().join("p1/scene_000009_c0.png")).unwrap();
    assert_eq!(&first[..8], b"\x89PNG\r\n\x1a\n");
    assert_dirs_byte_identical(&dir.path().join("p1"), &dir.path().join("p2"));
}

#[test]
fn thread_cap_env_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["synth", "--seed", "1", "--count", "4", "--out", "s"])
        .env("CRAFT_KERNELS_THREADS", "1")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(payload_files(&dir.path().join("s")).len(), 8);
}

#[test]
fn config_file_is_used_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        serde_json::json!({
            "scene": {
                "width": 200, "height": 150, "n_words": 1,
                "word_len": [2, 3], "char_size": [10.0, 14.0],
                "layouts": ["horizontal"], "seed": 0, "noise_sigma": 0.0
            }
        })
        .to_string(),
    )
    .unwrap();
    run_ok(
        &[
            "synth", "--config", "cfg.json", "--seed", "2", "--out", "s", "--width", "256",
        ],
        dir.path(),
    );
    let channels =
        craft_kernels::rastermap::read_map(dir.path().join("s/scene_000002.crmap")).unwrap();
    assert_eq!(channels[0].width(), 256); // flag wins
    assert_eq!(channels[0].height(), 150); // config file applies
}

#[test]
fn exit_codes_distinguish_usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown subcommand: usage error, exit 1.
    let out = bin()
        .arg("frobnicate")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // Missing input file: data error, exit 2.
    let out = bin()
        .args(["infer", "missing.crmap", "--out", "x.json"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    // Corrupt map file: data error, exit 2.
    std::fs::write(dir.path().join("bad.crmap"), b"NOTAMAP 1 1 1\n").unwrap();
    let out = bin()
        .args(["infer", "bad.crmap", "--out", "x.json"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // Help exits 0.
    let out = bin()
        .arg("--help")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
