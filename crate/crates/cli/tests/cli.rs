//! End-to-end runs of the `deep-logismos` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deep-logismos"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_spec(dir: &Path, distractor: bool) -> String {
    let mut spec = serde_json::json!({
        "dims": [32, 32, 32],
        "spacing": [1.0, 1.0, 1.0],
        "shape": {"kind": "sphere", "center": [16.0, 16.0, 16.0], "radius": 7.0},
        "fg_mean": 200.0,
        "bg_mean": 100.0,
        "noise_sigma": 10.0,
        "seed": 7
    });
    if distractor {
        spec["distractor"] = serde_json::json!({
            "offset_mm": [9.0, 9.0, 0.0],
            "radius_mm": 3.0,
            "intensity_mean": 40.0,
            "noise_sigma": 10.0,
            "seed": 107
        });
    }
    let path = dir.join("spec.json");
    std::fs::write(&path, spec.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn make_phantom(dir: &Path, distractor: bool) -> std::path::PathBuf {
    let spec = write_spec(dir, distractor);
    let out = dir.join("phantom");
    let summary = stdout_json(&run(&[
        "phantom",
        "--spec",
        &spec,
        "--out",
        out.to_str().unwrap(),
    ]));
    assert!(summary["label_voxels"].as_u64().unwrap() > 1000);
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn phantom_writes_triple_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = make_phantom(dir.path(), false);
    for f in ["intensity.mha", "label.mha", "prob.mha", "spec.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("spec.json")).unwrap()).unwrap();
    assert_eq!(sidecar["tau_mm"], 1.0);
    assert_eq!(sidecar["prob_seed"], 8);

    // regenerating from the sidecar reproduces the files byte for byte
    let again = dir.path().join("again");
    stdout_json(&run(&[
        "phantom",
        "--spec",
        s(&out.join("spec.json")),
        "--out",
        s(&again),
    ]));
    for f in ["intensity.mha", "label.mha", "prob.mha"] {
        assert_eq!(
            std::fs::read(out.join(f)).unwrap(),
            std::fs::read(again.join(f)).unwrap()
        );
    }
}

#[test]
fn metrics_on_identical_masks() {
    let dir = tempfile::tempdir().unwrap();
    let out = make_phantom(dir.path(), false);
    let label = out.join("label.mha");
    let res = run(&["metrics", "--seg", s(&label), "--ref", s(&label)]);
    assert!(res.status.success());
    assert_eq!(
        String::from_utf8(res.stdout).unwrap().trim(),
        r#"{"dsc":1.0,"rvd":0.0}"#
    );
}

#[test]
fn segment_phantom_and_score() {
    let dir = tempfile::tempdir().unwrap();
    let ph = make_phantom(dir.path(), false);
    let seg_dir = dir.path().join("seg");
    let report = stdout_json(&run(&[
        "segment",
        "--intensity",
        s(&ph.join("intensity.mha")),
        "--prob",
        s(&ph.join("prob.mha")),
        "--center",
        "16,16,16",
        "--delta",
        "2",
        "--node-spacing-mm",
        "0.5",
        "--out",
        s(&seg_dir),
    ]));
    assert_eq!(report["config"]["delta"], 2);
    assert_eq!(report["config"]["init_mode"], "refined-mask");
    assert!(report["refine"]["mu1"].is_number());
    let on_disk: Value =
        serde_json::from_str(&std::fs::read_to_string(seg_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(on_disk["solution"], report["solution"]);

    let m = stdout_json(&run(&[
        "metrics",
        "--seg",
        s(&seg_dir.join("segmentation.mha")),
        "--ref",
        s(&ph.join("label.mha")),
    ]));
    assert!(m["dsc"].as_f64().unwrap() >= 0.9, "{m}");
    assert!(m["rvd"].as_f64().unwrap() <= 0.1, "{m}");
}

#[test]
fn segment_batch_with_sphere_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let ph = make_phantom(dir.path(), false);
    let out = dir.path().join("batch");
    let res = bin()
        .env("DEEP_LOGISMOS_THREADS", "2")
        .args([
            "segment",
            "--intensity",
            s(&ph.join("intensity.mha")),
            "--prob",
            s(&ph.join("prob.mha")),
            "--center",
            "16,16,16",
            "--center",
            "15,16,17",
            "--init-mode",
            "sphere",
            "--cost-mode",
            "gradient",
            "--out",
            s(&out),
        ])
        .output()
        .unwrap();
    let entries = stdout_json(&res);
    let entries = entries.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    for (e, dir) in entries.iter().zip(["roi_16_16_16", "roi_15_16_17"]) {
        assert!(e["report"]["refine"].is_null());
        assert_eq!(e["report"]["config"]["cost_mode"], "gradient");
        assert!(out.join(dir).join("segmentation.mha").is_file());
    }
}

#[test]
fn refine_removes_distractor_component() {
    let dir = tempfile::tempdir().unwrap();
    let ph = make_phantom(dir.path(), true);
    let out = dir.path().join("refined");
    let report = stdout_json(&run(&[
        "refine",
        "--intensity",
        s(&ph.join("intensity.mha")),
        "--prob",
        s(&ph.join("prob.mha")),
        "--out",
        s(&out),
    ]));
    assert!(
        report["components_before"].as_u64().unwrap() >= 2,
        "{report}"
    );
    assert_eq!(report["components_after"], 1);
    assert!(out.join("refined.mha").is_file());
}

#[test]
fn missing_probability_file_is_bad_input_at_load() {
    let dir = tempfile::tempdir().unwrap();
    let ph = make_phantom(dir.path(), false);
    let res = run(&[
        "segment",
        "--intensity",
        s(&ph.join("intensity.mha")),
        "--prob",
        s(&dir.path().join("nope.mha")),
        "--center",
        "16,16,16",
        "--out",
        s(&dir.path().join("x")),
    ]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8(res.stderr).unwrap();
    assert!(err.contains("stage load"), "{err}");
}

#[test]
fn bad_arguments_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let ph = make_phantom(dir.path(), false);
    let (intensity, prob, out) = (
        ph.join("intensity.mha"),
        ph.join("prob.mha"),
        dir.path().join("x"),
    );
    let common = [
        "segment",
        "--intensity",
        s(&intensity),
        "--prob",
        s(&prob),
        "--out",
        s(&out),
    ];
    let cases: [&[&str]; 4] = [
        &["--center", "16,16"],
        &["--center", "16,16,16", "--threshold", "1.5"],
        &["--center", "16,16,16", "--cost-mode", "bogus"],
        &["--center", "99,16,16"],
    ];
    for extra in cases {
        let res = run(&[&common[..], extra].concat());
        assert_eq!(res.status.code(), Some(2), "{extra:?}");
    }
    let res = bin()
        .env("DEEP_LOGISMOS_THREADS", "zero")
        .args(["metrics", "--seg", "a.mha", "--ref", "b.mha"])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
}
