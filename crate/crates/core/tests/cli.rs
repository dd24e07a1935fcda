//! The `lineslam` binary: outputs, exit codes and determinism.

use lineslam::geometry::{Frame, Pose};
use lineslam::image::save_pgm;
use lineslam::lsd::{detect_lines, segments_csv, DetectorParams};
use lineslam::sim::{clutter_image, segment_scene, textured_segment_scene, write_tum, SegmentSceneConfig, StampedPose};
use nalgebra::{UnitQuaternion, Vector3};
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lineslam")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn detect_writes_segment_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = segment_scene(2, &SegmentSceneConfig::default()).unwrap();
    let pgm = dir.path().join("scene.pgm");
    std::fs::write(&pgm, save_pgm(&img)).unwrap();
    let csv = dir.path().join("segments.csv");

    let out = run(&["detect", path(&pgm), "--s", "0.5", "--d", "0.6", "--eta", "0.125", "--csv", path(&csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x1,y1,x2,y2,length,angle\n"));
    let expected = detect_lines(&img, &DetectorParams::default()).unwrap();
    assert!(expected.len() > 5);
    assert_eq!(text, segments_csv(&expected));

    // Without --csv the rows go to stdout.
    let out = run(&["detect", path(&pgm)]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), text);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.pgm");
    assert_eq!(code(&run(&["detect", path(&missing)])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&[])), 2);
    let junk = dir.path().join("junk.pgm");
    std::fs::write(&junk, b"P7 not an image").unwrap();
    assert_eq!(code(&run(&["detect", path(&junk)])), 2);
    let (img, _) = segment_scene(1, &SegmentSceneConfig::default()).unwrap();
    let pgm = dir.path().join("ok.pgm");
    std::fs::write(&pgm, save_pgm(&img)).unwrap();
    assert_eq!(code(&run(&["detect", path(&pgm), "--s", "2.0"])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}

const SPEC: &str = r#"{"scene": {"points": 30, "lines": 20}, "noise": {"pixel_sigma": 1.0}, "seeds": [1, 2]}"#;

#[test]
fn simulate_writes_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, SPEC).unwrap();
    let outs = [dir.path().join("a"), dir.path().join("b")];
    for o in &outs {
        let out = run(&["simulate", path(&spec), "--out", path(o)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8(out.stdout).unwrap().contains("PASS all_runs_succeeded"));
    }
    let mut names: Vec<String> =
        std::fs::read_dir(&outs[0]).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert!(names.contains(&"report.json".into()) && names.contains(&"runs.csv".into()));
    assert!(names.contains(&"gt_seed1.tum".into()) && names.contains(&"est_seed2_points_lines.tum".into()));
    for n in &names {
        assert_eq!(std::fs::read(outs[0].join(n)).unwrap(), std::fs::read(outs[1].join(n)).unwrap(), "{n}");
    }
    let csv = std::fs::read_to_string(outs[0].join("runs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
}

#[test]
fn malformed_spec_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"seeds": [1], "noise": {"pixel_sigma": "one"}}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&["simulate", path(&spec), "--out", path(&out_dir)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("noise.pixel_sigma"));
    assert!(!out_dir.exists());
}

#[test]
fn failed_assertion_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"scene": {"points": 30, "lines": 20}, "ablation": {"max_ate": 1e-12}, "seeds": [1]}"#)
        .unwrap();
    let out = run(&["simulate", path(&spec), "--out", path(&dir.path().join("out"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL max_ate"));
}

fn write_trajectory(p: &Path, scale: f64) {
    let traj: Vec<StampedPose> = (0..10)
        .map(|i| StampedPose {
            t: i as f64,
            pose: Pose::new(UnitQuaternion::identity(), Vector3::new(i as f64 * scale, 0.0, 0.0), Frame::Body, Frame::World),
        })
        .collect();
    std::fs::write(p, write_tum(&traj)).unwrap();
}

#[test]
fn eval_reports_ate_and_rpe() {
    let dir = tempfile::tempdir().unwrap();
    let (est, gt) = (dir.path().join("est.tum"), dir.path().join("gt.tum"));
    write_trajectory(&est, 1.01);
    write_trajectory(&gt, 1.0);
    let out = run(&["eval", "--est", path(&est), "--gt", path(&gt), "--rpe-delta", "1s"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["rpe_trans"].as_f64().unwrap() - 0.01).abs() < 1e-9);
    assert_eq!(v["rpe_pairs"], 9);
    assert!(v["ate_rmse"].as_f64().unwrap() > 0.0);

    let out = run(&["eval", "--est", path(&gt), "--gt", path(&gt), "--rpe-delta", "all"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rpe_pairs"], 45);
    assert_eq!(v["rpe_trans"], 0.0);

    assert_eq!(code(&run(&["eval", "--est", path(&est), "--gt", path(&gt), "--rpe-delta", "later"])), 2);
    assert_eq!(code(&run(&["eval", "--est", path(&est), "--gt", path(&gt), "--rpe-delta", "20s"])), 2);
}

#[test]
fn match_writes_match_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = textured_segment_scene(5).unwrap();
    let pgm = dir.path().join("a.pgm");
    std::fs::write(&pgm, save_pgm(&img)).unwrap();
    let csv = dir.path().join("matches.csv");
    let out = run(&["match", path(&pgm), path(&pgm), "--csv", path(&csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("idx_a,idx_b,hamming,angle_diff"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.len() >= 10);
    // A frame matched against itself pairs every segment with itself.
    assert!(rows.iter().all(|r| r[0] == r[1] && r[2] == "0" && r[3] == "0"));
}

#[test]
fn bench_lsd_times_both_configs() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..2 {
        std::fs::write(dir.path().join(format!("{seed}.pgm")), save_pgm(&clutter_image(seed, 376, 240, 40).unwrap())).unwrap();
    }
    let d = path(dir.path());
    let out = run(&["bench-lsd", d, "--config-a", "s=0.5,d=0.6,eta=0.125", "--config-b", "s=0.8,d=0.7,eta=0", "--reps", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["images"], 2);
    assert!(v["speedup"].as_f64().unwrap() > 0.0);
    assert_eq!(code(&run(&["bench-lsd", d, "--reps", "1", "--min-speedup", "1000"])), 1);
    assert_eq!(code(&run(&["bench-lsd", d, "--config-a", "bogus=1"])), 2);
}
