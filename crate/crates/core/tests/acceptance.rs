//! Acceptance criteria 1-10. Runs without the test harness so that every
//! criterion prints one PASS/FAIL line and timings are not disturbed by
//! other tests running concurrently.

use lineslam::geometry::{
    from_orthonormal, line_residual, plane_from_observation, point_line_residual, project_world_line, residual_jacobian,
    to_orthonormal, transform_line, triangulate_dual_plucker, update_orthonormal, CameraModel, Frame, OrthonormalLine,
    PluckerLine, Pose,
};
use lineslam::lsd::{benchmark_detector, detect_lines, length_threshold, undirected_angle_diff, DetectorParams};
use lineslam::sim::{
    ate_rmse, clutter_image, endpoint_error, generate_scene, ground_truth_window, perturb_trajectory, project_scene,
    rpe, run_experiment, score_detections, segment_scene, write_outputs, ExperimentSpec, OracleScore, RpeDelta,
    SceneConfig, SegmentSceneConfig, StampedPose,
};
use lineslam::window::{huber, optimize_window, LineResidual, SolverConfig};
use lineslam::LineSegment2D;
use nalgebra::{Point2, Point3, UnitQuaternion, Vector3, Vector4};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_pose(rng: &mut ChaCha8Rng, max_angle: f64, max_shift: f64, from: Frame, to: Frame) -> Pose {
    let axis = unit_vector(rng) * rng.random_range(0.0..max_angle);
    let t = Vector3::new(
        rng.random_range(-max_shift..max_shift),
        rng.random_range(-max_shift..max_shift),
        rng.random_range(-max_shift..max_shift),
    );
    Pose::new(UnitQuaternion::from_scaled_axis(axis), t, from, to)
}

/// A line through a random point in a box, not too close to the origin.
fn random_line(rng: &mut ChaCha8Rng) -> PluckerLine {
    loop {
        let p = Point3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let line = PluckerLine::from_points(&p, &(p + unit_vector(rng) * rng.random_range(0.5..3.0))).expect("distinct");
        if line.distance_to(&Point3::origin()) > 0.05 {
            return line;
        }
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0f64;
    for _ in 0..1000 {
        let line = random_line(&mut rng);
        let back = from_orthonormal(&to_orthonormal(&line).expect("off origin"));
        worst = worst.max((back.normalized().to_vector6() - line.normalized().to_vector6()).norm());
    }
    let secs = start.elapsed().as_secs_f64();
    (worst < 1e-9 && secs < 1.0, format!("1000 lines, max deviation {worst:.2e}, {secs:.3} s"))
}

/// World point seen by a camera with camera-to-world pose `pose_wc`.
fn pixel(pose_wc: &Pose, p: &Point3<f64>, cam: &CameraModel) -> Option<Point2<f64>> {
    cam.project(&pose_wc.inverse().transform_point(p))
}

fn criterion_2() -> Outcome {
    let cam = CameraModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut configs, mut worst) = (0, 0f64);
    while configs < 500 {
        let c0 = random_pose(&mut rng, 0.3, 0.2, Frame::Camera, Frame::World);
        let c1 = random_pose(&mut rng, 0.3, 1.0, Frame::Camera, Frame::World);
        let depth = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(3.0..8.0));
        let a = Point3::from(c0.translation + c0.rotation * depth);
        let b = a + unit_vector(&mut rng) * rng.random_range(0.5..2.0);
        let views = [c0, c1];
        let px: Option<Vec<(Point2<f64>, Point2<f64>)>> =
            views.iter().map(|v| Some((pixel(v, &a, &cam)?, pixel(v, &b, &cam)?))).collect();
        let Some(px) = px.filter(|p| p.iter().all(|(x, y)| (x - y).norm() > 20.0)) else { continue };
        let segs: Vec<LineSegment2D> = px.iter().map(|(x, y)| LineSegment2D::new(*x, *y)).collect();
        let planes = [
            plane_from_observation(&views[0], &segs[0], &cam).expect("segment spans a plane"),
            plane_from_observation(&views[1], &segs[1], &cam).expect("segment spans a plane"),
        ];
        // Non-degenerate: the two interpretation planes meet at 5 degrees or more.
        let cos = planes[0].normal().normalize().dot(&planes[1].normal().normalize()).abs();
        if cos > 5f64.to_radians().cos() {
            continue;
        }
        let line = triangulate_dual_plucker(&planes[0], &planes[1]).expect("planes intersect");
        configs += 1;
        for view in &views {
            let l = project_world_line(view, &line, &cam).expect("projects");
            for i in 0..10 {
                let p = a + (b - a) * (i as f64 / 9.0);
                let m = pixel(view, &p, &cam).expect("between visible endpoints");
                worst = worst.max(point_line_residual(&m, &l).expect("finite line").abs());
            }
        }
    }
    (worst < 1e-8, format!("500 two-view configurations, max point-to-line distance {worst:.2e} px"))
}

fn criterion_3() -> Outcome {
    let cam = CameraModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_orth, mut worst_res) = (0f64, 0f64);
    for _ in 0..1000 {
        let p = Point3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(4.0..8.0));
        let q = p + unit_vector(&mut rng) * rng.random_range(0.5..2.0);
        let line = PluckerLine::from_points(&p, &q).expect("distinct");
        let t = random_pose(&mut rng, std::f64::consts::PI, 5.0, Frame::World, Frame::World);
        let moved = transform_line(&line, &t);
        worst_orth = worst_orth.max(moved.orthogonality_residual());
        // Exact projections of points on the line into a camera at the origin.
        let o = to_orthonormal(&line).expect("off origin");
        let pose = Pose::identity(Frame::Camera, Frame::World);
        for s in [0.0, 0.5, 1.0] {
            if let Some(m) = cam.project(&(p + (q - p) * s)) {
                worst_res = worst_res.max(line_residual(&pose, &o, &m, &cam).expect("projects").abs());
            }
        }
    }
    (
        worst_orth < 1e-9 && worst_res < 1e-10,
        format!("1000 transforms, max |n.d| {worst_orth:.2e}, max residual at exact projections {worst_res:.2e} px"),
    )
}

fn criterion_4() -> Outcome {
    let cam = CameraModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-6;
    let (mut worst_pose, mut worst_line) = (0f64, 0f64);
    let mut configs = 0;
    while configs < 100 {
        let pose = random_pose(&mut rng, 0.5, 1.0, Frame::Camera, Frame::World);
        let p = Point3::from(pose.translation + pose.rotation * Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(3.0..8.0)));
        let q = p + unit_vector(&mut rng) * rng.random_range(0.5..2.0);
        let Ok(line) = to_orthonormal(&PluckerLine::from_points(&p, &q).expect("distinct")) else { continue };
        let Some(m) = pixel(&pose, &p, &cam).map(|m| m + nalgebra::Vector2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0))) else {
            continue;
        };
        let Ok(jac) = residual_jacobian(&pose, &line, &m, &cam) else { continue };
        let r = |pose: &Pose, line: &OrthonormalLine| line_residual(pose, line, &m, &cam).expect("projects");
        let mut fd_pose = [0f64; 6];
        for (i, v) in fd_pose.iter_mut().enumerate() {
            let mut d = [0f64; 6];
            d[i] = h;
            let plus = pose.perturbed(&Vector3::new(d[0], d[1], d[2]), &Vector3::new(d[3], d[4], d[5]));
            d[i] = -h;
            let minus = pose.perturbed(&Vector3::new(d[0], d[1], d[2]), &Vector3::new(d[3], d[4], d[5]));
            *v = (r(&plus, &line) - r(&minus, &line)) / (2.0 * h);
        }
        let mut fd_line = [0f64; 4];
        for (i, v) in fd_line.iter_mut().enumerate() {
            let mut d = Vector4::zeros();
            d[i] = h;
            *v = (r(&pose, &update_orthonormal(&line, &d)) - r(&pose, &update_orthonormal(&line, &-d))) / (2.0 * h);
        }
        let rel = |a: &[f64], b: &[f64]| {
            let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            diff / b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-8)
        };
        worst_pose = worst_pose.max(rel(jac.pose.as_slice(), &fd_pose));
        worst_line = worst_line.max(rel(jac.line.as_slice(), &fd_line));
        configs += 1;
    }
    (
        worst_pose < 1e-5 && worst_line < 1e-5,
        format!("100 configurations, max relative error: pose block {worst_pose:.2e}, line block {worst_line:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let exact = huber(0.5) == Ok(0.5) && huber(1.0) == Ok(1.0) && huber(4.0) == Ok(3.0);
    let grid: Vec<f64> = (0..10_000).map(|i| huber(i as f64 * 1e-3).expect("nonnegative")).collect();
    let monotone = grid.windows(2).all(|w| w[1] >= w[0]);
    (exact && monotone, format!("exact values {exact}, monotone on a 10^4-point grid {monotone}"))
}

fn criterion_6() -> Outcome {
    let cfg = SegmentSceneConfig::default();
    let params = DetectorParams { length_ratio: 0.125, ..DetectorParams::default() };
    let l_min = length_threshold(cfg.width, cfg.height, params.length_ratio) as f64;
    let mut total = OracleScore::default();
    let (mut exact_scenes, mut worst_end, mut worst_angle) = (0, 0f64, 0f64);
    for seed in 0..50 {
        let (img, truth) = segment_scene(seed, &cfg).expect("scene");
        let found = detect_lines(&img, &params).expect("detects");
        let score = score_detections(&found, &truth, l_min, 2.0, 2f64.to_radians());
        total.add(&score);
        if score.true_positives == score.expected && score.detections == score.expected {
            exact_scenes += 1;
        }
        // Accuracy of the nearest detection for every long truth segment.
        for t in truth.iter().filter(|t| t.length >= l_min) {
            if let Some(d) = found.iter().min_by(|a, b| endpoint_error(a, t).total_cmp(&endpoint_error(b, t))) {
                if endpoint_error(d, t) < 2.0 {
                    worst_end = worst_end.max(endpoint_error(d, t));
                    worst_angle = worst_angle.max(undirected_angle_diff(d.angle, t.angle).to_degrees());
                }
            }
        }
    }
    let pass = total.precision() >= 0.95 && total.recall() >= 0.95 && total.short_detections == 0;
    (
        pass,
        format!(
            "L_min {l_min} px: precision {:.3}, recall {:.3}, {} short detections, exact set in {exact_scenes}/50 scenes, worst matched endpoint {worst_end:.2} px / {worst_angle:.2} deg",
            total.precision(),
            total.recall(),
            total.short_detections
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let images: Vec<_> = (0..20).map(|seed| clutter_image(seed, 752, 480, 120).expect("image")).collect();
    let a = DetectorParams::default().parse_overrides("s=0.5,d=0.6,eta=0.125").expect("valid");
    let b = DetectorParams::default().parse_overrides("s=0.8,d=0.7,eta=0").expect("valid");
    let r = benchmark_detector(&images, &a, &b, 3).expect("benchmark");
    let secs = start.elapsed().as_secs_f64();
    (
        r.speedup >= 2.0 && secs < 60.0,
        format!(
            "20 images: {:.2} ms vs {:.2} ms per image, speedup {:.2}x (single layer {:.2}x), {secs:.1} s total",
            r.mean_ms_a, r.mean_ms_b, r.speedup, r.single_layer_speedup
        ),
    )
}

struct WindowRun {
    dt: f64,
    dr: f64,
    ate: f64,
    monotone: bool,
    lines: usize,
}

fn window_run(seed: u64, sigma: f64, residual: LineResidual) -> Result<WindowRun, String> {
    let scene = generate_scene(&SceneConfig { keyframes: 10, points: 100, lines: 30, ..Default::default() }, seed)
        .map_err(|e| e.to_string())?;
    let frames = project_scene(&scene, sigma, seed ^ 11).map_err(|e| e.to_string())?;
    let truth: Vec<Pose> = scene.trajectory.iter().map(|x| x.1).collect();
    let init = perturb_trajectory(&truth, 0.05, 2.0, seed ^ 22);
    let (state, obs) =
        ground_truth_window(&scene, &frames, &init, sigma.max(1.0), residual, 1e-8).map_err(|e| e.to_string())?;
    let cfg = SolverConfig { line_residual: residual, ..Default::default() };
    let (out, report) = optimize_window(&state, &obs, &scene.camera, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
    let (mut dt, mut dr) = (0f64, 0f64);
    for (k, p) in out.keyframes.iter().zip(&truth) {
        dt = dt.max((k.p - p.translation).norm());
        dr = dr.max(k.q.angle_to(&p.rotation));
    }
    Ok(WindowRun {
        dt,
        dr,
        ate: ate_rmse(&scene.stamped(&out), &scene.truth(), true).map_err(|e| e.to_string())?,
        monotone: report.cost_trace.windows(2).all(|w| w[1] <= w[0]),
        lines: state.lines.len(),
    })
}

fn criterion_8() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (label, residual) in [("midpoint", LineResidual::Midpoint), ("endpoints", LineResidual::Endpoints)] {
        let exact: Result<Vec<WindowRun>, String> = (0..20).into_par_iter().map(|s| window_run(s, 0.0, residual)).collect();
        let noisy: Result<Vec<WindowRun>, String> = (0..20).into_par_iter().map(|s| window_run(s, 1.0, residual)).collect();
        match (exact, noisy) {
            (Ok(exact), Ok(noisy)) => {
                let dt = exact.iter().map(|r| r.dt).fold(0.0, f64::max);
                let dr = exact.iter().map(|r| r.dr).fold(0.0, f64::max);
                let ate = noisy.iter().map(|r| r.ate).fold(0.0, f64::max);
                let monotone = exact.iter().chain(&noisy).all(|r| r.monotone);
                let lines = exact.iter().map(|r| r.lines).min().unwrap_or(0);
                pass &= dt < 1e-6 && dr < 1e-5 && ate < 0.01 && monotone;
                notes.push(format!(
                    "{label}: noiseless max error {dt:.1e} m / {dr:.1e} rad, 1 px max ATE {ate:.4} m, monotone {monotone}, at least {lines} lines"
                ));
            }
            (Err(e), _) | (_, Err(e)) => {
                pass = false;
                notes.push(format!("{label}: {e}"));
            }
        }
    }
    (pass, format!("20 seeds each; {}", notes.join("; ")))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let seeds: Vec<String> = (0..20).map(|s| s.to_string()).collect();
    let spec = ExperimentSpec::from_json(&format!(
        r#"{{"scene": {{"keyframes": 10, "points": 30, "lines": 30}}, "noise": {{"pixel_sigma": 1.0}},
            "ablation": {{"min_improvement_pct": 5.0, "min_wins": 15}}, "seeds": [{}]}}"#,
        seeds.join(",")
    ))
    .expect("spec");
    let out = match run_experiment(&spec) {
        Ok(out) => out,
        Err(e) => return (false, e.to_string()),
    };
    let secs = start.elapsed().as_secs_f64();
    let c = out.report.comparison.expect("both modes ran");
    let failed: Vec<&str> = out.report.assertions.iter().filter(|a| !a.passed).map(|a| a.name.as_str()).collect();
    (
        out.report.passed && secs < 300.0,
        format!(
            "mean ATE {:.2}% lower with lines, lower in {}/{} seeds, {secs:.1} s{}",
            c.mean_improvement_pct,
            c.wins,
            c.seeds,
            if failed.is_empty() { String::new() } else { format!(", failed: {}", failed.join(", ")) }
        ),
    )
}

fn criterion_10() -> Outcome {
    let pose = |x: f64| Pose::new(UnitQuaternion::identity(), Vector3::new(x, 0.0, 0.0), Frame::Body, Frame::World);
    let traj = |f: &dyn Fn(usize) -> f64| -> Vec<StampedPose> {
        (0..10).map(|i| StampedPose { t: i as f64, pose: pose(f(i)) }).collect()
    };
    let truth = traj(&|i| i as f64);
    let shifted = traj(&|i| i as f64 + 1.0);
    let drift = traj(&|i| i as f64 * 1.01);
    let zero = ate_rmse(&truth, &truth, true).unwrap_or(1.0) < 1e-12
        && ate_rmse(&truth, &truth, false) == Ok(0.0)
        && rpe(&truth, &truth, RpeDelta::Frames(1)).is_ok_and(|r| r.trans == 0.0 && r.rot_deg == 0.0);
    let shift = ate_rmse(&shifted, &truth, false) == Ok(1.0) && ate_rmse(&shifted, &truth, true).unwrap_or(1.0) < 1e-12;
    let rpe_drift = rpe(&drift, &truth, RpeDelta::Frames(1)).is_ok_and(|r| (r.trans - 0.01).abs() < 1e-12);
    let pairs = rpe(&drift, &truth, RpeDelta::AllPairs).is_ok_and(|r| r.pairs == 45);

    let spec = ExperimentSpec::from_json(r#"{"scene": {"points": 30, "lines": 20}, "seeds": [3, 4]}"#).expect("spec");
    let dirs = [tempfile::tempdir().expect("tempdir"), tempfile::tempdir().expect("tempdir")];
    for d in &dirs {
        write_outputs(d.path(), &run_experiment(&spec).expect("runs")).expect("writes");
    }
    let files = |d: &tempfile::TempDir| {
        let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(d.path())
            .expect("readable")
            .map(|e| {
                let e = e.expect("entry");
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("readable"))
            })
            .collect();
        v.sort();
        v
    };
    let (a, b) = (files(&dirs[0]), files(&dirs[1]));
    let identical = a == b && !a.is_empty();
    (
        zero && shift && rpe_drift && pairs && identical,
        format!(
            "self-identities {zero}, unit shift {shift}, 1 cm/frame drift {rpe_drift}, 45 pairs {pairs}, {} report files byte-identical {identical}",
            a.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("geometry round trip", criterion_1),
        ("two-view triangulation", criterion_2),
        ("transform and residual consistency", criterion_3),
        ("analytic Jacobians", criterion_4),
        ("Huber norm", criterion_5),
        ("detector correctness", criterion_6),
        ("detector speed", criterion_7),
        ("window optimizer", criterion_8),
        ("line-benefit ablation", criterion_9),
        ("evaluation tooling", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion_{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.contains(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let (pass, detail) = run();
        failures += usize::from(!pass);
        println!("{} criterion {:>2} ({name}): {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
