use super::factors::LineResidual;
use super::state::{KeyframeState, Observation, PointLandmark, WindowState};
use crate::error::{degenerate, invalid, Result};
use crate::geometry::{
    line_residual, plane_from_observation, residual_jacobian, to_orthonormal, triangulate_dual_plucker, CameraModel, OrthonormalLine, PluckerLine, Pose,
};
use crate::lsd::LineSegment2D;
use nalgebra::{DMatrix, Matrix4, Point2, Point3};
use serde::{Deserialize, Serialize};

/// Result of [`slide_window`]. Observation and landmark indices are remapped.
#[derive(Clone, Debug, PartialEq)]
pub struct SlideOutcome {
    pub state: WindowState,
    pub observations: Vec<Observation>,
    pub dropped_keyframe: bool,
    pub reanchored_points: usize,
    pub dropped_points: usize,
    pub dropped_lines: usize,
}

/// Appends a keyframe. At capacity the oldest keyframe is dropped first: its
/// points are re-anchored to their oldest remaining observer and landmarks
/// left with fewer than two observations are removed.
pub fn slide_window(state: &WindowState, observations: &[Observation], new_keyframe: KeyframeState) -> SlideOutcome {
    if state.keyframes.len() < state.capacity {
        let mut next = state.clone();
        next.keyframes.push(new_keyframe);
        return SlideOutcome {
            state: next,
            observations: observations.to_vec(),
            dropped_keyframe: false,
            reanchored_points: 0,
            dropped_points: 0,
            dropped_lines: 0,
        };
    }
    let mut points: Vec<Option<PointLandmark>> = state.points.iter().copied().map(Some).collect();
    let mut reanchored = 0;
    for (i, lm) in state.points.iter().enumerate() {
        if lm.anchor != 0 {
            continue;
        }
        let next_anchor =
            observations.iter().filter(|o| o.is_point() && o.feature == i && o.keyframe > 0).map(|o| o.keyframe).min();
        points[i] = next_anchor.and_then(|k| {
            // Exact at the current estimate: the world point does not move.
            PointLandmark::from_world(k, &state.camera_pose(k), &state.point_world(i)).ok()
        });
        reanchored += usize::from(points[i].is_some());
    }
    let kept: Vec<Observation> = observations
        .iter()
        .filter(|o| o.keyframe > 0)
        .filter(|o| !o.is_point() || points[o.feature].is_some())
        .copied()
        .collect();
    let mut point_count = vec![0usize; state.points.len()];
    let mut line_count = vec![0usize; state.lines.len()];
    for o in &kept {
        if o.is_point() {
            point_count[o.feature] += 1;
        } else {
            line_count[o.feature] += 1;
        }
    }
    let mut point_map = vec![None; state.points.len()];
    let mut new_points = Vec::new();
    for (i, lm) in points.iter().enumerate() {
        if let Some(lm) = lm.filter(|_| point_count[i] >= 2) {
            point_map[i] = Some(new_points.len());
            new_points.push(PointLandmark { anchor: lm.anchor - 1, ..lm });
        }
    }
    let mut line_map = vec![None; state.lines.len()];
    let mut new_lines = Vec::new();
    for (j, line) in state.lines.iter().enumerate() {
        if line_count[j] >= 2 {
            line_map[j] = Some(new_lines.len());
            new_lines.push(*line);
        }
    }
    let remapped = kept
        .iter()
        .filter_map(|o| {
            let map = if o.is_point() { &point_map } else { &line_map };
            map[o.feature].map(|f| Observation { keyframe: o.keyframe - 1, feature: f, ..*o })
        })
        .collect();
    let mut keyframes = state.keyframes[1..].to_vec();
    keyframes.push(new_keyframe);
    SlideOutcome {
        dropped_points: state.points.len() - new_points.len(),
        dropped_lines: state.lines.len() - new_lines.len(),
        state: WindowState { keyframes, points: new_points, lines: new_lines, ..state.clone() },
        observations: remapped,
        dropped_keyframe: true,
        reanchored_points: reanchored,
    }
}

/// Gates for landmark initialization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TriangulationConfig {
    /// Minimum camera-center distance of the triangulating pair, meters.
    pub min_baseline: f64,
    /// Observation noise in pixels, attached to the new observations.
    pub sigma: f64,
    /// Residual gate in units of `sigma`.
    pub gate: f64,
    /// Lines whose unit-diagonal information matrix has a smallest eigenvalue
    /// below this are rejected. Midpoint residuals barely observe the line
    /// direction when every view sees the same stretch of the line.
    pub min_conditioning: f64,
    /// Residual the new lines will be optimized with; the gates use it too.
    pub residual: LineResidual,
}

impl Default for TriangulationConfig {
    fn default() -> Self {
        Self { min_baseline: 0.05, sigma: 1.0, gate: 3.0, min_conditioning: 1e-8, residual: LineResidual::Midpoint }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TriangulationReport {
    /// `(track index, landmark index)` of each initialized landmark.
    pub added: Vec<(usize, usize)>,
    pub rejected_short_track: usize,
    pub rejected_baseline: usize,
    pub rejected_degenerate: usize,
    pub rejected_residual: usize,
    pub rejected_conditioning: usize,
}

impl TriangulationReport {
    pub fn rejected(&self) -> usize {
        self.rejected_short_track
            + self.rejected_baseline
            + self.rejected_degenerate
            + self.rejected_residual
            + self.rejected_conditioning
    }
}

/// `(keyframe index, segment)` observations of one line.
pub type LineTrack = Vec<(usize, LineSegment2D)>;
/// `(keyframe index, pixel)` observations of one point.
pub type PointTrack = Vec<(usize, Point2<f64>)>;

fn widest_pair(poses: &[Pose]) -> (usize, usize, f64) {
    let mut best = (0, 0, -1.0);
    for a in 0..poses.len() {
        for b in a + 1..poses.len() {
            let d = (poses[a].translation - poses[b].translation).norm();
            if d > best.2 {
                best = (a, b, d);
            }
        }
    }
    best
}

/// Depth along the midpoint ray at which it passes closest to `line`.
fn depth_along_ray(pose_wc: &Pose, seg: &LineSegment2D, line: &PluckerLine, cam: &CameraModel) -> f64 {
    let r = pose_wc.rotation * cam.backproject(&seg.midpoint());
    let c = pose_wc.translation;
    let (p0, d) = (line.closest_point().coords, line.d);
    // Minimize |c + s r - p0 - t d| over (s, t).
    let w = c - p0;
    let (a, b, e) = (r.dot(&r), r.dot(&d), d.dot(&d));
    let (f, g) = (r.dot(&w), d.dot(&w));
    let den = a * e - b * b;
    if den.abs() < 1e-15 * a * e {
        return f64::NAN;
    }
    // s is a multiple of the unit-depth ray, so it is the camera depth.
    (b * g - e * f) / den
}

/// Smallest eigenvalue of the line's information matrix `J^T J` after
/// scaling it to unit diagonal, with `J` stacked over the track and poses
/// held fixed. Zero when the track leaves a line direction unobserved.
pub fn line_conditioning(
    track: &LineTrack,
    poses: &[Pose],
    line: &OrthonormalLine,
    cam: &CameraModel,
    mode: LineResidual,
) -> f64 {
    let mut info = Matrix4::zeros();
    for ((_, seg), pose) in track.iter().zip(poses) {
        for m in mode.samples(seg) {
            match residual_jacobian(pose, line, &m, cam) {
                Ok(jac) => info += jac.line.transpose() * jac.line,
                Err(_) => return 0.0,
            }
        }
    }
    let d = info.diagonal();
    if d.iter().any(|v| !(*v > 0.0)) {
        return 0.0;
    }
    let s = d.map(|v| 1.0 / v.sqrt());
    let scaled = Matrix4::from_fn(|i, j| info[(i, j)] * s[i] * s[j]);
    scaled.symmetric_eigenvalues().min()
}

/// Initializes lines from tracks using the two observations with the widest
/// baseline. Lines that do not fit every observation within the gate, or lie
/// behind the triangulating cameras, are rejected.
pub fn triangulate_new_lines(
    state: &WindowState,
    tracks: &[LineTrack],
    cam: &CameraModel,
    cfg: &TriangulationConfig,
) -> (WindowState, Vec<Observation>, TriangulationReport) {
    let mut next = state.clone();
    let mut new_obs = Vec::new();
    let mut report = TriangulationReport::default();
    for (t, track) in tracks.iter().enumerate() {
        if track.len() < 2 || track.iter().any(|(k, _)| *k >= state.keyframes.len()) {
            report.rejected_short_track += 1;
            continue;
        }
        let poses: Vec<Pose> = track.iter().map(|(k, _)| state.camera_pose(*k)).collect();
        let (a, b, baseline) = widest_pair(&poses);
        let planes = (
            plane_from_observation(&poses[a], &track[a].1, cam),
            plane_from_observation(&poses[b], &track[b].1, cam),
        );
        let line = match planes {
            (Ok(pa), Ok(pb)) => triangulate_dual_plucker(&pa, &pb),
            _ => Err(degenerate("segment does not span a plane")),
        };
        let Ok(line) = line else {
            report.rejected_degenerate += 1;
            continue;
        };
        if baseline < cfg.min_baseline {
            report.rejected_baseline += 1;
            continue;
        }
        let in_front = [a, b].iter().all(|&i| depth_along_ray(&poses[i], &track[i].1, &line, cam) > 0.0);
        let Some(ortho) = to_orthonormal(&line).ok().filter(|_| in_front) else {
            report.rejected_degenerate += 1;
            continue;
        };
        let fits = track.iter().zip(&poses).all(|((_, seg), pose)| {
            let r: Result<Vec<f64>> =
                cfg.residual.samples(seg).iter().map(|m| line_residual(pose, &ortho, m, cam)).collect();
            r.is_ok_and(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt() <= cfg.gate * cfg.sigma)
        });
        if !fits {
            report.rejected_residual += 1;
            continue;
        }
        if line_conditioning(track, &poses, &ortho, cam, cfg.residual) < cfg.min_conditioning {
            report.rejected_conditioning += 1;
            continue;
        }
        let id = next.lines.len();
        next.lines.push(ortho);
        new_obs.extend(track.iter().map(|(k, seg)| Observation::line(*k, id, *seg, cfg.sigma)));
        report.added.push((t, id));
    }
    (next, new_obs, report)
}

/// Linear triangulation from two or more views given camera-to-world poses.
pub fn triangulate_point(views: &[(Pose, Point2<f64>)], cam: &CameraModel) -> Result<Point3<f64>> {
    if views.len() < 2 {
        return Err(invalid("point triangulation needs two views"));
    }
    let mut a = DMatrix::zeros(2 * views.len(), 4);
    for (i, (pose, m)) in views.iter().enumerate() {
        let p_cw = pose.inverse();
        let r = p_cw.rotation_matrix();
        let t = p_cw.translation;
        let x = cam.backproject(m);
        for (row, coord) in [(2 * i, x.x), (2 * i + 1, x.y)] {
            let axis = row - 2 * i;
            for c in 0..3 {
                a[(row, c)] = coord * r[(2, c)] - r[(axis, c)];
            }
            a[(row, 3)] = coord * t.z - t[axis];
        }
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| degenerate("triangulation SVD failed"))?;
    let imin = svd.singular_values.imin();
    let h = vt.row(imin);
    if h[3].abs() < 1e-12 * h.norm() {
        return Err(degenerate("triangulated point at infinity"));
    }
    Ok(Point3::new(h[0] / h[3], h[1] / h[3], h[2] / h[3]))
}

/// Initializes points anchored at their first observing keyframe. Points
/// whose rays meet at less than `min_parallax` radians, that land behind a
/// camera, or that miss the gate in any view are rejected.
pub fn triangulate_new_points(
    state: &WindowState,
    tracks: &[PointTrack],
    cam: &CameraModel,
    cfg: &TriangulationConfig,
    min_parallax: f64,
) -> (WindowState, Vec<Observation>, TriangulationReport) {
    let mut next = state.clone();
    let mut new_obs = Vec::new();
    let mut report = TriangulationReport::default();
    for (t, track) in tracks.iter().enumerate() {
        if track.len() < 2 || track.iter().any(|(k, _)| *k >= state.keyframes.len()) {
            report.rejected_short_track += 1;
            continue;
        }
        let views: Vec<(Pose, Point2<f64>)> = track.iter().map(|(k, m)| (state.camera_pose(*k), *m)).collect();
        let poses: Vec<Pose> = views.iter().map(|v| v.0).collect();
        if widest_pair(&poses).2 < cfg.min_baseline {
            report.rejected_baseline += 1;
            continue;
        }
        let Ok(p_w) = triangulate_point(&views, cam) else {
            report.rejected_degenerate += 1;
            continue;
        };
        let rays: Vec<_> = poses.iter().map(|p| (p_w - Point3::from(p.translation)).normalize()).collect();
        let parallax = rays
            .iter()
            .flat_map(|a| rays.iter().map(move |b| a.dot(b).clamp(-1.0, 1.0).acos()))
            .fold(0.0, f64::max);
        let &(anchor, m_anchor) = track.iter().min_by_key(|(k, _)| *k).expect("nonempty");
        // The bearing comes from the anchor measurement, so the anchor view
        // reprojects exactly; the depth is taken along that ray.
        let bearing = cam.backproject(&m_anchor).normalize();
        let depth = bearing.dot(&state.camera_pose(anchor).inverse().transform_point(&p_w).coords);
        let lm = PointLandmark { anchor, bearing, lambda: 1.0 / depth };
        if !(depth > 0.0) || parallax < min_parallax {
            report.rejected_degenerate += 1;
            continue;
        };
        let p_w = lm.world_point(&state.camera_pose(anchor));
        let fits = views.iter().all(|(pose, m)| {
            let p_c = pose.inverse().transform_point(&p_w);
            cam.project(&p_c).is_some_and(|px| (px - m).norm() <= cfg.gate * cfg.sigma)
        });
        if !fits {
            report.rejected_residual += 1;
            continue;
        }
        let id = next.points.len();
        next.points.push(lm);
        new_obs.extend(track.iter().map(|(k, m)| Observation::point(*k, id, *m, cfg.sigma)));
        report.added.push((t, id));
    }
    (next, new_obs, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_scene, ground_truth_window, line_tracks, point_tracks, project_scene, SceneConfig, SyntheticScene};
    use crate::window::{window_cost, SolverConfig};

    fn scene() -> SyntheticScene {
        let cfg = SceneConfig { keyframes: 6, points: 40, lines: 12, min_line_views: 3, ..Default::default() };
        generate_scene(&cfg, 21).unwrap()
    }

    fn truth_state(scene: &SyntheticScene) -> WindowState {
        let mut state = WindowState::new(scene.t_bc, scene.trajectory.len()).unwrap();
        state.keyframes = scene.trajectory.iter().map(|(_, p)| KeyframeState::from_pose(p)).collect();
        state
    }

    #[test]
    fn below_capacity_only_appends() {
        let s = scene();
        let mut state = truth_state(&s);
        state.capacity = 10;
        let kf = state.keyframes[2];
        let out = slide_window(&state, &[], kf);
        assert!(!out.dropped_keyframe);
        assert_eq!(out.state.keyframes.len(), 7);
        assert_eq!(out.state.keyframes[6], kf);
    }

    #[test]
    fn reanchoring_keeps_residuals() {
        let s = scene();
        let frames = project_scene(&s, 1.0, 3).unwrap();
        let truth: Vec<Pose> = s.trajectory.iter().map(|x| x.1).collect();
        let (state, obs) = ground_truth_window(&s, &frames, &truth, 1.0, LineResidual::Endpoints, 1e-8).unwrap();
        let out = slide_window(&state, &obs, state.keyframes[5]);
        assert!(out.dropped_keyframe && out.reanchored_points > 0);
        assert_eq!(out.state.keyframes.len(), 6);

        // The same cost over the observations that survive, before and after.
        let survivors = |point: bool, f: usize| {
            obs.iter().filter(|o| o.keyframe > 0 && o.is_point() == point && o.feature == f).count() >= 2
        };
        let before: Vec<Observation> = obs
            .iter()
            .filter(|o| o.keyframe > 0 && survivors(o.is_point(), o.feature))
            .copied()
            .collect();
        let cfg = SolverConfig { huber: false, line_residual: LineResidual::Endpoints, ..Default::default() };
        let (a, _) = window_cost(&state, &before, &s.camera, &cfg);
        let (b, dropped) = window_cost(&out.state, &out.observations, &s.camera, &cfg);
        assert_eq!(dropped, 0);
        assert!(a > 1.0 && (a - b).abs() < 1e-9 * a, "{a} {b}");
        assert_eq!(out.observations.len(), before.len());

        let lines_left = (0..state.lines.len()).filter(|&j| survivors(false, j)).count();
        assert_eq!(out.dropped_lines, state.lines.len() - lines_left);
        assert_eq!(out.state.lines.len(), lines_left);
    }

    fn line_setup() -> (SyntheticScene, WindowState, Vec<LineTrack>) {
        let s = scene();
        let frames = project_scene(&s, 0.0, 1).unwrap();
        let tracks: Vec<LineTrack> =
            line_tracks(&frames, s.segments.len()).into_iter().filter(|t| t.len() >= 3).collect();
        assert!(tracks.len() >= 5);
        (s.clone(), truth_state(&s), tracks)
    }

    #[test]
    fn exact_tracks_triangulate_exactly() {
        let (s, state, tracks) = line_setup();
        let cfg = TriangulationConfig { residual: LineResidual::Endpoints, min_conditioning: 0.0, ..Default::default() };
        let (next, obs, report) = triangulate_new_lines(&state, &tracks, &s.camera, &cfg);
        assert_eq!(report.added.len(), tracks.len(), "{report:?}");
        assert_eq!(obs.len(), tracks.iter().map(Vec::len).sum::<usize>());
        for o in &obs {
            let crate::window::Measurement::Line(seg) = o.measurement else { panic!("line expected") };
            for m in [seg.p1, seg.p2] {
                let r = line_residual(&next.camera_pose(o.keyframe), &next.lines[o.feature], &m, &s.camera).unwrap();
                assert!(r.abs() < 1e-8, "{r}");
            }
        }
    }

    #[test]
    fn gates_reject_bad_tracks() {
        let (s, state, tracks) = line_setup();
        let cfg = TriangulationConfig { min_conditioning: 0.0, ..Default::default() };

        // A segment from another line in the middle of the track.
        let mut mixed = tracks[0].clone();
        let k = mixed[1].0;
        let other = tracks.iter().skip(1).find_map(|t| t.iter().find(|(j, _)| *j == k)).expect("shared keyframe");
        mixed[1].1 = other.1;
        let (_, _, report) = triangulate_new_lines(&state, &[mixed], &s.camera, &cfg);
        assert!(report.added.is_empty());
        assert_eq!(report.rejected_residual + report.rejected_degenerate, 1);

        // Every view from one place.
        let mut still = state.clone();
        for k in 1..still.keyframes.len() {
            still.keyframes[k].p = still.keyframes[0].p;
        }
        let (_, _, report) = triangulate_new_lines(&still, &tracks, &s.camera, &cfg);
        assert!(report.added.is_empty());
        assert_eq!(report.rejected_baseline + report.rejected_degenerate, tracks.len());

        let (_, _, report) = triangulate_new_lines(&state, &[tracks[0][..1].to_vec()], &s.camera, &cfg);
        assert_eq!(report.rejected_short_track, 1);

        // A unit-diagonal matrix reaches a smallest eigenvalue of one only when
        // it is the identity, which a real track never produces.
        let strict = TriangulationConfig { min_conditioning: 1.0, ..cfg };
        let (_, _, report) = triangulate_new_lines(&state, &tracks, &s.camera, &strict);
        assert_eq!(report.rejected_conditioning, tracks.len());
    }

    #[test]
    fn conditioning_is_bounded() {
        let (s, state, tracks) = line_setup();
        let cfg = TriangulationConfig { residual: LineResidual::Endpoints, min_conditioning: 0.0, ..Default::default() };
        let (next, _, report) = triangulate_new_lines(&state, &tracks, &s.camera, &cfg);
        for &(t, id) in &report.added {
            let poses: Vec<Pose> = tracks[t].iter().map(|(k, _)| next.camera_pose(*k)).collect();
            let c = line_conditioning(&tracks[t], &poses, &next.lines[id], &s.camera, LineResidual::Endpoints);
            assert!(c > 0.0 && c <= 1.0 + 1e-12, "{c}");
            // A single view leaves the line free.
            let one = line_conditioning(&tracks[t][..1].to_vec(), &poses[..1], &next.lines[id], &s.camera, LineResidual::Endpoints);
            assert!(one < 1e-10, "{one}");
        }
    }

    #[test]
    fn exact_points_triangulate_exactly() {
        let s = scene();
        let frames = project_scene(&s, 0.0, 1).unwrap();
        let tracks = point_tracks(&frames, s.points.len());
        let state = truth_state(&s);
        let cfg = TriangulationConfig::default();
        let (next, _, report) = triangulate_new_points(&state, &tracks, &s.camera, &cfg, 0.0);
        assert!(report.added.len() >= 20, "{report:?}");
        for &(t, id) in &report.added {
            assert!((next.point_world(id) - s.points[t]).norm() < 1e-8);
        }
    }
}
