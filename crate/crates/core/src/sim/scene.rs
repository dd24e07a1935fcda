//! Corridor scenes: a box of wall, floor and ceiling landmarks and a smooth
//! forward trajectory. The world z axis points up and the corridor runs along x.

use super::metrics::StampedPose;
use crate::error::{invalid, Result};
use crate::geometry::{CameraModel, Frame, Pose};
use crate::lsd::LineSegment2D;
use crate::window::WindowState;
use nalgebra::{Matrix3, Point2, Point3, UnitQuaternion, Vector3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub points: usize,
    pub lines: usize,
    pub keyframes: usize,
    /// Forward distance between keyframes, meters.
    pub keyframe_spacing: f64,
    /// Seconds between keyframes.
    pub keyframe_interval: f64,
    pub corridor_width: f64,
    pub corridor_height: f64,
    /// Lateral sway amplitude of the trajectory, meters.
    pub sway: f64,
    pub min_point_views: usize,
    pub min_line_views: usize,
    /// Shortest projected segment counted as an observation, pixels.
    pub min_segment_px: f64,
    /// Landmarks closer than this to a camera are not observed, meters.
    pub near: f64,
    pub camera: CameraModel,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            points: 30,
            lines: 30,
            keyframes: 10,
            keyframe_spacing: 0.25,
            keyframe_interval: 0.1,
            corridor_width: 4.0,
            corridor_height: 3.0,
            sway: 0.15,
            min_point_views: 3,
            min_line_views: 5,
            min_segment_px: 20.0,
            near: 0.2,
            camera: CameraModel::default(),
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.keyframes < 2 {
            return Err(invalid("a scene needs at least two keyframes"));
        }
        if self.points + self.lines == 0 {
            return Err(invalid("a scene needs at least one landmark"));
        }
        if self.min_point_views < 2 || self.min_line_views < 2 {
            return Err(invalid("landmarks must be seen from at least two keyframes"));
        }
        let positive = [
            self.keyframe_spacing,
            self.keyframe_interval,
            self.corridor_width,
            self.corridor_height,
            self.near,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || !(self.sway >= 0.0) || !(self.min_segment_px >= 0.0) {
            return Err(invalid("scene dimensions must be positive"));
        }
        self.camera.validate()
    }
}

/// Camera-to-body extrinsic: camera x = -body y, camera y = -body z, camera z = body x.
pub fn default_extrinsic() -> Pose {
    let r = Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0);
    Pose::from_matrix(&r, Vector3::new(0.05, 0.0, 0.02), Frame::Camera, Frame::Body)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub points: Vec<Point3<f64>>,
    pub segments: Vec<(Point3<f64>, Point3<f64>)>,
    /// `(timestamp, T_wb)` per keyframe.
    pub trajectory: Vec<(f64, Pose)>,
    pub t_bc: Pose,
    pub camera: CameraModel,
    pub config: SceneConfig,
    pub seed: u64,
}

impl SyntheticScene {
    pub fn camera_pose(&self, k: usize) -> Pose {
        self.trajectory[k].1.compose(&self.t_bc)
    }

    /// Timestamped true body poses.
    pub fn truth(&self) -> Vec<StampedPose> {
        self.trajectory.iter().map(|(t, pose)| StampedPose { t: *t, pose: *pose }).collect()
    }

    /// Keyframe estimates of `state` stamped with the scene's timestamps.
    pub fn stamped(&self, state: &WindowState) -> Vec<StampedPose> {
        self.trajectory.iter().zip(&state.keyframes).map(|((t, _), kf)| StampedPose { t: *t, pose: kf.pose_wb() }).collect()
    }
}

/// Per-keyframe measurements, keyed by landmark index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameObservations {
    pub points: Vec<(usize, Point2<f64>)>,
    pub lines: Vec<(usize, LineSegment2D)>,
}

/// Pixel of a world point, if it is beyond the near plane and inside the image.
fn view_point(pose_cw: &Pose, p: &Point3<f64>, cam: &CameraModel, near: f64) -> Option<Point2<f64>> {
    let pc = pose_cw.transform_point(p);
    if pc.z < near {
        return None;
    }
    cam.project(&pc).filter(|m| cam.contains(m))
}

/// Liang-Barsky clip of `a -> b` to the rectangle `[0, xmax] x [0, ymax]`.
fn clip_to_rect(a: Point2<f64>, b: Point2<f64>, xmax: f64, ymax: f64) -> Option<(Point2<f64>, Point2<f64>)> {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [(-d.x, a.x), (d.x, xmax - a.x), (-d.y, a.y), (d.y, ymax - a.y)] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    (t0 <= t1).then(|| (a + d * t0, a + d * t1))
}

/// Projected segment clipped to the near plane and the image, or `None` if
/// less than `min_px` remains.
pub fn view_segment(
    pose_cw: &Pose,
    seg: &(Point3<f64>, Point3<f64>),
    cam: &CameraModel,
    near: f64,
    min_px: f64,
) -> Option<LineSegment2D> {
    let (mut a, mut b) = (pose_cw.transform_point(&seg.0), pose_cw.transform_point(&seg.1));
    if a.z < near && b.z < near {
        return None;
    }
    if a.z < near || b.z < near {
        let t = (near - a.z) / (b.z - a.z);
        let cut = a + (b - a) * t;
        if a.z < near {
            a = cut;
        } else {
            b = cut;
        }
    }
    let (pa, pb) = (cam.project(&a)?, cam.project(&b)?);
    let (qa, qb) = clip_to_rect(pa, pb, (cam.width - 1) as f64, (cam.height - 1) as f64)?;
    let s = LineSegment2D::new(qa, qb);
    (s.length >= min_px && s.length.is_finite()).then_some(s)
}

fn trajectory(cfg: &SceneConfig, rng: &mut ChaCha8Rng) -> Vec<(f64, Pose)> {
    let phase: f64 = rng.random_range(0.0..2.0 * PI);
    let n = cfg.keyframes as f64;
    (0..cfg.keyframes)
        .map(|i| {
            let s = i as f64 / n;
            let w = 2.0 * PI * s + phase;
            let p = Vector3::new(
                i as f64 * cfg.keyframe_spacing,
                cfg.sway * w.sin(),
                0.5 * cfg.corridor_height + 0.05 * (2.0 * w).cos(),
            );
            let q = UnitQuaternion::from_euler_angles(0.02 * w.cos(), 0.03 * (2.0 * w).sin(), 0.1 * w.sin());
            (i as f64 * cfg.keyframe_interval, Pose::new(q, p, Frame::Body, Frame::World))
        })
        .collect()
}

const MAX_TRIES: usize = 10_000;

/// Deterministic corridor scene. Every landmark is seen from at least the
/// configured number of keyframes.
pub fn generate_scene(cfg: &SceneConfig, seed: u64) -> Result<SyntheticScene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trajectory = trajectory(cfg, &mut rng);
    let t_bc = default_extrinsic();
    let cam = cfg.camera;
    let views: Vec<Pose> = trajectory.iter().map(|(_, p)| p.compose(&t_bc).inverse()).collect();
    let (hw, h) = (0.5 * cfg.corridor_width, cfg.corridor_height);
    let x_lo = trajectory[0].1.translation.x + 1.5;
    let x_hi = trajectory.last().expect("nonempty").1.translation.x + 10.0;

    let mut points = Vec::with_capacity(cfg.points);
    for i in 0..cfg.points {
        let mut placed = None;
        for _ in 0..MAX_TRIES {
            let x = rng.random_range(x_lo..x_hi);
            let p = match rng.random_range(0..4) {
                0 => Point3::new(x, -hw, rng.random_range(0.0..h)),
                1 => Point3::new(x, hw, rng.random_range(0.0..h)),
                2 => Point3::new(x, rng.random_range(-hw..hw), 0.0),
                _ => Point3::new(x, rng.random_range(-hw..hw), h),
            };
            let seen = views.iter().filter(|v| view_point(v, &p, &cam, cfg.near).is_some()).count();
            if seen >= cfg.min_point_views {
                placed = Some(p);
                break;
            }
        }
        points.push(placed.ok_or_else(|| invalid(format!("point {i}: visibility constraint infeasible")))?);
    }

    let mut segments = Vec::with_capacity(cfg.lines);
    for j in 0..cfg.lines {
        let mut placed = None;
        for _ in 0..MAX_TRIES {
            let x = rng.random_range(x_lo..x_hi);
            let len = rng.random_range(0.5..2.0);
            let side = if rng.random_bool(0.5) { -hw } else { hw };
            let seg = match rng.random_range(0..10) {
                // Vertical edges on the walls (door frames).
                0..=3 => {
                    let z0 = rng.random_range(0.0..(h - len).max(0.01));
                    (Point3::new(x, side, z0), Point3::new(x, side, (z0 + len).min(h)))
                }
                // Lateral edges across floor or ceiling.
                4..=6 => {
                    let z = if rng.random_bool(0.5) { 0.0 } else { h };
                    let y0 = rng.random_range(-hw..(hw - len).max(-hw + 0.01));
                    (Point3::new(x, y0, z), Point3::new(x, (y0 + len).min(hw), z))
                }
                // Edges along the corridor on the walls.
                _ => {
                    let z = rng.random_range(0.2..h - 0.2);
                    (Point3::new(x, side, z), Point3::new(x + len, side, z))
                }
            };
            let seen = views
                .iter()
                .filter(|v| view_segment(v, &seg, &cam, cfg.near, cfg.min_segment_px).is_some())
                .count();
            if seen >= cfg.min_line_views {
                placed = Some(seg);
                break;
            }
        }
        segments.push(placed.ok_or_else(|| invalid(format!("line {j}: visibility constraint infeasible")))?);
    }
    Ok(SyntheticScene { points, segments, trajectory, t_bc, camera: cam, config: *cfg, seed })
}

/// Noisy measurements of every visible landmark. Segment endpoints are
/// clipped before noise is added.
pub fn project_scene(scene: &SyntheticScene, sigma: f64, seed: u64) -> Result<Vec<FrameObservations>> {
    if !(sigma >= 0.0) {
        return Err(invalid(format!("noise sigma must be nonnegative, got {sigma}")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = |m: Point2<f64>| {
        if sigma == 0.0 {
            m
        } else {
            Point2::new(m.x + normal.sample(&mut rng), m.y + normal.sample(&mut rng))
        }
    };
    let (cam, near, min_px) = (scene.camera, scene.config.near, scene.config.min_segment_px);
    let mut frames = Vec::with_capacity(scene.trajectory.len());
    for k in 0..scene.trajectory.len() {
        let view = scene.camera_pose(k).inverse();
        let mut f = FrameObservations::default();
        for (i, p) in scene.points.iter().enumerate() {
            if let Some(m) = view_point(&view, p, &cam, near) {
                f.points.push((i, noise(m)));
            }
        }
        for (j, seg) in scene.segments.iter().enumerate() {
            if let Some(s) = view_segment(&view, seg, &cam, near, min_px) {
                f.lines.push((j, LineSegment2D::new(noise(s.p1), noise(s.p2))));
            }
        }
        frames.push(f);
    }
    Ok(frames)
}
