use crate::error::{invalid, Result};
use crate::geometry::{Frame, OrthonormalLine, Pose};
use crate::lsd::LineSegment2D;
use nalgebra::{Point2, Point3, UnitQuaternion, Vector3};

/// One keyframe of the window. `q` rotates body coordinates into the world.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyframeState {
    pub p: Vector3<f64>,
    pub q: UnitQuaternion<f64>,
    pub v: Vector3<f64>,
    pub b_a: Vector3<f64>,
    pub b_g: Vector3<f64>,
    /// Velocity and biases have no factor here; they stay frozen unless set.
    pub optimize_inertial: bool,
}

impl KeyframeState {
    pub fn from_pose(pose_wb: &Pose) -> Self {
        assert_eq!((pose_wb.from, pose_wb.to), (Frame::Body, Frame::World), "keyframe pose must be body-to-world");
        Self {
            p: pose_wb.translation,
            q: pose_wb.rotation,
            v: Vector3::zeros(),
            b_a: Vector3::zeros(),
            b_g: Vector3::zeros(),
            optimize_inertial: false,
        }
    }

    pub fn pose_wb(&self) -> Pose {
        Pose::new(self.q, self.p, Frame::Body, Frame::World)
    }

    /// Camera-to-world pose `T_wb T_bc`.
    pub fn camera_pose(&self, t_bc: &Pose) -> Pose {
        self.pose_wb().compose(t_bc)
    }
}

/// Point stored as a unit bearing in its anchor camera frame and the inverse
/// of its distance from that camera.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointLandmark {
    pub anchor: usize,
    pub bearing: Vector3<f64>,
    pub lambda: f64,
}

impl PointLandmark {
    /// Landmark anchored at a camera with pose `pose_wc` for world point `p_w`.
    pub fn from_world(anchor: usize, pose_wc: &Pose, p_w: &Point3<f64>) -> Result<Self> {
        let p_c = pose_wc.inverse().transform_point(p_w);
        let dist = p_c.coords.norm();
        if !(p_c.z > 0.0) || !dist.is_finite() {
            return Err(crate::error::degenerate("point is not in front of its anchor camera"));
        }
        Ok(Self { anchor, bearing: p_c.coords / dist, lambda: 1.0 / dist })
    }

    pub fn camera_point(&self) -> Point3<f64> {
        Point3::from(self.bearing / self.lambda)
    }

    pub fn world_point(&self, anchor_pose_wc: &Pose) -> Point3<f64> {
        anchor_pose_wc.transform_point(&self.camera_point())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Measurement {
    Point(Point2<f64>),
    /// The residual samples the midpoint or both endpoints, see `LineResidual`.
    Line(LineSegment2D),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub keyframe: usize,
    /// Index into `WindowState::points` or `WindowState::lines` by measurement kind.
    pub feature: usize,
    pub measurement: Measurement,
    /// Pixels.
    pub sigma: f64,
}

impl Observation {
    pub fn point(keyframe: usize, feature: usize, m: Point2<f64>, sigma: f64) -> Self {
        Self { keyframe, feature, measurement: Measurement::Point(m), sigma }
    }

    pub fn line(keyframe: usize, feature: usize, seg: LineSegment2D, sigma: f64) -> Self {
        Self { keyframe, feature, measurement: Measurement::Line(seg), sigma }
    }

    pub fn is_point(&self) -> bool {
        matches!(self.measurement, Measurement::Point(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowState {
    pub keyframes: Vec<KeyframeState>,
    pub points: Vec<PointLandmark>,
    pub lines: Vec<OrthonormalLine>,
    /// Camera-to-body extrinsic, known and fixed.
    pub t_bc: Pose,
    /// Maximum number of keyframes.
    pub capacity: usize,
}

impl WindowState {
    pub fn new(t_bc: Pose, capacity: usize) -> Result<Self> {
        if (t_bc.from, t_bc.to) != (Frame::Camera, Frame::Body) {
            return Err(invalid("extrinsic must map camera to body"));
        }
        if capacity < 2 {
            return Err(invalid(format!("window capacity must be at least 2, got {capacity}")));
        }
        Ok(Self { keyframes: Vec::new(), points: Vec::new(), lines: Vec::new(), t_bc, capacity })
    }

    pub fn camera_pose(&self, k: usize) -> Pose {
        self.keyframes[k].camera_pose(&self.t_bc)
    }

    pub fn point_world(&self, i: usize) -> Point3<f64> {
        let lm = &self.points[i];
        lm.world_point(&self.camera_pose(lm.anchor))
    }

    /// Checks index ranges and unit-norm invariants.
    pub fn validate(&self, observations: &[Observation]) -> Result<()> {
        if self.keyframes.len() > self.capacity {
            return Err(invalid(format!("{} keyframes exceed capacity {}", self.keyframes.len(), self.capacity)));
        }
        for (k, kf) in self.keyframes.iter().enumerate() {
            if (kf.q.as_ref().norm() - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("keyframe {k} quaternion is not unit")));
            }
        }
        for (i, lm) in self.points.iter().enumerate() {
            if lm.anchor >= self.keyframes.len() {
                return Err(invalid(format!("point {i} anchored at missing keyframe {}", lm.anchor)));
            }
            if !(lm.lambda > 0.0) || (lm.bearing.norm() - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("point {i} needs a positive inverse depth and a unit bearing")));
            }
        }
        for (j, o) in observations.iter().enumerate() {
            let count = if o.is_point() { self.points.len() } else { self.lines.len() };
            if o.keyframe >= self.keyframes.len() || o.feature >= count {
                return Err(invalid(format!("observation {j} references a missing keyframe or feature")));
            }
            if !(o.sigma > 0.0) {
                return Err(invalid(format!("observation {j} has non-positive sigma")));
            }
        }
        Ok(())
    }
}
