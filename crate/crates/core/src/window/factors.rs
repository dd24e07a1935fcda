use super::state::{KeyframeState, Measurement, Observation, PointLandmark};
use crate::error::{degenerate, invalid, Result};
use crate::geometry::{line_residual, residual_jacobian, skew, CameraModel, OrthonormalLine, Pose};
use crate::lsd::LineSegment2D;
use nalgebra::{Matrix2x3, Matrix2x6, Matrix3, Matrix6, Point2, RowVector4, RowVector6, Vector2};
use serde::{Deserialize, Serialize};

/// Huber norm on a squared, whitened residual: `s` up to 1, `2 sqrt(s) - 1` beyond.
pub fn huber(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(invalid(format!("huber needs a nonnegative argument, got {s}")));
    }
    Ok(if s <= 1.0 { s } else { 2.0 * s.sqrt() - 1.0 })
}

/// Derivative of [`huber`] with respect to `s`; the IRLS weight.
pub(crate) fn huber_weight(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else {
        1.0 / s.sqrt()
    }
}

/// Maps a Jacobian with respect to a camera pose `(dp_c, dphi_c)` to the
/// body pose of the keyframe carrying that camera.
pub(crate) fn body_chain(kf: &KeyframeState, t_bc: &Pose) -> Matrix6<f64> {
    let mut m = Matrix6::identity();
    let r_wb = kf.q.to_rotation_matrix().into_inner();
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-r_wb * skew(&t_bc.translation)));
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&t_bc.rotation_matrix().transpose());
    m
}

fn point_measurement(obs: &Observation) -> Result<Point2<f64>> {
    match obs.measurement {
        Measurement::Point(m) => Ok(m),
        Measurement::Line(_) => Err(invalid("expected a point observation")),
    }
}

/// Reprojection of a point landmark into the host keyframe minus the observed
/// pixel. The landmark travels anchor camera to world to host camera.
pub fn point_residual(
    obs: &Observation,
    anchor: &KeyframeState,
    host: &KeyframeState,
    lm: &PointLandmark,
    t_bc: &Pose,
    cam: &CameraModel,
) -> Result<Vector2<f64>> {
    let m = point_measurement(obs)?;
    let p_w = lm.world_point(&anchor.camera_pose(t_bc));
    let p_h = host.camera_pose(t_bc).inverse().transform_point(&p_w);
    let px = cam.project(&p_h).ok_or_else(|| degenerate("point behind the host camera"))?;
    Ok(px - m)
}

/// Point residual with Jacobians with respect to the anchor and host body
/// poses `(dp, dphi)` and the inverse depth.
#[derive(Clone, Copy, Debug)]
pub struct PointJacobian {
    pub residual: Vector2<f64>,
    pub anchor: Matrix2x6<f64>,
    pub host: Matrix2x6<f64>,
    pub lambda: Vector2<f64>,
}

pub fn point_jacobian(
    obs: &Observation,
    anchor: &KeyframeState,
    host: &KeyframeState,
    lm: &PointLandmark,
    t_bc: &Pose,
    cam: &CameraModel,
    same_keyframe: bool,
) -> Result<PointJacobian> {
    let residual = point_residual(obs, anchor, host, lm, t_bc, cam)?;
    if same_keyframe {
        // Self-projection is independent of every variable.
        return Ok(PointJacobian {
            residual,
            anchor: Matrix2x6::zeros(),
            host: Matrix2x6::zeros(),
            lambda: Vector2::zeros(),
        });
    }
    let (pa, ph) = (anchor.camera_pose(t_bc), host.camera_pose(t_bc));
    let (ra, rh) = (pa.rotation_matrix(), ph.rotation_matrix());
    let p_ca = lm.camera_point();
    let p_w = pa.transform_point(&p_ca);
    let p_h = rh.transpose() * (p_w.coords - ph.translation);
    let z = p_h.z;
    let dproj = Matrix2x3::new(
        cam.fx / z,
        0.0,
        -cam.fx * p_h.x / (z * z),
        0.0,
        cam.fy / z,
        -cam.fy * p_h.y / (z * z),
    );
    let rht: Matrix3<f64> = rh.transpose();
    let mut ja = Matrix2x6::zeros();
    ja.fixed_view_mut::<2, 3>(0, 0).copy_from(&(dproj * rht));
    ja.fixed_view_mut::<2, 3>(0, 3).copy_from(&(dproj * (-rht * ra * skew(&p_ca.coords))));
    let mut jh = Matrix2x6::zeros();
    jh.fixed_view_mut::<2, 3>(0, 0).copy_from(&(dproj * -rht));
    jh.fixed_view_mut::<2, 3>(0, 3).copy_from(&(dproj * skew(&p_h)));
    let lambda = dproj * (rht * ra * (-lm.bearing / (lm.lambda * lm.lambda)));
    Ok(PointJacobian {
        residual,
        anchor: ja * body_chain(anchor, t_bc),
        host: jh * body_chain(host, t_bc),
        lambda,
    })
}

/// Where a line observation is compared against the projected line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineResidual {
    /// One scalar residual at the segment midpoint.
    #[default]
    Midpoint,
    /// Two residuals, one per segment endpoint. Midpoints alone leave the
    /// line direction weakly observed when successive views see the same
    /// stretch of the line.
    Endpoints,
}

impl LineResidual {
    pub fn residuals_per_observation(self) -> usize {
        match self {
            LineResidual::Midpoint => 1,
            LineResidual::Endpoints => 2,
        }
    }

    /// Pixels of `seg` at which the residual is evaluated.
    pub fn samples(self, seg: &LineSegment2D) -> Vec<Point2<f64>> {
        match self {
            LineResidual::Midpoint => vec![seg.midpoint()],
            LineResidual::Endpoints => vec![seg.p1, seg.p2],
        }
    }
}

fn line_segment(obs: &Observation) -> Result<&LineSegment2D> {
    match &obs.measurement {
        Measurement::Line(seg) => Ok(seg),
        Measurement::Point(_) => Err(invalid("expected a line observation")),
    }
}

/// `(huber(|r|^2 / sigma^2), r)` for the point-to-line residuals `r` of the
/// observed segment against the projected line, one per sample of `mode`.
pub fn line_factor_cost(
    obs: &Observation,
    host: &KeyframeState,
    line: &OrthonormalLine,
    t_bc: &Pose,
    cam: &CameraModel,
    mode: LineResidual,
) -> Result<(f64, Vec<f64>)> {
    let pose = host.camera_pose(t_bc);
    let r = mode
        .samples(line_segment(obs)?)
        .iter()
        .map(|m| line_residual(&pose, line, m, cam))
        .collect::<Result<Vec<f64>>>()?;
    let s = r.iter().map(|v| v * v).sum::<f64>() / (obs.sigma * obs.sigma);
    Ok((huber(s)?, r))
}

/// Raw line residual at pixel `m` with Jacobians with respect to the host
/// body pose and the orthonormal line update.
pub fn line_jacobian(
    m: &Point2<f64>,
    host: &KeyframeState,
    line: &OrthonormalLine,
    t_bc: &Pose,
    cam: &CameraModel,
) -> Result<(f64, RowVector6<f64>, RowVector4<f64>)> {
    let j = residual_jacobian(&host.camera_pose(t_bc), line, m, cam)?;
    Ok((j.residual, j.pose * body_chain(host, t_bc), j.line))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{to_orthonormal, update_orthonormal, Frame, PluckerLine};
    use crate::lsd::LineSegment2D;
    use nalgebra::{Point3, UnitQuaternion, Vector3, Vector4};

    fn t_bc() -> Pose {
        Pose::new(
            UnitQuaternion::from_euler_angles(-1.5, 0.1, -1.6),
            Vector3::new(0.05, -0.02, 0.1),
            Frame::Camera,
            Frame::Body,
        )
    }

    fn kf(roll: f64, yaw: f64, p: Vector3<f64>) -> KeyframeState {
        KeyframeState::from_pose(&Pose::new(UnitQuaternion::from_euler_angles(roll, 0.05, yaw), p, Frame::Body, Frame::World))
    }

    fn setup() -> (KeyframeState, KeyframeState, PointLandmark, Point3<f64>, CameraModel) {
        let cam = CameraModel::default();
        let a = kf(0.02, 0.1, Vector3::new(0.0, 0.0, 1.0));
        let h = kf(-0.03, 0.15, Vector3::new(0.3, 0.1, 1.05));
        let pa = a.camera_pose(&t_bc());
        let target = pa.transform_point(&Point3::new(0.3, -0.2, 4.0));
        let lm = PointLandmark::from_world(0, &pa, &target).unwrap();
        (a, h, lm, target, cam)
    }

    #[test]
    fn huber_examples() {
        assert_eq!(huber(0.5).unwrap(), 0.5);
        assert_eq!(huber(1.0).unwrap(), 1.0);
        assert_eq!(huber(4.0).unwrap(), 3.0);
        assert!(huber(-1e-12).is_err());
        assert!(huber(f64::NAN).is_err());
    }

    #[test]
    fn self_projection_is_zero() {
        let (a, _, lm, _, cam) = setup();
        let m = cam.project(&Point3::from(lm.bearing)).unwrap();
        let obs = Observation::point(0, 0, m, 1.0);
        assert!(point_residual(&obs, &a, &a, &lm, &t_bc(), &cam).unwrap().norm() < 1e-12);
    }

    #[test]
    fn exact_observation_gives_zero_residual() {
        let (a, h, lm, target, cam) = setup();
        let m = cam.project(&h.camera_pose(&t_bc()).inverse().transform_point(&target)).unwrap();
        let obs = Observation::point(1, 0, m, 1.0);
        assert!(point_residual(&obs, &a, &h, &lm, &t_bc(), &cam).unwrap().norm() < 1e-9);
    }

    #[test]
    fn doubled_inverse_depth_shows_parallax() {
        // Anchor camera at the origin looking along +z; host 10 cm to the right.
        let cam = CameraModel::default();
        let ident = Pose::identity(Frame::Camera, Frame::Body);
        let a = KeyframeState::from_pose(&Pose::identity(Frame::Body, Frame::World));
        let h = KeyframeState::from_pose(&Pose::new(
            UnitQuaternion::identity(),
            Vector3::new(0.1, 0.0, 0.0),
            Frame::Body,
            Frame::World,
        ));
        let lm = PointLandmark { anchor: 0, bearing: Vector3::z(), lambda: 0.5 };
        let m = cam.project(&Point3::new(-0.1, 0.0, 2.0)).unwrap();
        let obs = Observation::point(1, 0, m, 1.0);
        assert!(point_residual(&obs, &a, &h, &lm, &ident, &cam).unwrap().norm() < 1e-12);
        let doubled = PointLandmark { lambda: 1.0, ..lm };
        let r = point_residual(&obs, &a, &h, &doubled, &ident, &cam).unwrap();
        // Depth 1 m instead of 2 m: u shifts from f*(-0.1/2) to f*(-0.1/1).
        assert!((r.x - cam.fx * (-0.1 + 0.05)).abs() < 1e-12 && r.y.abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn point_behind_host_is_a_cheirality_error() {
        let cam = CameraModel::default();
        let ident = Pose::identity(Frame::Camera, Frame::Body);
        let a = KeyframeState::from_pose(&Pose::identity(Frame::Body, Frame::World));
        let h = KeyframeState::from_pose(&Pose::new(
            UnitQuaternion::identity(),
            Vector3::new(0.0, 0.0, 3.0),
            Frame::Body,
            Frame::World,
        ));
        let lm = PointLandmark { anchor: 0, bearing: Vector3::z(), lambda: 0.5 };
        let obs = Observation::point(1, 0, Point2::new(376.0, 240.0), 1.0);
        assert!(point_residual(&obs, &a, &h, &lm, &ident, &cam).is_err());
    }

    fn perturb(kf: &KeyframeState, d: &[f64; 6]) -> KeyframeState {
        let p = kf.pose_wb().perturbed(&Vector3::new(d[0], d[1], d[2]), &Vector3::new(d[3], d[4], d[5]));
        KeyframeState { p: p.translation, q: p.rotation, ..*kf }
    }

    #[test]
    fn point_jacobian_matches_finite_differences() {
        let (a, h, lm, target, cam) = setup();
        let m = cam.project(&h.camera_pose(&t_bc()).inverse().transform_point(&target)).unwrap()
            + Vector2::new(1.5, -0.7);
        let obs = Observation::point(1, 0, m, 1.0);
        let j = point_jacobian(&obs, &a, &h, &lm, &t_bc(), &cam, false).unwrap();
        let eps = 1e-6;
        for k in 0..6 {
            let mut d = [0.0; 6];
            d[k] = eps;
            let neg = d.map(|v| -v);
            let fa = |dd: &[f64; 6]| point_residual(&obs, &perturb(&a, dd), &h, &lm, &t_bc(), &cam).unwrap();
            let fh = |dd: &[f64; 6]| point_residual(&obs, &a, &perturb(&h, dd), &lm, &t_bc(), &cam).unwrap();
            let na = (fa(&d) - fa(&neg)) / (2.0 * eps);
            let nh = (fh(&d) - fh(&neg)) / (2.0 * eps);
            assert!((na - j.anchor.column(k)).norm() < 1e-5 * j.anchor.norm(), "anchor {k}");
            assert!((nh - j.host.column(k)).norm() < 1e-5 * j.host.norm(), "host {k}");
        }
        let f = |l: f64| point_residual(&obs, &a, &h, &PointLandmark { lambda: l, ..lm }, &t_bc(), &cam).unwrap();
        let nl = (f(lm.lambda + eps) - f(lm.lambda - eps)) / (2.0 * eps);
        assert!((nl - j.lambda).norm() < 1e-5 * j.lambda.norm());
    }

    fn line_setup() -> (KeyframeState, OrthonormalLine, CameraModel, LineSegment2D) {
        let cam = CameraModel::default();
        let h = kf(0.02, 0.1, Vector3::new(0.2, -0.1, 1.0));
        let pc = h.camera_pose(&t_bc());
        let a = pc.transform_point(&Point3::new(-0.8, 0.3, 4.0));
        let b = pc.transform_point(&Point3::new(0.9, -0.2, 5.0));
        let line = to_orthonormal(&PluckerLine::from_points(&a, &b).unwrap()).unwrap();
        let pa = cam.project(&Point3::new(-0.8, 0.3, 4.0)).unwrap();
        let pb = cam.project(&Point3::new(0.9, -0.2, 5.0)).unwrap();
        (h, line, cam, LineSegment2D::new(pa, pb))
    }

    #[test]
    fn line_cost_examples() {
        let (h, line, cam, seg) = line_setup();
        let exact = Observation::line(0, 0, seg, 1.0);
        for mode in [LineResidual::Midpoint, LineResidual::Endpoints] {
            let (c, r) = line_factor_cost(&exact, &h, &line, &t_bc(), &cam, mode).unwrap();
            assert!(c < 1e-18 && r.len() == mode.residuals_per_observation() && r.iter().all(|v| v.abs() < 1e-9));
        }
        // Shift the segment by k sigma along the image-line normal.
        let n = nalgebra::Vector2::new(-seg.direction().y, seg.direction().x);
        for (k, expected) in [(1.0, 1.0), (2.0, 3.0)] {
            let sigma = 0.8;
            let shifted = LineSegment2D::new(seg.p1 + n * k * sigma, seg.p2 + n * k * sigma);
            let obs = Observation::line(0, 0, shifted, sigma);
            let (c, r) = line_factor_cost(&obs, &h, &line, &t_bc(), &cam, LineResidual::Midpoint).unwrap();
            assert!((r[0].abs() - k * sigma).abs() < 1e-9);
            assert!((c - expected).abs() < 1e-9, "{c}");
            // Both endpoints sit k sigma off, so the squared norm doubles.
            let (c, _) = line_factor_cost(&obs, &h, &line, &t_bc(), &cam, LineResidual::Endpoints).unwrap();
            assert!((c - huber(2.0 * k * k).unwrap()).abs() < 1e-9, "{c}");
        }
    }

    #[test]
    fn line_jacobian_matches_finite_differences() {
        let (h, line, cam, seg) = line_setup();
        let m = seg.midpoint() + Vector2::new(0.0, 1.5);
        let (_, jp, jl) = line_jacobian(&m, &h, &line, &t_bc(), &cam).unwrap();
        let eps = 1e-6;
        let f = |k: &KeyframeState, l: &OrthonormalLine| line_residual(&k.camera_pose(&t_bc()), l, &m, &cam).unwrap();
        for k in 0..6 {
            let mut d = [0.0; 6];
            d[k] = eps;
            let fd = (f(&perturb(&h, &d), &line) - f(&perturb(&h, &d.map(|v| -v)), &line)) / (2.0 * eps);
            assert!((fd - jp[k]).abs() < 1e-5 * jp.abs().max(), "pose {k}: {fd} vs {}", jp[k]);
        }
        for k in 0..4 {
            let mut d = Vector4::zeros();
            d[k] = eps;
            let fd = (f(&h, &update_orthonormal(&line, &d)) - f(&h, &update_orthonormal(&line, &-d))) / (2.0 * eps);
            assert!((fd - jl[k]).abs() < 1e-5 * jl.abs().max(), "line {k}");
        }
    }

    #[test]
    fn huber_never_exceeds_the_square() {
        for i in 0..10_000 {
            let s = i as f64 * 1e-3;
            assert!(huber(s).unwrap() <= s + 1e-15);
        }
    }
}
