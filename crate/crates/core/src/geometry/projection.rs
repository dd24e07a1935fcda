//! Image-plane projection of space lines, the point-to-line residual and its
//! analytic Jacobians.

use super::{from_orthonormal, skew, transform_line, CameraModel, OrthonormalLine, PluckerLine, Pose};
use crate::error::{degenerate, Result};
use nalgebra::{Matrix3, Matrix3x4, Point2, RowVector3, RowVector4, RowVector6, Vector3};

/// Homogeneous image line `l = K_L n_c` of a camera-frame line.
pub fn project_line(line_c: &PluckerLine, cam: &CameraModel) -> Result<Vector3<f64>> {
    let l = cam.k_l() * line_c.n;
    if !(l.x.hypot(l.y) > 1e-12 * l.norm()) || !l.iter().all(|v| v.is_finite()) {
        return Err(degenerate("line projects through the optical center"));
    }
    Ok(l)
}

/// Signed pixel distance `m^T l / sqrt(l1^2 + l2^2)` of `m` from image line `l`.
pub fn point_line_residual(m: &Point2<f64>, l: &Vector3<f64>) -> Result<f64> {
    let s = l.x.hypot(l.y);
    if !(s > 0.0) {
        return Err(degenerate("image line has no direction"));
    }
    Ok((m.x * l.x + m.y * l.y + l.z) / s)
}

/// Residual of a world line observed at pixel `m` by a camera with pose
/// `pose_wc` (camera to world).
pub fn line_residual(pose_wc: &Pose, line_w: &OrthonormalLine, m: &Point2<f64>, cam: &CameraModel) -> Result<f64> {
    let l = project_world_line(pose_wc, &from_orthonormal(line_w), cam)?;
    point_line_residual(m, &l)
}

/// Image line of a world-frame Plücker line.
pub fn project_world_line(pose_wc: &Pose, line_w: &PluckerLine, cam: &CameraModel) -> Result<Vector3<f64>> {
    if line_w.is_at_infinity() {
        return Err(degenerate("line at infinity"));
    }
    project_line(&transform_line(line_w, &pose_wc.inverse()), cam)
}

/// Derivative of the residual with respect to the image line coefficients.
fn d_residual_d_line(m: &Point2<f64>, l: &Vector3<f64>) -> RowVector3<f64> {
    let s = l.x * l.x + l.y * l.y;
    let rs = s.sqrt();
    let e = m.x * l.x + m.y * l.y + l.z;
    let s32 = s * rs;
    RowVector3::new(m.x / rs - e * l.x / s32, m.y / rs - e * l.y / s32, 1.0 / rs)
}

/// Jacobian blocks of the residual at pixel `m`.
#[derive(Clone, Copy, Debug)]
pub struct LineJacobian {
    pub residual: f64,
    /// With respect to `(dt, dphi)` where `p_wc <- p_wc + dt` and `R_wc <- R_wc Exp(dphi)`.
    pub pose: RowVector6<f64>,
    /// With respect to `(dv, dtheta)` of [`update_orthonormal`](super::update_orthonormal).
    pub line: RowVector4<f64>,
}

/// Analytic chain-rule Jacobians of the point-to-line residual through the
/// projection, the world-to-camera transform and the orthonormal recovery.
pub fn residual_jacobian(
    pose_wc: &Pose,
    line_w: &OrthonormalLine,
    m: &Point2<f64>,
    cam: &CameraModel,
) -> Result<LineJacobian> {
    let plucker = from_orthonormal(line_w);
    if plucker.is_at_infinity() {
        return Err(degenerate("line at infinity"));
    }
    let r_wc = pose_wc.rotation_matrix();
    let r_cw = r_wc.transpose();
    let p = pose_wc.translation;
    // n_c = R_cw (n_w - p x d_w)
    let n_c = r_cw * (plucker.n - p.cross(&plucker.d));
    let k_l = cam.k_l();
    let l = k_l * n_c;
    let residual = point_line_residual(m, &project_line(&PluckerLine { n: n_c, d: r_cw * plucker.d }, cam)?)?;
    let dr_dn = d_residual_d_line(m, &l) * k_l;

    let dn_dt: Matrix3<f64> = r_cw * skew(&plucker.d);
    let dn_dphi: Matrix3<f64> = skew(&n_c);
    let mut pose = RowVector6::zeros();
    pose.fixed_view_mut::<1, 3>(0, 0).copy_from(&(dr_dn * dn_dt));
    pose.fixed_view_mut::<1, 3>(0, 3).copy_from(&(dr_dn * dn_dphi));

    let u = line_w.u.matrix();
    let (u1, u2, u3) = (u.column(0).into_owned(), u.column(1).into_owned(), u.column(2).into_owned());
    let (w1, w2) = line_w.weights();
    let z = Vector3::zeros();
    let dnw = Matrix3x4::from_columns(&[z, -u3 * w1, u2 * w1, -u1 * w2]);
    let ddw = Matrix3x4::from_columns(&[u3 * w2, z, -u1 * w2, u2 * w1]);
    // dn_c/dn_w = R_cw, dn_c/dd_w = -R_cw [p]x
    let dnc = r_cw * dnw - r_cw * skew(&p) * ddw;
    Ok(LineJacobian { residual, pose, line: dr_dn * dnc })
}
