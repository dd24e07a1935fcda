//! Two views of a 3D segment: back-projected planes, their intersection, and
//! the reprojection residual of the triangulated line.
//!
//! `cargo run --example line_triangulation`

use lineslam::geometry::{
    line_residual, plane_from_observation, to_orthonormal, triangulate_dual_plucker, CameraModel, Frame, PluckerLine, Pose,
};
use lineslam::LineSegment2D;
use nalgebra::{Point3, UnitQuaternion, Vector3};

fn main() -> lineslam::Result<()> {
    let cam = CameraModel::default();
    let (a, b) = (Point3::new(-0.8, 0.3, 4.0), Point3::new(0.9, -0.2, 5.5));
    let views = [
        Pose::identity(Frame::Camera, Frame::World),
        Pose::new(UnitQuaternion::from_euler_angles(0.0, -0.05, 0.02), Vector3::new(0.4, 0.05, 0.1), Frame::Camera, Frame::World),
    ];
    let project = |pose: &Pose, p: &Point3<f64>| cam.project(&pose.inverse().transform_point(p)).expect("in front");
    let segs: Vec<LineSegment2D> = views.iter().map(|v| LineSegment2D::new(project(v, &a), project(v, &b))).collect();
    for (i, s) in segs.iter().enumerate() {
        println!("view {i}: ({:.2}, {:.2}) - ({:.2}, {:.2})", s.p1.x, s.p1.y, s.p2.x, s.p2.y);
    }
    let planes = [plane_from_observation(&views[0], &segs[0], &cam)?, plane_from_observation(&views[1], &segs[1], &cam)?];
    let line = triangulate_dual_plucker(&planes[0], &planes[1])?;
    println!("same line as the truth: {}", line.same_line(&PluckerLine::from_points(&a, &b)?, 1e-9));
    let o = to_orthonormal(&line)?;
    for (pose, s) in views.iter().zip(&segs) {
        let r1 = line_residual(pose, &o, &s.p1, &cam)?;
        let r2 = line_residual(pose, &o, &s.p2, &cam)?;
        println!("endpoint residuals {r1:.2e} {r2:.2e} px");
    }
    Ok(())
}
