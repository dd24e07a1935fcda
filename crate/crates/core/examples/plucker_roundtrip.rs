//! Plücker coordinates, the four-parameter orthonormal form and a rigid
//! transform of a line.
//!
//! `cargo run --example plucker_roundtrip`

use lineslam::geometry::{from_orthonormal, to_orthonormal, transform_line, update_orthonormal, Frame, PluckerLine, Pose};
use nalgebra::{Point3, UnitQuaternion, Vector3, Vector4};

fn main() -> lineslam::Result<()> {
    let line = PluckerLine::from_points(&Point3::new(1.0, 2.0, 5.0), &Point3::new(2.0, 2.5, 6.0))?;
    println!("n = {:?}, d = {:?}, |n.d| = {:.1e}", line.n.as_slice(), line.d.as_slice(), line.orthogonality_residual());

    let o = to_orthonormal(&line)?;
    let (w1, w2) = o.weights();
    println!("orthonormal: theta = {:.6}, (w1, w2) = ({w1:.6}, {w2:.6}), distance to origin = {:.6}", o.theta, w1 / w2);
    let back = from_orthonormal(&o);
    println!("round trip recovers the line: {}", back.same_line(&line, 1e-9));

    let nudged = from_orthonormal(&update_orthonormal(&o, &Vector4::new(0.01, 0.0, 0.0, 0.0)));
    println!("after a 0.01 rad update the line moved: {}", !nudged.same_line(&line, 1e-6));

    let t = Pose::new(UnitQuaternion::from_euler_angles(0.1, -0.2, 0.3), Vector3::new(0.5, 0.0, -1.0), Frame::World, Frame::Camera);
    let moved = transform_line(&line, &t);
    let direct = PluckerLine::from_points(&t.transform_point(&Point3::new(1.0, 2.0, 5.0)), &t.transform_point(&Point3::new(2.0, 2.5, 6.0)))?;
    println!("transforming the line agrees with transforming its points: {}", moved.same_line(&direct, 1e-9));
    Ok(())
}
