//! ATE and RPE on a drifting trajectory, with a TUM round trip.
//!
//! `cargo run --example trajectory_eval`

use lineslam::geometry::{Frame, Pose};
use lineslam::sim::{ate_rmse, read_tum, rpe, write_tum, RpeDelta, StampedPose};
use nalgebra::{UnitQuaternion, Vector3};

fn main() -> lineslam::Result<()> {
    let pose = |x: f64, yaw: f64| Pose::new(UnitQuaternion::from_euler_angles(0.0, 0.0, yaw), Vector3::new(x, 0.0, 0.0), Frame::Body, Frame::World);
    let truth: Vec<StampedPose> = (0..10).map(|i| StampedPose { t: i as f64 * 0.5, pose: pose(i as f64, 0.0) }).collect();
    // One extra centimeter per frame.
    let est: Vec<StampedPose> = (0..10).map(|i| StampedPose { t: i as f64 * 0.5, pose: pose(i as f64 * 1.01, 0.0) }).collect();

    println!("ATE aligned {:.5} m, raw {:.5} m", ate_rmse(&est, &truth, true)?, ate_rmse(&est, &truth, false)?);
    for (label, delta) in [("1 frame", RpeDelta::Frames(1)), ("1 s", RpeDelta::Seconds(1.0)), ("all pairs", RpeDelta::AllPairs)] {
        let r = rpe(&est, &truth, delta)?;
        println!("RPE {label:>9}: {:.4} m, {:.4} deg over {} pairs", r.trans, r.rot_deg, r.pairs);
    }
    let text = write_tum(&est);
    println!("TUM:\n{}", text.lines().take(2).collect::<Vec<_>>().join("\n"));
    assert_eq!(write_tum(&read_tum(&text)?), text);
    Ok(())
}
