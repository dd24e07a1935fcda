//! Absolute and relative trajectory error.

use crate::error::{invalid, Result};
use crate::geometry::Pose;
use nalgebra::{Matrix3, Point3, Vector3};
use serde::Serialize;

/// A pose with its timestamp in seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StampedPose {
    pub t: f64,
    pub pose: Pose,
}

fn check_matched(est: &[StampedPose], truth: &[StampedPose]) -> Result<()> {
    if est.len() != truth.len() {
        return Err(invalid(format!("trajectory lengths differ: {} vs {}", est.len(), truth.len())));
    }
    if est.is_empty() {
        return Err(invalid("empty trajectory"));
    }
    if let Some(i) = est.iter().zip(truth).position(|(a, b)| (a.t - b.t).abs() > 1e-6) {
        return Err(invalid(format!("timestamps differ at pose {i}: {} vs {}", est[i].t, truth[i].t)));
    }
    Ok(())
}

/// Rotation and translation minimizing `sum |R a_i + t - b_i|^2` (no scale).
pub fn align_se3(a: &[Point3<f64>], b: &[Point3<f64>]) -> (Matrix3<f64>, Vector3<f64>) {
    let n = a.len() as f64;
    let ca = a.iter().fold(Vector3::zeros(), |s, p| s + p.coords) / n;
    let cb = b.iter().fold(Vector3::zeros(), |s, p| s + p.coords) / n;
    let cov = a.iter().zip(b).fold(Matrix3::zeros(), |s, (p, q)| s + (q.coords - cb) * (p.coords - ca).transpose());
    let svd = cov.svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut d = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = u * d * vt;
    (r, cb - r * ca)
}

/// RMSE of position differences, after SE(3) alignment of the estimate when `align` is set.
pub fn ate_rmse(est: &[StampedPose], truth: &[StampedPose], align: bool) -> Result<f64> {
    check_matched(est, truth)?;
    let a: Vec<Point3<f64>> = est.iter().map(|s| Point3::from(s.pose.translation)).collect();
    let b: Vec<Point3<f64>> = truth.iter().map(|s| Point3::from(s.pose.translation)).collect();
    let (r, t) = if align { align_se3(&a, &b) } else { (Matrix3::identity(), Vector3::zeros()) };
    let sq: f64 = a.iter().zip(&b).map(|(p, q)| (r * p.coords + t - q.coords).norm_squared()).sum();
    Ok((sq / a.len() as f64).sqrt())
}

/// Pair selection for [`rpe`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RpeDelta {
    Frames(usize),
    /// Each pose is paired with the first later pose at least this many seconds on.
    Seconds(f64),
    /// Every ordered pair `i < j`.
    AllPairs,
}

impl std::str::FromStr for RpeDelta {
    type Err = crate::error::Error;

    /// `all`, `<n>` frames, `<n>f` frames or `<x>s` seconds.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid(format!("rpe delta must be `all`, `<frames>`, `<frames>f` or `<seconds>s`, got `{s}`"));
        if s == "all" {
            return Ok(RpeDelta::AllPairs);
        }
        if let Some(v) = s.strip_suffix('s') {
            let secs: f64 = v.parse().map_err(|_| bad())?;
            return if secs > 0.0 { Ok(RpeDelta::Seconds(secs)) } else { Err(bad()) };
        }
        let frames: usize = s.strip_suffix('f').unwrap_or(s).parse().map_err(|_| bad())?;
        if frames == 0 {
            return Err(bad());
        }
        Ok(RpeDelta::Frames(frames))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RpeResult {
    /// RMSE of relative translation errors, meters.
    pub trans: f64,
    /// RMSE of relative rotation angles, degrees.
    pub rot_deg: f64,
    pub pairs: usize,
}

fn rpe_pairs(stamps: &[f64], delta: RpeDelta) -> Result<Vec<(usize, usize)>> {
    let n = stamps.len();
    let pairs: Vec<(usize, usize)> = match delta {
        RpeDelta::Frames(d) => {
            if d >= n {
                return Err(invalid(format!("delta of {d} frames exceeds a {n}-pose trajectory")));
            }
            (0..n - d).map(|i| (i, i + d)).collect()
        }
        RpeDelta::Seconds(s) => {
            if s > stamps[n - 1] - stamps[0] + 1e-9 {
                return Err(invalid(format!("delta of {s} s exceeds the trajectory span")));
            }
            (0..n).filter_map(|i| (i + 1..n).find(|&j| stamps[j] - stamps[i] >= s - 1e-9).map(|j| (i, j))).collect()
        }
        RpeDelta::AllPairs => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
    };
    if pairs.is_empty() {
        return Err(invalid("no pose pairs at this delta"));
    }
    Ok(pairs)
}

/// Relative pose error: for each pair, the discrepancy between the estimated
/// and true motion from pose `i` to pose `j`.
pub fn rpe(est: &[StampedPose], truth: &[StampedPose], delta: RpeDelta) -> Result<RpeResult> {
    check_matched(est, truth)?;
    let stamps: Vec<f64> = truth.iter().map(|s| s.t).collect();
    let pairs = rpe_pairs(&stamps, delta)?;
    let (mut st, mut sr) = (0.0, 0.0);
    for &(i, j) in &pairs {
        let rel_e = est[i].pose.inverse().compose(&est[j].pose);
        let rel_t = truth[i].pose.inverse().compose(&truth[j].pose);
        let err = rel_t.inverse().compose(&rel_e);
        st += err.translation.norm_squared();
        sr += err.rotation.angle().to_degrees().powi(2);
    }
    let n = pairs.len() as f64;
    Ok(RpeResult { trans: (st / n).sqrt(), rot_deg: (sr / n).sqrt(), pairs: pairs.len() })
}
