//! TUM trajectory text: `timestamp tx ty tz qx qy qz qw` per line.

use super::metrics::StampedPose;
use crate::error::{Error, Result};
use crate::geometry::{Frame, Pose};
use nalgebra::{Quaternion, UnitQuaternion, Vector3};

/// `%.9g` formatting: nine significant digits, no trailing zeros.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    // Rounding can carry into the next decade; format then re-check.
    let sci = format!("{:.8e}", v);
    let (mantissa, e) = sci.split_once('e').expect("scientific");
    let e: i32 = e.parse().expect("exponent");
    let exp = exp.max(e);
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, v);
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
    }
}

pub fn write_tum(traj: &[StampedPose]) -> String {
    let mut out = String::new();
    for s in traj {
        let t = s.pose.translation;
        let q = s.pose.rotation.quaternion();
        let fields = [s.t, t.x, t.y, t.z, q.i, q.j, q.k, q.w].map(format_sig9);
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

/// Parses TUM text; `#` comments and blank lines are skipped. Poses are
/// tagged body-to-world.
pub fn read_tum(text: &str) -> Result<Vec<StampedPose>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = body
            .split_whitespace()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { offset: start, reason: format!("bad number: {e}") })?;
        if vals.len() != 8 || vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse { offset: start, reason: format!("expected 8 finite fields, got {}", vals.len()) });
        }
        let q = Quaternion::new(vals[7], vals[4], vals[5], vals[6]);
        if q.norm() < 1e-6 {
            return Err(Error::Parse { offset: start, reason: "zero quaternion".into() });
        }
        let pose = Pose::new(
            UnitQuaternion::from_quaternion(q),
            Vector3::new(vals[1], vals[2], vals[3]),
            Frame::Body,
            Frame::World,
        );
        out.push(StampedPose { t: vals[0], pose });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(-2.5), "-2.5");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(123456.7891234), "123456.789");
        assert_eq!(format_sig9(9.999999999), "10");
        assert_eq!(format_sig9(1.5e-7), "1.5e-07");
        assert_eq!(format_sig9(1234567891234.0), "1.23456789e+12");
    }

    #[test]
    fn round_trip() {
        let q = UnitQuaternion::from_euler_angles(0.1, 0.2, -0.3);
        let traj = vec![
            StampedPose { t: 0.0, pose: Pose::new(q, Vector3::new(1.0, -2.0, 0.5), Frame::Body, Frame::World) },
            StampedPose { t: 0.1, pose: Pose::identity(Frame::Body, Frame::World) },
        ];
        let text = write_tum(&traj);
        let back = read_tum(&format!("# header\n\n{text}")).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in traj.iter().zip(&back) {
            assert!((a.t - b.t).abs() < 1e-12);
            assert!((a.pose.translation - b.pose.translation).norm() < 1e-8);
            assert!(a.pose.rotation.angle_to(&b.pose.rotation) < 1e-8);
        }
        assert_eq!(write_tum(&back), text);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let err = read_tum("0 0 0 0 0 0 0 1\n1 2 3\n").unwrap_err();
        assert_eq!(err, Error::Parse { offset: 16, reason: "expected 8 finite fields, got 3".into() });
        assert!(matches!(read_tum("a b c d e f g h"), Err(Error::Parse { offset: 0, .. })));
    }
}
