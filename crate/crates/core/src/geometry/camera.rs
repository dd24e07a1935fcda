use crate::error::{invalid, Result};
use nalgebra::{Matrix3, Point2, Point3, Vector3};
use serde::{Deserialize, Serialize};

/// Pinhole intrinsics with image size. Pixel `(u, v)` has its center at integer coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraModel {
    /// 752x480 camera with a 460 px focal length.
    fn default() -> Self {
        Self { fx: 460.0, fy: 460.0, cx: 376.0, cy: 240.0, width: 752, height: 480 }
    }
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let cam = Self { fx, fy, cx, cy, width, height };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(invalid(format!("focal lengths must be positive, got {} {}", self.fx, self.fy)));
        }
        if !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(invalid("principal point must be finite"));
        }
        Ok(())
    }

    pub fn k(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Line projection matrix: image line `l = K_L n_c` for a Plücker normal `n_c`.
    pub fn k_l(&self) -> Matrix3<f64> {
        let (fx, fy, cx, cy) = (self.fx, self.fy, self.cx, self.cy);
        Matrix3::new(fy, 0.0, 0.0, 0.0, fx, 0.0, -fy * cx, -fx * cy, fx * fy)
    }

    /// Pixel of a camera-frame point, `None` at or behind the optical center plane.
    pub fn project(&self, p: &Point3<f64>) -> Option<Point2<f64>> {
        (p.z > 0.0).then(|| Point2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    /// Ray through a pixel on the normalized image plane (`z = 1`).
    pub fn backproject(&self, m: &Point2<f64>) -> Vector3<f64> {
        Vector3::new((m.x - self.cx) / self.fx, (m.y - self.cy) / self.fy, 1.0)
    }

    /// True if the pixel lies within the image, pixel centers spanning `[0, size - 1]`.
    pub fn contains(&self, m: &Point2<f64>) -> bool {
        m.x >= 0.0 && m.y >= 0.0 && m.x <= (self.width - 1) as f64 && m.y <= (self.height - 1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn project_backproject() {
        let cam = CameraModel::default();
        let p = Point3::new(0.4, -0.3, 2.5);
        let m = cam.project(&p).unwrap();
        let r = cam.backproject(&m);
        assert!((r * p.z - p.coords).norm() < 1e-12);
        assert!(cam.project(&Point3::new(0.0, 0.0, -1.0)).is_none());
    }

    #[test]
    fn rejects_bad_focal() {
        assert!(CameraModel::new(0.0, 1.0, 0.0, 0.0, 10, 10).is_err());
        assert!(CameraModel::new(1.0, -1.0, 0.0, 0.0, 10, 10).is_err());
    }

    #[test]
    fn k_l_layout() {
        let cam = CameraModel::new(2.0, 3.0, 5.0, 7.0, 10, 10).unwrap();
        let expected = Matrix3::new(3.0, 0.0, 0.0, 0.0, 2.0, 0.0, -15.0, -14.0, 6.0);
        assert_eq!(cam.k_l(), expected);
    }
}
