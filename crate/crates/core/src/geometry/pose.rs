use nalgebra::{Matrix3, Point3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Coordinate frames: world, IMU body and camera.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    World,
    Body,
    Camera,
}

/// Rigid transform `T_to_from`: maps coordinates in `from` to coordinates in
/// `to` as `x_to = R x_from + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
    pub from: Frame,
    pub to: Frame,
}

/// Cross-product matrix: `skew(a) * b == a.cross(&b)`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

impl Pose {
    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>, from: Frame, to: Frame) -> Self {
        Self { rotation, translation, from, to }
    }

    pub fn identity(from: Frame, to: Frame) -> Self {
        Self::new(UnitQuaternion::identity(), Vector3::zeros(), from, to)
    }

    /// From a rotation matrix; the matrix is re-orthonormalized through the quaternion.
    pub fn from_matrix(r: &Matrix3<f64>, translation: Vector3<f64>, from: Frame, to: Frame) -> Self {
        let rot = Rotation3::from_matrix(r);
        Self::new(UnitQuaternion::from_rotation_matrix(&rot), translation, from, to)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.rotation.inverse();
        Pose::new(inv, -(inv * self.translation), self.to, self.from)
    }

    /// `self ∘ other`: apply `other` first. Panics if `other.to != self.from`.
    pub fn compose(&self, other: &Pose) -> Pose {
        assert_eq!(
            other.to, self.from,
            "cannot compose {:?}->{:?} after {:?}->{:?}",
            self.from, self.to, other.from, other.to
        );
        Pose::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
            other.from,
            self.to,
        )
    }

    /// Right-multiplied rotation perturbation with an additive translation:
    /// `R <- R Exp(dphi)`, `t <- t + dt`.
    pub fn perturbed(&self, dt: &Vector3<f64>, dphi: &Vector3<f64>) -> Pose {
        Pose::new(
            self.rotation * UnitQuaternion::from_scaled_axis(*dphi),
            self.translation + dt,
            self.from,
            self.to,
        )
    }

    /// Largest deviation of `R^T R` from the identity and of `|det R|` from one.
    pub fn orthonormality_error(&self) -> f64 {
        let r = self.rotation_matrix();
        let e = (r.transpose() * r - Matrix3::identity()).abs().max();
        e.max((r.determinant() - 1.0).abs()).max((self.rotation.as_ref().norm() - 1.0).abs())
    }
}
