//! Space-line algebra.
//!
//! Conventions: a [`Pose`] `T_ab` maps frame-`b` coordinates into frame `a`.
//! Plücker lines store `(n, d)` with `n = p x d`. Pose perturbations are an
//! additive translation plus a right-multiplied rotation, `R Exp(dphi)`.

mod camera;
mod orthonormal;
mod plucker;
mod pose;
mod projection;

pub use camera::CameraModel;
pub use orthonormal::{first_order_update, from_orthonormal, to_orthonormal, update_orthonormal, OrthonormalLine};
pub use plucker::{
    plane_from_observation, transform_line, triangulate_dual_plucker, Plane, PluckerLine, ORTHOGONALITY_TOL,
};
pub use pose::{skew, Frame, Pose};
pub use projection::{
    line_residual, point_line_residual, project_line, project_world_line, residual_jacobian, LineJacobian,
};
