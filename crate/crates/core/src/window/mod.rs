//! Point and line sliding-window optimization.
//!
//! The state holds keyframe body poses, inverse-depth points anchored at a
//! keyframe camera and orthonormal lines in the world frame. Points contribute
//! a 2-vector reprojection residual, lines the signed distance of the observed
//! segment midpoint (or, with [`LineResidual::Endpoints`], of both endpoints)
//! from the projected line. Both are whitened by the
//! observation sigma and passed through [`huber`].
//!
//! Pose updates perturb the body pose as `p + dp`, `R Exp(dphi)`. Keyframe 0 is
//! fixed and, by default, the newest keyframe keeps its distance from
//! keyframe 0, which fixes the metric scale that camera measurements cannot observe.

mod factors;
mod maintain;
mod solver;
mod state;

pub use factors::{
    huber, line_factor_cost, line_jacobian, point_jacobian, point_residual, LineResidual, PointJacobian,
};
pub use maintain::{
    line_conditioning, slide_window, triangulate_new_lines, triangulate_new_points, triangulate_point, LineTrack, PointTrack,
    SlideOutcome, TriangulationConfig, TriangulationReport,
};
pub use solver::{optimize_window, window_cost, OptimizationReport, SolverConfig, Termination};
pub use state::{KeyframeState, Measurement, Observation, PointLandmark, WindowState};
