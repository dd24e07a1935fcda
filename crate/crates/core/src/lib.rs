//! Line features for visual odometry back ends.
//!
//! - [`image`]: grayscale images, PGM I/O, Gaussian scaling, gradients, rendering.
//! - [`lsd`]: the line segment detector with density and length rejection.
//! - [`geometry`]: Plücker lines, orthonormal parameterization, projection and Jacobians.
//! - [`matching`]: binary band descriptors and gated mutual-best matching.
//! - [`window`]: point and line sliding-window Levenberg-Marquardt.
//! - [`sim`]: synthetic scenes, experiment runner and trajectory metrics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod image;
pub mod lsd;
pub mod matching;
pub mod sim;
pub mod window;

pub use error::{Error, Result};
pub use image::{GradientField, GrayImage};
pub use lsd::{detect_lines, DetectorParams, LineSegment2D};
