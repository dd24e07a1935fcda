//! Line segment detection on a scaled image pyramid.
//!
//! The detector follows the level-line region growing of LSD but validates
//! regions with an aligned-point density threshold instead of an a-contrario
//! test, works on an image downscaled by `image_scale`, and rejects segments
//! shorter than `ceil(length_ratio * min(W, H))`.
//!
//! A one pixel wide bright line has two edges of opposite polarity; they are
//! reported as a single segment on the line's center.

mod bench;
mod detector;
mod params;
pub mod region;
mod segment;

pub use bench::{benchmark_detector, BenchmarkReport};
pub use detector::{detect_lines, filter_by_length, length_threshold, MIN_DETECT_SIZE};
pub use params::DetectorParams;
pub use region::{LineSupportRegion, RegionGrower, RegionRect};
pub use segment::{fold_angle, segments_csv, undirected_angle_diff, LineSegment2D};
