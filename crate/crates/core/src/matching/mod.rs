//! Frame-to-frame line correspondence.
//!
//! Segments are described by [`BandDescriptor`]s and paired by mutual nearest
//! neighbor in Hamming distance. A pair is kept only if its distance is at most
//! the Hamming gate and the segments' undirected angles differ by at most the
//! angle gate.

mod descriptor;

pub use descriptor::{
    describe, describe_all, BandDescriptor, DescriptorContext, BANDS, BAND_WIDTH, DESCRIPTOR_BITS, SECTIONS,
};

use crate::error::{invalid, Result};
use crate::lsd::{undirected_angle_diff, LineSegment2D};
use serde::Serialize;

pub const DEFAULT_HAMMING_GATE: u32 = 30;
pub const DEFAULT_ANGLE_GATE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineMatch {
    pub index_a: usize,
    pub index_b: usize,
    pub hamming: u32,
    /// Radians, in `[0, pi/2]`.
    pub angle_diff: f64,
}

/// Index of the nearest descriptor; ties go to the lowest index.
fn nearest(d: &BandDescriptor, others: &[BandDescriptor]) -> Option<(usize, u32)> {
    others
        .iter()
        .enumerate()
        .map(|(i, o)| (i, d.distance(o)))
        .min_by(|x, y| x.1.cmp(&y.1).then(x.0.cmp(&y.0)))
}

/// Mutual-best matches passing both gates, sorted by `index_a`.
pub fn match_lines(
    desc_a: &[BandDescriptor],
    desc_b: &[BandDescriptor],
    segs_a: &[LineSegment2D],
    segs_b: &[LineSegment2D],
    hamming_gate: u32,
    angle_gate: f64,
) -> Result<Vec<LineMatch>> {
    if desc_a.len() != segs_a.len() || desc_b.len() != segs_b.len() {
        return Err(invalid(format!(
            "descriptor/segment counts differ: {}/{} and {}/{}",
            desc_a.len(),
            segs_a.len(),
            desc_b.len(),
            segs_b.len()
        )));
    }
    let best_of_b: Vec<Option<usize>> = desc_b.iter().map(|d| nearest(d, desc_a).map(|x| x.0)).collect();
    let mut out = Vec::new();
    for (ia, da) in desc_a.iter().enumerate() {
        let Some((ib, hamming)) = nearest(da, desc_b) else { continue };
        if best_of_b[ib] != Some(ia) {
            continue;
        }
        let angle_diff = undirected_angle_diff(segs_a[ia].angle, segs_b[ib].angle);
        if hamming <= hamming_gate && angle_diff <= angle_gate {
            out.push(LineMatch { index_a: ia, index_b: ib, hamming, angle_diff });
        }
    }
    Ok(out)
}

/// `idx_a,idx_b,hamming,angle_diff` with a header row; angle in radians.
pub fn matches_csv(matches: &[LineMatch]) -> String {
    let mut out = String::from("idx_a,idx_b,hamming,angle_diff\n");
    for m in matches {
        out.push_str(&format!("{},{},{},{}\n", m.index_a, m.index_b, m.hamming, m.angle_diff));
    }
    out
}
