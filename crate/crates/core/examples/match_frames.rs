//! Describes segments in a textured scene, shuffles and jitters them, and
//! recovers the correspondence by gated mutual-best matching.
//!
//! `cargo run --release --example match_frames [seed]`

use lineslam::matching::{describe_all, match_lines, matches_csv, DEFAULT_ANGLE_GATE, DEFAULT_HAMMING_GATE};
use lineslam::sim::{jittered_permutation, textured_segment_scene};

fn main() -> lineslam::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let (img, segs) = textured_segment_scene(seed)?;
    let (moved, perm) = jittered_permutation(&segs, 2.0, seed + 1);
    let (da, db) = (describe_all(&img, &segs)?, describe_all(&img, &moved)?);
    let matches = match_lines(&da, &db, &segs, &moved, DEFAULT_HAMMING_GATE, DEFAULT_ANGLE_GATE)?;
    let correct = matches.iter().filter(|m| perm[m.index_b] == m.index_a).count();
    println!("{} segments, {} matches, {correct} correct", segs.len(), matches.len());
    print!("{}", matches_csv(&matches));
    Ok(())
}
