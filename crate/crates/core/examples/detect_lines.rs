//! Renders a scene of known segments, runs the detector with length
//! rejection and scores the output against the rendered truth.
//!
//! `cargo run --release --example detect_lines [seed]`

use lineslam::lsd::{detect_lines, length_threshold, segments_csv, DetectorParams};
use lineslam::sim::{score_detections, segment_scene, SegmentSceneConfig};

fn main() -> lineslam::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let (img, truth) = segment_scene(seed, &SegmentSceneConfig::default())?;
    let params = DetectorParams::default();
    let l_min = length_threshold(img.width(), img.height(), params.length_ratio);
    let found = detect_lines(&img, &params)?;
    let score = score_detections(&found, &truth, l_min as f64, 2.0, 2f64.to_radians());
    println!("{} truth segments, {} at least {l_min} px long", truth.len(), score.expected);
    println!(
        "{} detections, {} matched, precision {:.3}, recall {:.3}, {} shorter than {l_min} px",
        score.detections,
        score.true_positives,
        score.precision(),
        score.recall(),
        score.short_detections
    );
    print!("{}", segments_csv(&found[..found.len().min(5)]));
    Ok(())
}
