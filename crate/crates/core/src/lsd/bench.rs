use super::{detect_lines, DetectorParams};
use crate::error::{invalid, Result};
use crate::image::GrayImage;
use serde::Serialize;
use std::time::Instant;

/// Timing of two detector configurations over the same images.
#[derive(Clone, Debug, Serialize)]
pub struct BenchmarkReport {
    pub images: usize,
    pub repetitions: usize,
    /// Mean wall-clock milliseconds per image.
    pub mean_ms_a: f64,
    pub mean_ms_b: f64,
    /// Mean segments per image.
    pub mean_segments_a: f64,
    pub mean_segments_b: f64,
    /// `mean_ms_b / mean_ms_a`.
    pub speedup: f64,
    /// Same measurements with the pyramid reduced to a single layer.
    pub single_layer_ms_a: f64,
    pub single_layer_ms_b: f64,
    pub single_layer_speedup: f64,
}

fn time_config(images: &[GrayImage], params: &DetectorParams, reps: usize) -> Result<(f64, f64)> {
    let mut segments = 0usize;
    let start = Instant::now();
    for _ in 0..reps {
        for img in images {
            segments += detect_lines(img, params)?.len();
        }
    }
    let runs = (reps * images.len()) as f64;
    Ok((start.elapsed().as_secs_f64() * 1e3 / runs, segments as f64 / runs))
}

/// Times `params_a` and `params_b` on identical inputs. Configurations are
/// interleaved per repetition so drift in machine load affects both alike.
pub fn benchmark_detector(
    images: &[GrayImage],
    params_a: &DetectorParams,
    params_b: &DetectorParams,
    repetitions: usize,
) -> Result<BenchmarkReport> {
    if images.is_empty() {
        return Err(invalid("benchmark needs at least one image"));
    }
    if repetitions == 0 {
        return Err(invalid("repetitions must be at least 1"));
    }
    params_a.validate()?;
    params_b.validate()?;
    let single_a = DetectorParams { n_layers: 1, ..*params_a };
    let single_b = DetectorParams { n_layers: 1, ..*params_b };
    let mut acc = [0f64; 6];
    for _ in 0..repetitions {
        let (ta, na) = time_config(images, params_a, 1)?;
        let (tb, nb) = time_config(images, params_b, 1)?;
        let (sa, _) = time_config(images, &single_a, 1)?;
        let (sb, _) = time_config(images, &single_b, 1)?;
        for (slot, v) in acc.iter_mut().zip([ta, tb, na, nb, sa, sb]) {
            *slot += v;
        }
    }
    let r = repetitions as f64;
    let [ta, tb, na, nb, sa, sb] = acc.map(|v| v / r);
    Ok(BenchmarkReport {
        images: images.len(),
        repetitions,
        mean_ms_a: ta,
        mean_ms_b: tb,
        mean_segments_a: na,
        mean_segments_b: nb,
        speedup: tb / ta,
        single_layer_ms_a: sa,
        single_layer_ms_b: sb,
        single_layer_speedup: sb / sa,
    })
}
