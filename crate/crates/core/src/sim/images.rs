//! Rendered test images with known segments, and the oracle that scores a
//! detector against them.

use crate::error::{invalid, Result};
use crate::image::{fill_polygon, render_segments, GrayImage, RenderStyle};
use crate::lsd::{undirected_angle_diff, LineSegment2D};
use nalgebra::{Point2, Vector2};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentSceneConfig {
    pub width: usize,
    pub height: usize,
    pub count: usize,
    pub min_length: f64,
    pub max_length: f64,
    /// Endpoints stay this far from the border.
    pub margin: f64,
    /// Minimum distance between any two segments.
    pub min_separation: f64,
    /// Lengths in this open interval are not drawn, so no segment sits within
    /// rounding of the length threshold.
    pub guard_band: (f64, f64),
}

impl Default for SegmentSceneConfig {
    fn default() -> Self {
        Self {
            width: 752,
            height: 480,
            count: 40,
            min_length: 10.0,
            max_length: 300.0,
            margin: 10.0,
            min_separation: 10.0,
            guard_band: (56.0, 64.0),
        }
    }
}

fn point_segment_distance(p: &Point2<f64>, s: &LineSegment2D) -> f64 {
    let d = s.p2 - s.p1;
    let t = ((p - s.p1).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (p - (s.p1 + d * t)).norm()
}

/// Euclidean distance between two segments; zero when they cross.
pub fn segment_distance(a: &LineSegment2D, b: &LineSegment2D) -> f64 {
    let side = |o: &Point2<f64>, p: &Point2<f64>, q: &Point2<f64>| (p - o).perp(&(q - o)).signum();
    let crosses = side(&a.p1, &a.p2, &b.p1) != side(&a.p1, &a.p2, &b.p2)
        && side(&b.p1, &b.p2, &a.p1) != side(&b.p1, &b.p2, &a.p2);
    if crosses {
        return 0.0;
    }
    point_segment_distance(&a.p1, b)
        .min(point_segment_distance(&a.p2, b))
        .min(point_segment_distance(&b.p1, a))
        .min(point_segment_distance(&b.p2, a))
}

/// Larger endpoint displacement under the better of the two endpoint pairings.
pub fn endpoint_error(a: &LineSegment2D, b: &LineSegment2D) -> f64 {
    let same = (a.p1 - b.p1).norm().max((a.p2 - b.p2).norm());
    let swapped = (a.p1 - b.p2).norm().max((a.p2 - b.p1).norm());
    same.min(swapped)
}

/// Random well-separated segments rendered one pixel wide at 255 on 0.
pub fn segment_scene(seed: u64, cfg: &SegmentSceneConfig) -> Result<(GrayImage, Vec<LineSegment2D>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (xmax, ymax) = (cfg.width as f64 - 1.0 - cfg.margin, cfg.height as f64 - 1.0 - cfg.margin);
    if !(cfg.min_length < cfg.max_length) || !(cfg.margin < xmax && cfg.margin < ymax) {
        return Err(invalid("segment scene bounds are empty"));
    }
    let mut segs: Vec<LineSegment2D> = Vec::with_capacity(cfg.count);
    let mut attempts = 0usize;
    while segs.len() < cfg.count {
        attempts += 1;
        if attempts > 1_000_000 {
            return Err(invalid(format!("could not place {} separated segments", cfg.count)));
        }
        let len: f64 = rng.random_range(cfg.min_length..cfg.max_length);
        if len > cfg.guard_band.0 && len < cfg.guard_band.1 {
            continue;
        }
        let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let x = rng.random_range(cfg.margin..xmax);
        let y = rng.random_range(cfg.margin..ymax);
        let (x2, y2) = (x + len * theta.cos(), y + len * theta.sin());
        if !(cfg.margin..=xmax).contains(&x2) || !(cfg.margin..=ymax).contains(&y2) {
            continue;
        }
        let s = LineSegment2D::from_coords(x, y, x2, y2);
        if segs.iter().all(|o| segment_distance(o, &s) >= cfg.min_separation) {
            segs.push(s);
        }
    }
    let img = render_segments(cfg.width, cfg.height, &segs, RenderStyle::default())?;
    Ok((img, segs))
}

/// Dense random strokes, 200 on 40, for timing the detector.
pub fn clutter_image(seed: u64, width: usize, height: usize, count: usize) -> Result<GrayImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64 - 1.0, height as f64 - 1.0);
    let segs: Vec<LineSegment2D> = (0..count)
        .map(|_| {
            let p = Point2::new(rng.random_range(0.0..w), rng.random_range(0.0..h));
            let len: f64 = rng.random_range(10.0..300.0);
            let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let q = Point2::new((p.x + len * theta.cos()).clamp(0.0, w), (p.y + len * theta.sin()).clamp(0.0, h));
            LineSegment2D::new(p, q)
        })
        .collect();
    render_segments(width, height, &segs, RenderStyle { foreground: 200, background: 40, antialias: false })
}

/// Twenty segments on a jittered 5x4 grid of a 752x480 frame, each drawn as a
/// bright 2 px stroke over four random gray polygons, so every segment has a
/// distinct neighborhood.
pub fn textured_segment_scene(seed: u64) -> Result<(GrayImage, Vec<LineSegment2D>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = GrayImage::filled(752, 480, 90);
    let mut segs = Vec::with_capacity(20);
    for gy in 0..4 {
        for gx in 0..5 {
            let c = Point2::new(
                80.0 + 148.0 * gx as f64 + rng.random_range(-10.0..10.0),
                70.0 + 110.0 * gy as f64 + rng.random_range(-10.0..10.0),
            );
            let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let half = rng.random_range(40.0..55.0);
            let t = Vector2::new(theta.cos(), theta.sin());
            let n = Vector2::new(-t.y, t.x);
            for _ in 0..4 {
                let center = c + t * rng.random_range(-45.0..45.0) + n * rng.random_range(-18.0..18.0);
                let k = rng.random_range(3..6);
                let verts: Vec<(f64, f64)> = (0..k)
                    .map(|i| {
                        let a = i as f64 / k as f64 * std::f64::consts::TAU + rng.random_range(0.0..0.8);
                        let r: f64 = rng.random_range(8.0..30.0);
                        (center.x + r * a.cos(), center.y + r * a.sin())
                    })
                    .collect();
                fill_polygon(&mut img, &verts, rng.random_range(0..=255u8));
            }
            segs.push(LineSegment2D::new(c - t * half, c + t * half));
        }
    }
    for s in &segs {
        let n = Vector2::new(-s.direction().y, s.direction().x);
        let (a, b) = (s.p1 + n, s.p2 + n);
        let (c, d) = (s.p2 - n, s.p1 - n);
        fill_polygon(&mut img, &[(a.x, a.y), (b.x, b.y), (c.x, c.y), (d.x, d.y)], 250);
    }
    Ok((img, segs))
}

/// Shuffles `segs` and moves each endpoint `jitter` pixels in a random
/// direction. Returns the new list and, for each new index, the source index.
pub fn jittered_permutation(segs: &[LineSegment2D], jitter: f64, seed: u64) -> (Vec<LineSegment2D>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..segs.len()).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let mut shift = || {
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        Vector2::new(a.cos(), a.sin()) * jitter
    };
    let moved = perm.iter().map(|&i| LineSegment2D::new(segs[i].p1 + shift(), segs[i].p2 + shift())).collect();
    (moved, perm)
}

/// Detections scored against rendered truth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct OracleScore {
    pub true_positives: usize,
    pub detections: usize,
    /// Truth segments at or above the length threshold.
    pub expected: usize,
    /// Detections shorter than the length threshold.
    pub short_detections: usize,
}

impl OracleScore {
    pub fn precision(&self) -> f64 {
        if self.detections == 0 {
            1.0
        } else {
            self.true_positives as f64 / self.detections as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.expected == 0 {
            1.0
        } else {
            self.true_positives as f64 / self.expected as f64
        }
    }

    pub fn add(&mut self, other: &OracleScore) {
        self.true_positives += other.true_positives;
        self.detections += other.detections;
        self.expected += other.expected;
        self.short_detections += other.short_detections;
    }
}

/// Greedy one-to-one matching of truth segments of length `>= min_length`
/// to detections within `endpoint_tol` pixels and `angle_tol` radians.
pub fn score_detections(
    detected: &[LineSegment2D],
    truth: &[LineSegment2D],
    min_length: f64,
    endpoint_tol: f64,
    angle_tol: f64,
) -> OracleScore {
    let mut used = vec![false; detected.len()];
    let mut score = OracleScore {
        detections: detected.len(),
        short_detections: detected.iter().filter(|d| d.length < min_length).count(),
        ..Default::default()
    };
    for t in truth.iter().filter(|t| t.length >= min_length) {
        score.expected += 1;
        let best = detected
            .iter()
            .enumerate()
            .filter(|(i, d)| {
                !used[*i] && endpoint_error(d, t) < endpoint_tol && undirected_angle_diff(d.angle, t.angle) < angle_tol
            })
            .min_by(|a, b| endpoint_error(a.1, t).total_cmp(&endpoint_error(b.1, t)));
        if let Some((i, _)) = best {
            used[i] = true;
            score.true_positives += 1;
        }
    }
    score
}
