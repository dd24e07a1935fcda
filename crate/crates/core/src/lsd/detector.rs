//! Pyramid line detection with density and length rejection.

use super::region::{LineSupportRegion, RegionGrower};
use super::{fold_angle, undirected_angle_diff, DetectorParams, LineSegment2D};
use crate::error::{invalid, Result};
use crate::image::{gaussian_sample, sigma_for_factor, FloatImage, GradientField, GrayImage};
use nalgebra::{Point2, Vector2};
use std::f64::consts::PI;

/// Smallest image (after scaling by `s`) the detector accepts.
pub const MIN_DETECT_SIZE: usize = 8;

/// Flank pairs must be anti-parallel within this angle (radians).
const FLANK_ANGLE_TOL: f64 = 5.0 * PI / 180.0;
/// Maximum separation of the two flanks of a ridge, in layer pixels.
const FLANK_MAX_SEPARATION: f64 = 3.0;
/// Cross-layer duplicates: undirected angle and midpoint distance limits.
const DUP_ANGLE_TOL: f64 = 3.0 * PI / 180.0;
const DUP_MIDPOINT_TOL: f64 = 3.0;
/// Fraction of `L_min` below which a region is discarded before validation.
const EARLY_REJECT_FRACTION: f64 = 0.75;

/// Minimum length `ceil(eta * min(width, height))`; zero disables rejection.
pub fn length_threshold(width: usize, height: usize, eta: f64) -> usize {
    (eta * width.min(height) as f64).ceil() as usize
}

/// Keeps segments with `length >= l_min`, preserving order.
pub fn filter_by_length(segments: &[LineSegment2D], l_min: f64) -> Vec<LineSegment2D> {
    segments.iter().filter(|s| s.length >= l_min).copied().collect()
}

/// Oriented segment in layer pixel coordinates; `a -> b` follows the level-line
/// orientation, so the two edges of a thin ridge point in opposite directions.
#[derive(Clone, Copy, Debug)]
struct Oriented {
    a: Point2<f64>,
    b: Point2<f64>,
}

impl Oriented {
    fn dir(&self) -> Vector2<f64> {
        (self.b - self.a).normalize()
    }

    fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }
}

/// Pyramid layers: layer 0 is the input scaled by `s`, each further layer is the
/// previous one scaled by `r`. Returns (image, total scale) pairs.
fn build_pyramid(img: &GrayImage, p: &DetectorParams) -> Result<Vec<(FloatImage, f64)>> {
    let base = gaussian_sample(&img.to_float(), p.image_scale, sigma_for_factor(p.image_scale))?;
    if base.width < MIN_DETECT_SIZE || base.height < MIN_DETECT_SIZE {
        return Err(invalid(format!(
            "image {}x{} is smaller than {MIN_DETECT_SIZE}x{MIN_DETECT_SIZE} after scaling by {}",
            img.width(),
            img.height(),
            p.image_scale
        )));
    }
    let mut layers = vec![(base, p.image_scale)];
    for _ in 1..p.n_layers {
        let (prev, scale) = layers.last().expect("non-empty");
        let next = gaussian_sample(prev, p.layer_ratio, sigma_for_factor(p.layer_ratio))?;
        if next.width < MIN_DETECT_SIZE || next.height < MIN_DETECT_SIZE {
            break;
        }
        let scale = scale * p.layer_ratio;
        layers.push((next, scale));
    }
    Ok(layers)
}

/// Seeds in decreasing-magnitude pseudo-order (1024 bins, row-major within a bin).
fn seed_order(field: &GradientField) -> Vec<usize> {
    const BINS: usize = 1024;
    let max = field.max_magnitude as f64;
    if max <= 0.0 {
        return Vec::new();
    }
    let mut counts = vec![0usize; BINS];
    let bin_of = |m: f32| (((m as f64) * BINS as f64 / max) as usize).min(BINS - 1);
    for (i, &u) in field.usable.iter().enumerate() {
        if u {
            counts[bin_of(field.magnitude[i])] += 1;
        }
    }
    // Start offsets for bins in descending order.
    let mut start = vec![0usize; BINS];
    let mut acc = 0;
    for b in (0..BINS).rev() {
        start[b] = acc;
        acc += counts[b];
    }
    let mut order = vec![0usize; acc];
    for (i, &u) in field.usable.iter().enumerate() {
        if u {
            let b = bin_of(field.magnitude[i]);
            order[start[b]] = i;
            start[b] += 1;
        }
    }
    order
}

/// Minimum region size of the LSD reference for a `w x h` image.
fn min_region_size(w: usize, h: usize, tolerance: f64) -> usize {
    let log_nt = 5.0 * ((w as f64).log10() + (h as f64).log10()) / 2.0 + 11f64.log10();
    (-log_nt / (tolerance / PI).log10()) as usize
}

fn detect_layer(
    layer: &FloatImage,
    scale: f64,
    p: &DetectorParams,
    early_reject: f64,
) -> Result<Vec<Oriented>> {
    let field = GradientField::from_float(layer, p.gradient_threshold())?;
    let min_size = min_region_size(layer.width, layer.height, p.angle_tolerance);
    let mut grower = RegionGrower::new(&field);
    let mut out = Vec::new();
    for idx in seed_order(&field) {
        let seed = (idx % field.width, idx / field.width);
        if grower.is_used(seed.0, seed.1) {
            continue;
        }
        let Some(region) = grower.grow(seed, p.angle_tolerance) else { continue };
        if region.pixels.len() < min_size || region.rect.length() / scale < early_reject {
            continue;
        }
        let Some(region) = grower.validate(region, p.density_threshold, p.refine) else { continue };
        if let Some(seg) = to_oriented(&region) {
            out.push(seg);
        }
    }
    Ok(out)
}

fn to_oriented(region: &LineSupportRegion) -> Option<Oriented> {
    let r = &region.rect;
    // Gradient blocks sit half a pixel down and right of their anchor pixel.
    let a = Point2::new(r.x1 + 0.5, r.y1 + 0.5);
    let b = Point2::new(r.x2 + 0.5, r.y2 + 0.5);
    ((b - a).norm() > 0.0).then_some(Oriented { a, b })
}

/// Edge response at `q`: strongest derivative across the segment within a
/// two pixel band around the segment axis.
fn edge_response(layer: &FloatImage, q: Point2<f64>, n: Vector2<f64>) -> f64 {
    let mut best = 0f64;
    for k in -8..=8 {
        let c = q + n * (k as f64 * 0.25);
        let plus = c + n;
        let minus = c - n;
        let g = 0.5 * (layer.sample_bilinear(plus.x, plus.y) - layer.sample_bilinear(minus.x, minus.y));
        best = best.max(g.abs());
    }
    best
}

/// Moves both endpoints to where the edge response falls to half its median
/// interior value. Region extents are quantized to layer pixels and biased
/// by the pixel footprint; the half-level crossing of a blurred end is not.
fn refine_endpoints(layer: &FloatImage, seg: Oriented) -> Oriented {
    const STEP: f64 = 0.25;
    const SEARCH: f64 = 3.0;
    let len = seg.length();
    if len < 4.0 {
        return seg;
    }
    let d = seg.dir();
    let n = Vector2::new(-d.y, d.x);
    let at = |t: f64| seg.a + d * t;
    let mut interior: Vec<f64> = (0..)
        .map(|k| 0.25 * len + k as f64)
        .take_while(|&t| t <= 0.75 * len)
        .map(|t| edge_response(layer, at(t), n))
        .collect();
    if interior.is_empty() {
        return seg;
    }
    interior.sort_by(f64::total_cmp);
    let half = 0.5 * interior[interior.len() / 2];
    if half <= 0.0 {
        return seg;
    }
    // Walk outward from inside the segment to the first half-level crossing.
    let crossing = |start: f64, sign: f64| -> Option<f64> {
        let mut t_prev = start - sign * SEARCH;
        let mut g_prev = edge_response(layer, at(t_prev), n);
        if g_prev < half {
            return None;
        }
        let steps = (2.0 * SEARCH / STEP) as usize;
        for _ in 0..steps {
            let t = t_prev + sign * STEP;
            let g = edge_response(layer, at(t), n);
            if g < half {
                return Some(t_prev + sign * STEP * (g_prev - half) / (g_prev - g));
            }
            t_prev = t;
            g_prev = g;
        }
        None
    };
    let t0 = crossing(0.0, -1.0).unwrap_or(0.0);
    let t1 = crossing(len, 1.0).unwrap_or(len);
    if t1 - t0 <= 0.5 * len {
        return seg;
    }
    Oriented { a: at(t0), b: at(t1) }
}

/// Merges the two opposite-polarity edges of thin ridges into their center line.
fn merge_flanks(mut segs: Vec<Oriented>) -> Vec<Oriented> {
    segs.sort_by(|x, y| y.length().total_cmp(&x.length()));
    let n = segs.len();
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if taken[i] {
            continue;
        }
        taken[i] = true;
        let si = segs[i];
        let di = si.dir();
        let mut best: Option<(usize, f64)> = None;
        for (j, sj) in segs.iter().enumerate().skip(i + 1) {
            if taken[j] {
                continue;
            }
            let dj = sj.dir();
            let cos = di.dot(&dj);
            if cos > -FLANK_ANGLE_TOL.cos() {
                continue;
            }
            let normal = Vector2::new(-di.y, di.x);
            let mid = nalgebra::center(&sj.a, &sj.b);
            let sep = (mid - si.a).dot(&normal).abs();
            if sep > FLANK_MAX_SEPARATION {
                continue;
            }
            let (t0, t1) = ((sj.a - si.a).dot(&di), (sj.b - si.a).dot(&di));
            let overlap = t0.max(t1).min(si.length()) - t0.min(t1).max(0.0);
            if overlap < 0.5 * sj.length() {
                continue;
            }
            if best.is_none_or(|(_, s)| sep < s) {
                best = Some((j, sep));
            }
        }
        match best {
            Some((j, _)) => {
                taken[j] = true;
                out.push(center_line(&si, &segs[j]));
            }
            None => out.push(si),
        }
    }
    out
}

/// Center line of two anti-parallel segments, spanning the union of their extents.
fn center_line(s: &Oriented, t: &Oriented) -> Oriented {
    let w1 = s.length();
    let w2 = t.length();
    let d = (s.dir() * w1 - t.dir() * w2).normalize();
    let c = Point2::from((nalgebra::center(&s.a, &s.b).coords * w1 + nalgebra::center(&t.a, &t.b).coords * w2) / (w1 + w2));
    let proj = |p: &Point2<f64>| (p - c).dot(&d);
    let ts = [proj(&s.a), proj(&s.b), proj(&t.a), proj(&t.b)];
    let lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Oriented { a: c + d * lo, b: c + d * hi }
}

/// Drops segments duplicated by a finer layer. Inputs are in original pixels.
fn merge_layers(per_layer: Vec<(Vec<LineSegment2D>, f64)>) -> Vec<LineSegment2D> {
    let mut kept: Vec<LineSegment2D> = Vec::new();
    for (layer, scale) in per_layer {
        let fine = kept.len();
        // Two coarse pixels: the resolution at which nearby parallel lines blend.
        let tol = DUP_MIDPOINT_TOL.max(2.0 / scale);
        for seg in layer {
            let duplicate = kept[..fine].iter().any(|k| is_duplicate(k, &seg, tol));
            if !duplicate {
                kept.push(seg);
            }
        }
    }
    kept
}

fn is_duplicate(a: &LineSegment2D, b: &LineSegment2D, tol: f64) -> bool {
    if undirected_angle_diff(a.angle, b.angle) >= DUP_ANGLE_TOL {
        return false;
    }
    (a.midpoint() - b.midpoint()).norm() < DUP_MIDPOINT_TOL
        || (a.line_distance(&b.midpoint()) < tol && overlaps(a, b))
}

/// True when the shorter segment projects mostly inside the longer one.
fn overlaps(a: &LineSegment2D, b: &LineSegment2D) -> bool {
    let (long, short) = if a.length >= b.length { (a, b) } else { (b, a) };
    let d = long.direction();
    let t0 = (short.p1 - long.p1).dot(&d);
    let t1 = (short.p2 - long.p1).dot(&d);
    let inside = t0.max(t1).min(long.length) - t0.min(t1).max(0.0);
    inside >= 0.5 * short.length
}

/// Detects line segments. Output coordinates are original-image pixels, sorted
/// by descending length; every segment is at least
/// `length_threshold(W, H, eta)` long.
pub fn detect_lines(img: &GrayImage, params: &DetectorParams) -> Result<Vec<LineSegment2D>> {
    params.validate()?;
    let layers = build_pyramid(img, params)?;
    let l_min = length_threshold(img.width(), img.height(), params.length_ratio) as f64;
    let early = EARLY_REJECT_FRACTION * l_min;
    let mut per_layer = Vec::with_capacity(layers.len());
    for (k, (layer, scale)) in layers.iter().enumerate() {
        let segs = merge_flanks(detect_layer(layer, *scale, params, early)?);
        let segs = segs.into_iter().map(|s| refine_endpoints(layer, s));
        let mapped: Vec<LineSegment2D> = segs
            .into_iter()
            .map(|s| {
                LineSegment2D::new(Point2::from(s.a.coords / *scale), Point2::from(s.b.coords / *scale))
                    .with_layer(k)
            })
            .collect();
        per_layer.push((mapped, *scale));
    }
    let mut segs = filter_by_length(&merge_layers(per_layer), l_min);
    segs.sort_by(|a, b| {
        b.length
            .total_cmp(&a.length)
            .then(a.p1.x.total_cmp(&b.p1.x))
            .then(a.p1.y.total_cmp(&b.p1.y))
    });
    debug_assert!(segs.iter().all(|s| s.angle == fold_angle(s.angle)));
    Ok(segs)
}
