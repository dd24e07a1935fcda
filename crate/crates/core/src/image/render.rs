//! Deterministic rasterization of synthetic line segments.

use super::GrayImage;
use crate::error::{invalid, Result};
use crate::lsd::LineSegment2D;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderStyle {
    pub foreground: u8,
    pub background: u8,
    /// Off: integer Bresenham strokes. On: unit-width stroke (full foreground
    /// within half a pixel of the segment) with a one pixel linear falloff.
    pub antialias: bool,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self { foreground: 255, background: 0, antialias: false }
    }
}

fn check_bounds(width: usize, height: usize, seg: &LineSegment2D) -> Result<()> {
    for p in [seg.p1, seg.p2] {
        let inside = p.x >= 0.0 && p.y >= 0.0 && p.x <= (width - 1) as f64 && p.y <= (height - 1) as f64;
        if !inside || !p.x.is_finite() || !p.y.is_finite() {
            return Err(invalid(format!(
                "segment endpoint ({}, {}) outside {width}x{height} image",
                p.x, p.y
            )));
        }
    }
    Ok(())
}

/// Calls `plot` for every pixel of the Bresenham line between the rounded endpoints.
pub(crate) fn bresenham(x0: i64, y0: i64, x1: i64, y1: i64, mut plot: impl FnMut(i64, i64)) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let (mut x, mut y) = (x0, y0);
    let mut err = dx + dy;
    loop {
        plot(x, y);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn distance_to_segment(px: f64, py: f64, seg: &LineSegment2D) -> f64 {
    let (ax, ay) = (seg.p1.x, seg.p1.y);
    let (dx, dy) = (seg.p2.x - ax, seg.p2.y - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (cx, cy) = (ax + t * dx, ay + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

/// Renders `segments` over a uniform background.
pub fn render_segments(
    width: usize,
    height: usize,
    segments: &[LineSegment2D],
    style: RenderStyle,
) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(invalid("image dimensions must be positive"));
    }
    for seg in segments {
        check_bounds(width, height, seg)?;
    }
    let mut img = GrayImage::filled(width, height, style.background);
    let fg = style.foreground as f64;
    let bg = style.background as f64;
    if !style.antialias {
        for seg in segments {
            let (x0, y0) = (seg.p1.x.round() as i64, seg.p1.y.round() as i64);
            let (x1, y1) = (seg.p2.x.round() as i64, seg.p2.y.round() as i64);
            bresenham(x0, y0, x1, y1, |x, y| img.set(x as usize, y as usize, style.foreground));
        }
        return Ok(img);
    }
    let mut coverage = vec![0f64; width * height];
    for seg in segments {
        let xmin = (seg.p1.x.min(seg.p2.x) - 2.0).floor().max(0.0) as usize;
        let xmax = ((seg.p1.x.max(seg.p2.x) + 2.0).ceil() as usize).min(width - 1);
        let ymin = (seg.p1.y.min(seg.p2.y) - 2.0).floor().max(0.0) as usize;
        let ymax = ((seg.p1.y.max(seg.p2.y) + 2.0).ceil() as usize).min(height - 1);
        for y in ymin..=ymax {
            for x in xmin..=xmax {
                let d = distance_to_segment(x as f64, y as f64, seg);
                let c = (1.5 - d).clamp(0.0, 1.0);
                let slot = &mut coverage[y * width + x];
                *slot = slot.max(c);
            }
        }
    }
    for (i, c) in coverage.iter().enumerate() {
        if *c > 0.0 {
            img.set(i % width, i / width, (bg + (fg - bg) * c).round() as u8);
        }
    }
    Ok(img)
}

/// Fills a convex or concave polygon (even-odd rule, pixel centers) with `value`.
/// Vertices outside the image are allowed; the fill is clipped.
pub fn fill_polygon(img: &mut GrayImage, vertices: &[(f64, f64)], value: u8) {
    if vertices.len() < 3 {
        return;
    }
    let ymin = vertices.iter().map(|v| v.1).fold(f64::INFINITY, f64::min).ceil().max(0.0) as usize;
    let ymax = vertices.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max).floor();
    if ymax < 0.0 {
        return;
    }
    let ymax = (ymax as usize).min(img.height() - 1);
    let mut xs = Vec::new();
    for y in ymin..=ymax {
        let yc = y as f64;
        xs.clear();
        for i in 0..vertices.len() {
            let (a, b) = (vertices[i], vertices[(i + 1) % vertices.len()]);
            if (a.1 <= yc && b.1 > yc) || (b.1 <= yc && a.1 > yc) {
                xs.push(a.0 + (yc - a.1) / (b.1 - a.1) * (b.0 - a.0));
            }
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        for pair in xs.chunks(2) {
            if pair.len() < 2 {
                continue;
            }
            let x0 = pair[0].ceil().max(0.0);
            let x1 = pair[1].floor().min((img.width() - 1) as f64);
            if x1 < x0 {
                continue;
            }
            for x in x0 as usize..=x1 as usize {
                img.set(x, y, value);
            }
        }
    }
}
