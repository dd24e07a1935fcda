//! Line-support regions: growth on the level-line field, rectangle
//! approximation and the density test with its refinement fallback.

use crate::image::GradientField;
use std::f64::consts::PI;

/// Rectangle approximation of a region, in layer pixel coordinates where
/// pixel `(x, y)` is the gradient block anchored at that pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionRect {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub center: (f64, f64),
    /// Oriented axis angle, aligned with the region's level-line angle.
    pub theta: f64,
    pub width: f64,
}

impl RegionRect {
    pub fn length(&self) -> f64 {
        (self.x2 - self.x1).hypot(self.y2 - self.y1)
    }

    pub fn area(&self) -> f64 {
        self.length() * self.width
    }
}

/// A grown region together with its rectangle approximation.
#[derive(Clone, Debug)]
pub struct LineSupportRegion {
    /// Member pixels; the first entry is the seed.
    pub pixels: Vec<(usize, usize)>,
    /// Mean level-line angle at the end of growth.
    pub angle: f64,
    /// Angle tolerance the region was grown with.
    pub tolerance: f64,
    pub rect: RegionRect,
    /// Members whose level-line angle is within tolerance of the rectangle axis.
    pub aligned: usize,
}

impl LineSupportRegion {
    pub fn density(&self) -> f64 {
        let area = self.rect.area();
        if area > 0.0 {
            self.aligned as f64 / area
        } else {
            0.0
        }
    }
}

/// Absolute difference of two oriented angles, in `[0, pi]`.
#[inline]
pub(crate) fn angle_diff(a: f64, b: f64) -> f64 {
    let mut d = (a - b).abs();
    if d > PI {
        d = 2.0 * PI - d;
    }
    d
}

#[inline]
fn angle_diff_signed(a: f64, b: f64) -> f64 {
    let mut d = a - b;
    while d <= -PI {
        d += 2.0 * PI;
    }
    while d > PI {
        d -= 2.0 * PI;
    }
    d
}

/// Region growing state over one gradient field.
pub struct RegionGrower<'a> {
    field: &'a GradientField,
    used: Vec<bool>,
}

impl<'a> RegionGrower<'a> {
    pub fn new(field: &'a GradientField) -> Self {
        Self { field, used: vec![false; field.width * field.height] }
    }

    pub fn field(&self) -> &GradientField {
        self.field
    }

    pub fn is_used(&self, x: usize, y: usize) -> bool {
        self.used[self.field.index(x, y)]
    }

    #[inline]
    fn aligned_at(&self, i: usize, reference: f64, tol: f64) -> bool {
        self.field.usable[i] && angle_diff(self.field.angle[i] as f64, reference) <= tol
    }

    /// Grows a region from `seed`, marking members as used. Returns `None` when the
    /// seed is unusable or already taken.
    pub fn grow(&mut self, seed: (usize, usize), tolerance: f64) -> Option<LineSupportRegion> {
        let f = self.field;
        let si = f.index(seed.0, seed.1);
        if !f.usable[si] || self.used[si] {
            return None;
        }
        let pixels = self.grow_pixels(seed, tolerance);
        let angle = Self::mean_angle(f, &pixels);
        Some(self.build(pixels, angle, tolerance))
    }

    fn grow_pixels(&mut self, seed: (usize, usize), tolerance: f64) -> Vec<(usize, usize)> {
        let f = self.field;
        let (w, h) = (f.width, f.height);
        let si = f.index(seed.0, seed.1);
        let a0 = f.angle[si] as f64;
        let (mut sum_dx, mut sum_dy) = (a0.cos(), a0.sin());
        let mut reg_angle = a0;
        let mut pixels = vec![seed];
        self.used[si] = true;
        let mut k = 0;
        while k < pixels.len() {
            let (px, py) = pixels[k];
            k += 1;
            let x0 = px.saturating_sub(1);
            let y0 = py.saturating_sub(1);
            let x1 = (px + 1).min(w - 1);
            let y1 = (py + 1).min(h - 1);
            for yy in y0..=y1 {
                for xx in x0..=x1 {
                    let i = yy * w + xx;
                    if self.used[i] || !self.aligned_at(i, reg_angle, tolerance) {
                        continue;
                    }
                    self.used[i] = true;
                    pixels.push((xx, yy));
                    let a = f.angle[i] as f64;
                    sum_dx += a.cos();
                    sum_dy += a.sin();
                    reg_angle = sum_dy.atan2(sum_dx);
                }
            }
        }
        pixels
    }

    fn mean_angle(f: &GradientField, pixels: &[(usize, usize)]) -> f64 {
        let (mut sx, mut sy) = (0.0, 0.0);
        for &(x, y) in pixels {
            let a = f.angle[f.index(x, y)] as f64;
            sx += a.cos();
            sy += a.sin();
        }
        sy.atan2(sx)
    }

    fn build(&self, pixels: Vec<(usize, usize)>, angle: f64, tolerance: f64) -> LineSupportRegion {
        let rect = region_to_rect(self.field, &pixels, angle, tolerance);
        let aligned = pixels
            .iter()
            .filter(|&&(x, y)| self.aligned_at(self.field.index(x, y), rect.theta, tolerance))
            .count();
        LineSupportRegion { pixels, angle, tolerance, rect, aligned }
    }

    fn release(&mut self, pixels: &[(usize, usize)]) {
        for &(x, y) in pixels {
            let i = self.field.index(x, y);
            self.used[i] = false;
        }
    }

    /// Applies the density test. Regions below `min_density` are refined once
    /// when `refine` is set: regrow from the seed with a tolerance estimated from
    /// the angles near the seed, then shrink the region radius around the seed
    /// until the density passes or fewer than two pixels remain.
    /// Returns the accepted region, or `None` when it is rejected.
    pub fn validate(
        &mut self,
        region: LineSupportRegion,
        min_density: f64,
        refine: bool,
    ) -> Option<LineSupportRegion> {
        if region.density() >= min_density {
            return Some(region);
        }
        if !refine {
            return None;
        }
        let f = self.field;
        let seed = region.pixels[0];
        let seed_angle = f.angle[f.index(seed.0, seed.1)] as f64;
        let (xc, yc) = (seed.0 as f64, seed.1 as f64);

        // Tolerance from twice the standard deviation of angles near the seed.
        let (mut sum, mut sum_sq, mut n) = (0.0, 0.0, 0usize);
        for &(x, y) in &region.pixels {
            if (x as f64 - xc).hypot(y as f64 - yc) < region.rect.width {
                let d = angle_diff_signed(f.angle[f.index(x, y)] as f64, seed_angle);
                sum += d;
                sum_sq += d * d;
                n += 1;
            }
        }
        self.release(&region.pixels);
        let tau = if n > 0 {
            let mean = sum / n as f64;
            2.0 * (sum_sq / n as f64 - mean * mean).max(0.0).sqrt()
        } else {
            region.tolerance
        };
        let tau = tau.clamp(1e-3, region.tolerance);
        let pixels = self.grow_pixels(seed, tau);
        if pixels.len() < 2 {
            return None;
        }
        let angle = Self::mean_angle(f, &pixels);
        let mut current = self.build(pixels, angle, region.tolerance);
        if current.density() >= min_density {
            return Some(current);
        }

        let r1 = (xc - current.rect.x1).hypot(yc - current.rect.y1);
        let r2 = (xc - current.rect.x2).hypot(yc - current.rect.y2);
        let mut radius = r1.max(r2);
        while current.density() < min_density {
            radius *= 0.75;
            let (keep, drop): (Vec<_>, Vec<_>) = current
                .pixels
                .iter()
                .partition(|&&(x, y)| (x as f64 - xc).hypot(y as f64 - yc) <= radius);
            self.release(&drop);
            if keep.len() < 2 {
                self.release(&keep);
                return None;
            }
            current = self.build(keep, current.angle, current.tolerance);
        }
        Some(current)
    }
}

/// Magnitude-weighted rectangle fit of a pixel set.
pub fn region_to_rect(
    field: &GradientField,
    pixels: &[(usize, usize)],
    reg_angle: f64,
    tolerance: f64,
) -> RegionRect {
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for &(x, y) in pixels {
        let w = field.magnitude[field.index(x, y)] as f64;
        sx += w * x as f64;
        sy += w * y as f64;
        sw += w;
    }
    let (cx, cy) = if sw > 0.0 { (sx / sw, sy / sw) } else { (pixels[0].0 as f64, pixels[0].1 as f64) };

    let (mut ixx, mut iyy, mut ixy) = (0.0, 0.0, 0.0);
    for &(x, y) in pixels {
        let w = field.magnitude[field.index(x, y)] as f64;
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        ixx += dy * dy * w;
        iyy += dx * dx * w;
        ixy -= dx * dy * w;
    }
    let lambda = 0.5 * (ixx + iyy - ((ixx - iyy) * (ixx - iyy) + 4.0 * ixy * ixy).sqrt());
    let mut theta = if ixx.abs() > iyy.abs() {
        (lambda - ixx).atan2(ixy)
    } else {
        ixy.atan2(lambda - iyy)
    };
    if angle_diff(theta, reg_angle) > tolerance {
        theta += PI;
    }
    let (dx, dy) = (theta.cos(), theta.sin());
    let (mut lmin, mut lmax, mut wmin, mut wmax) = (0f64, 0f64, 0f64, 0f64);
    for &(x, y) in pixels {
        let (ox, oy) = (x as f64 - cx, y as f64 - cy);
        let l = ox * dx + oy * dy;
        let w = -ox * dy + oy * dx;
        lmin = lmin.min(l);
        lmax = lmax.max(l);
        wmin = wmin.min(w);
        wmax = wmax.max(w);
    }
    RegionRect {
        x1: cx + lmin * dx,
        y1: cy + lmin * dy,
        x2: cx + lmax * dx,
        y2: cy + lmax * dy,
        center: (cx, cy),
        theta,
        width: (wmax - wmin).max(1.0),
    }
}
