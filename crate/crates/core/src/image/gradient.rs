//! 2x2 finite-difference gradient and level-line angle field.
//!
//! The gradient at pixel `(x, y)` is computed from the block
//! `(x..=x+1, y..=y+1)` and therefore estimates the derivative at the
//! continuous position `(x + 0.5, y + 0.5)`. The last row and column have no
//! complete block and are marked unusable.

use super::{FloatImage, GrayImage};
use crate::error::{invalid, Result};

/// Default quantization tolerance on the gradient norm: a gradient quantization
/// error of 2 intensity levels over the sine of a 22.5 degree angle tolerance.
pub const DEFAULT_GRADIENT_THRESHOLD: f64 = 5.226_251_859_505_506;

#[derive(Clone, Debug)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    /// Gradient norm, `sqrt((gx^2 + gy^2) / 4)`.
    pub magnitude: Vec<f32>,
    /// Level-line angle in `(-pi, pi]`, orthogonal to the gradient direction.
    /// Only meaningful where `usable` is set.
    pub angle: Vec<f32>,
    pub usable: Vec<bool>,
    pub max_magnitude: f32,
}

impl GradientField {
    /// Computes the field of a floating point image. Pixels whose norm does not
    /// exceed `threshold` are marked unusable.
    pub fn from_float(img: &FloatImage, threshold: f64) -> Result<Self> {
        let (w, h) = (img.width, img.height);
        if w < 2 || h < 2 {
            return Err(invalid(format!("gradient needs at least 2x2 pixels, got {w}x{h}")));
        }
        let n = w * h;
        let mut magnitude = vec![0f32; n];
        let mut angle = vec![0f32; n];
        let mut usable = vec![false; n];
        let mut max_magnitude = 0f32;
        let thr = threshold as f32;
        let d = &img.data;
        for y in 0..h - 1 {
            for x in 0..w - 1 {
                let i = y * w + x;
                let com1 = d[i + w + 1] - d[i];
                let com2 = d[i + 1] - d[i + w];
                let gx = com1 + com2;
                let gy = com1 - com2;
                let norm = ((gx * gx + gy * gy) / 4.0).sqrt();
                magnitude[i] = norm;
                if norm > thr {
                    angle[i] = gx.atan2(-gy);
                    usable[i] = true;
                    max_magnitude = max_magnitude.max(norm);
                }
            }
        }
        Ok(Self { width: w, height: h, magnitude, angle, usable, max_magnitude })
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Level-line angle at a pixel, `None` where unusable.
    pub fn angle_at(&self, x: usize, y: usize) -> Option<f64> {
        let i = self.index(x, y);
        self.usable[i].then(|| self.angle[i] as f64)
    }

    pub fn usable_count(&self) -> usize {
        self.usable.iter().filter(|&&u| u).count()
    }
}

/// Gradient field of an 8-bit image with the default quantization tolerance.
pub fn compute_gradient(img: &GrayImage) -> Result<GradientField> {
    compute_gradient_with_threshold(img, DEFAULT_GRADIENT_THRESHOLD)
}

pub fn compute_gradient_with_threshold(img: &GrayImage, threshold: f64) -> Result<GradientField> {
    GradientField::from_float(&img.to_float(), threshold)
}
