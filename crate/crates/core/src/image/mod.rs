//! Grayscale image substrate for the line detector.
//!
//! [`GrayImage`] is the 8-bit container that crosses API boundaries (PGM
//! files, rendered scenes, descriptors). [`FloatImage`] is the working
//! buffer used inside the detector so that blurring and subsampling across
//! pyramid layers does not re-quantize intensities.

mod gradient;
mod pgm;
mod render;
mod scale;

pub use gradient::{
    compute_gradient, compute_gradient_with_threshold, GradientField, DEFAULT_GRADIENT_THRESHOLD,
};
pub use pgm::{load_pgm, save_pgm, save_pgm_ascii};
pub use render::{fill_polygon, render_segments, RenderStyle};
pub use scale::{gaussian_sample, scale_gaussian, sigma_for_factor};

use crate::error::{invalid, Result};

/// Row-major 8-bit grayscale image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid(format!("image dimensions must be positive, got {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(invalid(format!(
                "pixel buffer has {} entries, expected {}",
                data.len(),
                width * height
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Uniform image. Panics on a zero dimension.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    /// Adds `offset` to every pixel, saturating at the intensity range.
    pub fn offset(&self, offset: i16) -> GrayImage {
        let data = self
            .data
            .iter()
            .map(|&v| (v as i16 + offset).clamp(0, 255) as u8)
            .collect();
        GrayImage { width: self.width, height: self.height, data }
    }

    /// The image rotated by 180 degrees about its center.
    pub fn rotate180(&self) -> GrayImage {
        let mut data = self.data.clone();
        data.reverse();
        GrayImage { width: self.width, height: self.height, data }
    }

    pub fn to_float(&self) -> FloatImage {
        FloatImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v as f32).collect(),
        }
    }
}

/// Row-major floating point intensity buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl FloatImage {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Bilinear sample at a continuous pixel-center coordinate, clamped to the border.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let xm = (self.width - 1) as f64;
        let ym = (self.height - 1) as f64;
        let x = x.clamp(0.0, xm);
        let y = y.clamp(0.0, ym);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let a = self.get(x0, y0) as f64;
        let b = self.get(x1, y0) as f64;
        let c = self.get(x0, y1) as f64;
        let d = self.get(x1, y1) as f64;
        (a * (1.0 - fx) + b * fx) * (1.0 - fy) + (c * (1.0 - fx) + d * fx) * fy
    }

    /// Rounds back to 8 bits.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 4]).is_ok());
    }

    #[test]
    fn rotate180_maps_pixels() {
        let img = GrayImage::new(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let r = img.rotate180();
        assert_eq!(r.get(0, 0), 6);
        assert_eq!(r.get(2, 1), 1);
        assert_eq!(r.rotate180(), img);
    }

    #[test]
    fn bilinear_interpolates_midpoints() {
        let img = GrayImage::new(2, 1, vec![0, 100]).unwrap().to_float();
        assert!((img.sample_bilinear(0.5, 0.0) - 50.0).abs() < 1e-12);
        assert_eq!(img.sample_bilinear(-3.0, 0.0), 0.0);
    }
}
