//! Gaussian blur fused with subsampling.
//!
//! Output pixel `i` samples the input at continuous coordinate `i / factor`
//! (pixel-center convention), so coordinates map back to the input by a
//! plain division regardless of the ceiling applied to the output size.
//! The blur is separable and only evaluated at the output sample positions.

use super::{FloatImage, GrayImage};
use crate::error::{invalid, Result};

/// Blur standard deviation (input pixels) used when scaling by `factor`.
///
/// A factor of one means no resampling and therefore no blur.
pub fn sigma_for_factor(factor: f64) -> f64 {
    if factor >= 1.0 {
        0.0
    } else {
        0.6 / factor
    }
}

struct Tap {
    start: isize,
    weights: Vec<f32>,
}

/// One truncated, normalized kernel per output coordinate.
fn kernels(n_out: usize, factor: f64, sigma: f64) -> Vec<Tap> {
    let half = if sigma > 0.0 { (3.0 * sigma).ceil() as isize } else { 0 };
    (0..n_out)
        .map(|i| {
            let pos = i as f64 / factor;
            let center = (pos + 0.5).floor();
            let frac = pos - center;
            let weights: Vec<f64> = (-half..=half)
                .map(|k| {
                    if sigma > 0.0 {
                        let d = (k as f64 - frac) / sigma;
                        (-0.5 * d * d).exp()
                    } else {
                        1.0
                    }
                })
                .collect();
            let mut sum: f64 = weights.iter().sum();
            // A kernel far narrower than a pixel degenerates to nearest sampling.
            let mut weights = weights;
            if !(sum > 1e-12) {
                weights.iter_mut().for_each(|w| *w = 0.0);
                weights[half as usize] = 1.0;
                sum = 1.0;
            }
            Tap {
                start: center as isize - half,
                weights: weights.iter().map(|w| (w / sum) as f32).collect(),
            }
        })
        .collect()
}

#[inline]
fn reflect(j: isize, n: usize) -> usize {
    let n = n as isize;
    let mut j = j;
    // Symmetric boundary; loop handles kernels wider than the image.
    loop {
        if j < 0 {
            j = -j - 1;
        } else if j >= n {
            j = 2 * n - j - 1;
        } else {
            return j as usize;
        }
    }
}

/// Blur with `sigma` (input pixels, 3-sigma truncation) and subsample by `factor`.
///
/// Output size is `ceil(width * factor) x ceil(height * factor)`.
pub fn gaussian_sample(img: &FloatImage, factor: f64, sigma: f64) -> Result<FloatImage> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(invalid(format!("scale factor must be in (0, 1], got {factor}")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(invalid(format!("blur sigma must be non-negative, got {sigma}")));
    }
    let (w, h) = (img.width, img.height);
    if factor == 1.0 && sigma == 0.0 {
        return Ok(img.clone());
    }
    let ow = ((w as f64 * factor).ceil() as usize).max(1);
    let oh = ((h as f64 * factor).ceil() as usize).max(1);
    let kx = kernels(ow, factor, sigma);
    let ky = kernels(oh, factor, sigma);

    // Horizontal pass over every input row, output columns only.
    let mut tmp = vec![0f32; ow * h];
    for y in 0..h {
        let row = &img.data[y * w..(y + 1) * w];
        let out = &mut tmp[y * ow..(y + 1) * ow];
        for (x, tap) in kx.iter().enumerate() {
            let mut acc = 0f32;
            let interior = tap.start >= 0 && (tap.start as usize + tap.weights.len()) <= w;
            if interior {
                let s = tap.start as usize;
                for (k, wgt) in tap.weights.iter().enumerate() {
                    acc += wgt * row[s + k];
                }
            } else {
                for (k, wgt) in tap.weights.iter().enumerate() {
                    acc += wgt * row[reflect(tap.start + k as isize, w)];
                }
            }
            out[x] = acc;
        }
    }

    // Vertical pass, output rows only.
    let mut data = vec![0f32; ow * oh];
    for (y, tap) in ky.iter().enumerate() {
        let out = &mut data[y * ow..(y + 1) * ow];
        for (k, wgt) in tap.weights.iter().enumerate() {
            let src = reflect(tap.start + k as isize, h);
            let row = &tmp[src * ow..(src + 1) * ow];
            for (o, v) in out.iter_mut().zip(row) {
                *o += wgt * v;
            }
        }
    }
    Ok(FloatImage { width: ow, height: oh, data })
}

/// 8-bit wrapper around [`gaussian_sample`]; intensities are rounded.
pub fn scale_gaussian(img: &GrayImage, factor: f64, sigma: f64) -> Result<GrayImage> {
    Ok(gaussian_sample(&img.to_float(), factor, sigma)?.to_gray())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(w: usize, h: usize) -> GrayImage {
        let data = (0..w * h).map(|i| ((i % w) * 2 + (i / w) * 3) as u8).collect();
        GrayImage::new(w, h, data).unwrap()
    }

    #[test]
    fn identity_when_unit_factor_and_no_blur() {
        let img = ramp(17, 9);
        assert_eq!(scale_gaussian(&img, 1.0, 0.0).unwrap(), img);
    }

    #[test]
    fn half_scale_dimensions() {
        let img = GrayImage::filled(752, 480, 10);
        let out = scale_gaussian(&img, 0.5, 1.2).unwrap();
        assert_eq!((out.width(), out.height()), (376, 240));
        let odd = scale_gaussian(&GrayImage::filled(5, 3, 1), 0.5, 1.2).unwrap();
        assert_eq!((odd.width(), odd.height()), (3, 2));
    }

    #[test]
    fn rejects_bad_arguments() {
        let img = GrayImage::filled(4, 4, 0);
        assert!(scale_gaussian(&img, 0.0, 1.0).is_err());
        assert!(scale_gaussian(&img, -0.5, 1.0).is_err());
        assert!(scale_gaussian(&img, 1.5, 1.0).is_err());
        assert!(scale_gaussian(&img, 0.5, -1.0).is_err());
    }

    #[test]
    fn blur_preserves_mean_of_ramp_center() {
        // A linear ramp is reproduced by a symmetric normalized kernel away from borders.
        let img = ramp(40, 40).to_float();
        let out = gaussian_sample(&img, 1.0, 1.5).unwrap();
        for y in 6..34 {
            for x in 6..34 {
                assert!((out.get(x, y) - img.get(x, y)).abs() < 1e-3);
            }
        }
    }

    proptest! {
        #[test]
        fn constant_images_stay_constant(
            v in 0u8..=255, w in 1usize..40, h in 1usize..40,
            factor in 0.05f64..=1.0, sigma in 0.0f64..4.0
        ) {
            let img = GrayImage::filled(w, h, v);
            let out = scale_gaussian(&img, factor, sigma).unwrap();
            prop_assert!(out.data().iter().all(|&p| p == v));
            prop_assert!(out.width() * out.height() <= w * h);
        }
    }
}
