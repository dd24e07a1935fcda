use crate::error::{invalid, Result};
use crate::image::{gaussian_sample, FloatImage, GrayImage};
use crate::lsd::LineSegment2D;
use nalgebra::{Point2, Vector2};
use rand::{RngExt, SeedableRng};
use std::sync::OnceLock;

/// Bands parallel to the segment, centered on it.
pub const BANDS: usize = 8;
/// Sections along the segment.
pub const SECTIONS: usize = 4;
/// Band width in pixels.
pub const BAND_WIDTH: f64 = 6.0;
const CHANNELS: usize = 3;
const CELLS: usize = BANDS * SECTIONS;
const SAMPLES_ALONG: usize = 8;
const SAMPLES_ACROSS: usize = 3;
/// Smoothing applied before sampling, in pixels.
const PRESMOOTH_SIGMA: f64 = 2.5;
/// A bit is set only when the first cell exceeds the second by this absolute
/// amount plus this fraction of their mean magnitude.
const MARGIN_ABS: f64 = 2.0;
const MARGIN_REL: f64 = 0.3;

pub const DESCRIPTOR_BITS: usize = 256;
const HALF: usize = DESCRIPTOR_BITS / 2;
const PAIR_SEED: u64 = 0x6c62_645f_7061_6972;

/// 256-bit binary descriptor. Bit `i < 128` compares a pair of cells; bit
/// `i + 128` compares the point-reflected pair, so reversing the segment swaps
/// the two halves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BandDescriptor {
    pub bits: [u64; 4],
}

impl BandDescriptor {
    pub fn hamming(&self, other: &BandDescriptor) -> u32 {
        self.bits.iter().zip(&other.bits).map(|(a, b)| (a ^ b).count_ones()).sum()
    }

    /// Descriptor of the same segment with its endpoints swapped.
    pub fn mirrored(&self) -> BandDescriptor {
        BandDescriptor { bits: [self.bits[2], self.bits[3], self.bits[0], self.bits[1]] }
    }

    /// Hamming distance ignoring segment orientation.
    pub fn distance(&self, other: &BandDescriptor) -> u32 {
        self.hamming(other).min(self.hamming(&other.mirrored()))
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }
}

#[derive(Clone, Copy, Debug)]
struct Pair {
    a: usize,
    b: usize,
    channel: usize,
}

/// Cell `(band, section)` reflected through the segment midpoint.
fn mirror_cell(c: usize) -> usize {
    let (band, section) = (c / SECTIONS, c % SECTIONS);
    (BANDS - 1 - band) * SECTIONS + (SECTIONS - 1 - section)
}

fn pairs() -> &'static [Pair; DESCRIPTOR_BITS] {
    static PAIRS: OnceLock<[Pair; DESCRIPTOR_BITS]> = OnceLock::new();
    PAIRS.get_or_init(|| {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(PAIR_SEED);
        let mut chosen: Vec<Pair> = Vec::with_capacity(HALF);
        while chosen.len() < HALF {
            let a = rng.random_range(0..CELLS);
            let b = rng.random_range(0..CELLS);
            let channel = rng.random_range(0..CHANNELS);
            let same = |p: &Pair, a: usize, b: usize| p.channel == channel && ((p.a, p.b) == (a, b) || (p.a, p.b) == (b, a));
            let (ma, mb) = (mirror_cell(a), mirror_cell(b));
            // Skip self-mirrored pairs and pairs already present directly or mirrored.
            if a == b || (ma, mb) == (a, b) || (ma, mb) == (b, a) {
                continue;
            }
            if chosen.iter().any(|p| same(p, a, b) || same(p, ma, mb)) {
                continue;
            }
            chosen.push(Pair { a, b, channel });
        }
        let mut all = [Pair { a: 0, b: 0, channel: 0 }; DESCRIPTOR_BITS];
        for (i, p) in chosen.iter().enumerate() {
            all[i] = *p;
            all[i + HALF] = Pair { a: mirror_cell(p.a), b: mirror_cell(p.b), channel: p.channel };
        }
        all
    })
}

/// Precomputed smoothed image shared by all segments of one frame.
pub struct DescriptorContext {
    image: FloatImage,
    width: usize,
    height: usize,
}

impl DescriptorContext {
    pub fn new(img: &GrayImage) -> Result<Self> {
        // Subtracting the darkest value makes the descriptor exactly invariant
        // to (non-saturating) brightness offsets despite float rounding.
        let min = img.data().iter().copied().min().unwrap_or(0);
        let mut base = img.to_float();
        base.data.iter_mut().for_each(|v| *v -= min as f32);
        let image = gaussian_sample(&base, 1.0, PRESMOOTH_SIGMA)?;
        Ok(Self { image, width: img.width(), height: img.height() })
    }

    fn gradient(&self, p: Point2<f64>) -> Vector2<f64> {
        let f = |x: f64, y: f64| self.image.sample_bilinear(x, y);
        Vector2::new(0.5 * (f(p.x + 1.0, p.y) - f(p.x - 1.0, p.y)), 0.5 * (f(p.x, p.y + 1.0) - f(p.x, p.y - 1.0)))
    }

    pub fn describe(&self, seg: &LineSegment2D) -> Result<BandDescriptor> {
        let inside = |p: &Point2<f64>| {
            p.x.is_finite()
                && p.y.is_finite()
                && p.x >= 0.0
                && p.y >= 0.0
                && p.x <= (self.width - 1) as f64
                && p.y <= (self.height - 1) as f64
        };
        if !inside(&seg.p1) || !inside(&seg.p2) {
            return Err(invalid(format!("segment {:?}-{:?} outside the image", seg.p1, seg.p2)));
        }
        if !(seg.length > 0.0) {
            return Err(invalid("zero-length segment"));
        }
        let t = seg.direction();
        let n = Vector2::new(-t.y, t.x);
        let mut cells = [[0f64; CHANNELS]; CELLS];
        let half_width = 0.5 * BANDS as f64 * BAND_WIDTH;
        for band in 0..BANDS {
            for section in 0..SECTIONS {
                let acc = &mut cells[band * SECTIONS + section];
                for i in 0..SAMPLES_ALONG {
                    let s = (section as f64 + (i as f64 + 0.5) / SAMPLES_ALONG as f64) / SECTIONS as f64;
                    for j in 0..SAMPLES_ACROSS {
                        let o = -half_width
                            + BAND_WIDTH * (band as f64 + (j as f64 + 0.5) / SAMPLES_ACROSS as f64);
                        let p = seg.p1 + (seg.p2 - seg.p1) * s + n * o;
                        let g = self.gradient(p);
                        acc[0] += g.dot(&n).abs();
                        acc[1] += g.dot(&t).abs();
                        acc[2] += self.image.sample_bilinear(p.x, p.y);
                    }
                }
            }
        }
        let k = (SAMPLES_ALONG * SAMPLES_ACROSS) as f64;
        let mut desc = BandDescriptor { bits: [0; 4] };
        for (i, p) in pairs().iter().enumerate() {
            let (a, b) = (cells[p.a][p.channel] / k, cells[p.b][p.channel] / k);
            // Near-ties stay zero so small endpoint jitter flips few bits.
            if a > b + MARGIN_ABS + MARGIN_REL * 0.5 * (a.abs() + b.abs()) {
                desc.set(i);
            }
        }
        Ok(desc)
    }
}

/// Descriptor of one segment. Use [`DescriptorContext`] for many segments of
/// the same image.
pub fn describe(img: &GrayImage, seg: &LineSegment2D) -> Result<BandDescriptor> {
    DescriptorContext::new(img)?.describe(seg)
}

/// Descriptors of all segments of one image.
pub fn describe_all(img: &GrayImage, segs: &[LineSegment2D]) -> Result<Vec<BandDescriptor>> {
    let ctx = DescriptorContext::new(img)?;
    segs.iter().map(|s| ctx.describe(s)).collect()
}
