//! PGM (portable graymap) reading and writing, binary `P5` and ASCII `P2`.

use super::GrayImage;
use crate::error::{Error, Result};

fn parse_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Parse { offset, reason: reason.into() }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Skips whitespace and `#` comments.
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    /// Returns the value and the byte offset of its first digit.
    fn read_uint(&mut self, what: &str) -> Result<(usize, usize)> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if self.pos >= self.bytes.len() {
                parse_err(start, format!("unexpected end of data while reading {what}"))
            } else {
                parse_err(start, format!("expected decimal {what}"))
            });
        }
        // Digits only, so from_utf8 cannot fail.
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        text.parse::<usize>()
            .map(|v| (v, start))
            .map_err(|_| parse_err(start, format!("{what} `{text}` out of range")))
    }
}

/// Parses a `P5` or `P2` graymap with `maxval <= 255`.
///
/// Pixel values are returned as stored; no rescaling to 255 is applied.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 {
        return Err(parse_err(0, "missing magic number"));
    }
    let binary = match &bytes[..2] {
        b"P5" => true,
        b"P2" => false,
        _ => return Err(parse_err(0, "magic number must be P5 or P2")),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let (width, width_at) = cur.read_uint("width")?;
    let (height, height_at) = cur.read_uint("height")?;
    let (maxval, maxval_at) = cur.read_uint("maxval")?;
    if width == 0 {
        return Err(parse_err(width_at, "width must be positive"));
    }
    if height == 0 {
        return Err(parse_err(height_at, "height must be positive"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(parse_err(maxval_at, format!("maxval {maxval} not in 1..=255")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| parse_err(width_at, "image dimensions overflow"))?;

    let mut data = Vec::with_capacity(count);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        match bytes.get(cur.pos) {
            Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
            Some(_) => return Err(parse_err(cur.pos, "expected whitespace after maxval")),
            None => return Err(parse_err(cur.pos, "truncated payload: no raster data")),
        }
        let raster = &bytes[cur.pos..];
        if raster.len() < count {
            return Err(parse_err(
                bytes.len(),
                format!("truncated payload: {} of {count} pixels present", raster.len()),
            ));
        }
        for (i, &v) in raster[..count].iter().enumerate() {
            if v as usize > maxval {
                return Err(parse_err(cur.pos + i, format!("pixel value {v} exceeds maxval {maxval}")));
            }
            data.push(v);
        }
    } else {
        for _ in 0..count {
            let (v, at) = match cur.read_uint("pixel value") {
                Ok(v) => v,
                Err(Error::Parse { offset, reason }) if offset >= bytes.len() => {
                    return Err(parse_err(offset, format!("truncated payload: {reason}")))
                }
                Err(e) => return Err(e),
            };
            if v > maxval {
                return Err(parse_err(at, format!("pixel value {v} exceeds maxval {maxval}")));
            }
            data.push(v as u8);
        }
    }
    GrayImage::new(width, height, data)
}

/// Canonical binary encoding: `P5\n<w> <h>\n255\n` followed by the raster.
pub fn save_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

/// ASCII encoding, one image row per line.
pub fn save_pgm_ascii(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P2\n{} {}\n255\n", img.width(), img.height());
    for row in img.data().chunks(img.width()) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}
