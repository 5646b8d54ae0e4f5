/*
Copyright 2026 The palm-cs Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

//! 8-bit grayscale rasters, PGM (P2/P5) persistence and column blocking.

use std::path::Path;

use crate::error::{Error, PgmErrorKind, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// Row-major pixels; `pixels.len()` must equal `width·height`.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("image", "width and height must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                op: "GrayImage::new",
                expected: width * height,
                found: pixels.len(),
            });
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayImage { width, height, pixels }
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayImage::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn same_dims(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Rounds to the nearest integer and clamps into `[0, 255]`.
#[inline]
pub fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        0
    } else {
        v.round().clamp(0.0, 255.0) as u8
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn err(&self, reason: PgmErrorKind) -> Error {
        Error::Pgm { offset: self.pos, reason }
    }

    fn skip_space_and_comments(&mut self) {
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

    fn number(&mut self) -> Result<u64> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            self.pos = start;
            return Err(self.err(PgmErrorKind::MalformedHeader));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Pgm { offset: start, reason: PgmErrorKind::MalformedHeader })
    }
}

/// Parses a P2 (ASCII) or P5 (binary) PGM with maxval 255. `#` comments are
/// accepted anywhere whitespace is allowed in the header and in P2 bodies.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(Error::Pgm { offset: 0, reason: PgmErrorKind::BadMagic }),
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number()? as usize;
    let height = cur.number()? as usize;
    cur.skip_space_and_comments();
    let maxval_at = cur.pos;
    let maxval = cur.number()?;
    if maxval != 255 {
        return Err(Error::Pgm {
            offset: maxval_at,
            reason: PgmErrorKind::UnsupportedMaxval(maxval),
        });
    }
    if width == 0 || height == 0 {
        return Err(cur.err(PgmErrorKind::MalformedHeader));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| cur.err(PgmErrorKind::MalformedHeader))?;

    let pixels = if binary {
        // exactly one whitespace byte separates maxval from the raster
        match bytes.get(cur.pos) {
            Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(cur.err(PgmErrorKind::MalformedHeader)),
        }
        let payload = &bytes[cur.pos..];
        if payload.len() < count {
            return Err(Error::Pgm {
                offset: bytes.len(),
                reason: PgmErrorKind::Truncated { expected: count, found: payload.len() },
            });
        }
        payload[..count].to_vec()
    } else {
        let mut px = Vec::with_capacity(count);
        for found in 0..count {
            let at = cur.pos;
            let v = match cur.number() {
                Ok(v) => v,
                Err(_) if cur.pos >= bytes.len() => {
                    return Err(Error::Pgm {
                        offset: bytes.len(),
                        reason: PgmErrorKind::Truncated { expected: count, found },
                    })
                }
                Err(e) => return Err(e),
            };
            if v > 255 {
                return Err(Error::Pgm { offset: at, reason: PgmErrorKind::SampleOutOfRange(v) });
            }
            px.push(v as u8);
        }
        px
    };
    GrayImage::new(width, height, pixels)
}

const P2_VALUES_PER_LINE: usize = 16;

/// Serializes to PGM. The header is always `P5\n{w} {h}\n255\n` (or `P2`).
/// P2 bodies carry at most 16 space-separated samples per line and start a
/// new line for each raster row.
pub fn write_pgm(img: &GrayImage, binary: bool) -> Vec<u8> {
    let magic = if binary { "P5" } else { "P2" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    if binary {
        out.extend_from_slice(&img.pixels);
        return out;
    }
    for row in img.pixels.chunks(img.width) {
        for line in row.chunks(P2_VALUES_PER_LINE) {
            let text: Vec<String> = line.iter().map(|v| v.to_string()).collect();
            out.extend_from_slice(text.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    out
}

pub fn load_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_pgm(&bytes)
}

pub fn save_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    std::fs::write(path, write_pgm(img, true)).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Splits the image, traversed column by column, into consecutive vectors of
/// `block_len` samples. With `block_len = height` every block is one column.
pub fn image_to_blocks(img: &GrayImage, block_len: usize) -> Result<Vec<Vec<f64>>> {
    let total = img.width * img.height;
    if block_len == 0 || !total.is_multiple_of(block_len) {
        return Err(Error::param(
            "block_len",
            format!("{block_len} does not divide the {total} pixels"),
        ));
    }
    let column_major: Vec<f64> = (0..img.width)
        .flat_map(|x| (0..img.height).map(move |y| (x, y)))
        .map(|(x, y)| img.get(x, y) as f64)
        .collect();
    Ok(column_major.chunks(block_len).map(<[f64]>::to_vec).collect())
}

/// Inverse of [`image_to_blocks`]; samples are rounded and clamped to `[0, 255]`.
pub fn blocks_to_image(blocks: &[Vec<f64>], width: usize, height: usize) -> Result<GrayImage> {
    let column_major: Vec<f64> = blocks.iter().flatten().copied().collect();
    if column_major.len() != width * height {
        return Err(Error::DimensionMismatch {
            op: "blocks_to_image",
            expected: width * height,
            found: column_major.len(),
        });
    }
    let mut pixels = vec![0u8; width * height];
    for (i, v) in column_major.iter().enumerate() {
        let (x, y) = (i / height, i % height);
        pixels[y * width + x] = quantize(*v);
    }
    GrayImage::new(width, height, pixels)
}

/// Deterministic piecewise-smooth scene: a shaded background, a bright disc,
/// a dark bar and a low-amplitude ripple. Useful when no photograph is at hand.
pub fn test_pattern(width: usize, height: usize) -> GrayImage {
    let (w, h) = (width as f64, height as f64);
    GrayImage::from_fn(width, height, |x, y| {
        let (u, v) = (x as f64 / w, y as f64 / h);
        let mut val = 60.0 + 90.0 * u + 40.0 * v;
        let (dx, dy) = (u - 0.62, v - 0.38);
        if dx * dx + dy * dy < 0.045 {
            val = 215.0 - 60.0 * (dx * dx + dy * dy) / 0.045;
        }
        if (0.15..0.35).contains(&u) && (0.55..0.9).contains(&v) {
            val = 35.0 + 20.0 * v;
        }
        val += 6.0 * (std::f64::consts::TAU * 6.0 * u).sin() * (std::f64::consts::TAU * 3.0 * v).cos();
        quantize(val)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = SeededRng::new(seed);
        GrayImage::from_fn(w, h, |_, _| rng.below(256) as u8)
    }

    #[test]
    fn minimal_p5_bytes() {
        let img = GrayImage::new(1, 1, vec![0]).unwrap();
        let bytes = write_pgm(&img, true);
        assert_eq!(bytes, b"P5\n1 1\n255\n\x00");
        assert_eq!(read_pgm(&bytes).unwrap(), img);
    }

    #[test]
    fn two_by_two_both_formats() {
        let img = GrayImage::new(2, 2, vec![0, 255, 128, 64]).unwrap();
        assert_eq!(write_pgm(&img, false), b"P2\n2 2\n255\n0 255\n128 64\n");
        for binary in [true, false] {
            assert_eq!(read_pgm(&write_pgm(&img, binary)).unwrap(), img);
        }
    }

    #[test]
    fn p5_size_is_header_plus_pixels() {
        let img = random_image(256, 256, 1);
        let bytes = write_pgm(&img, true);
        assert_eq!(bytes.len(), 65536 + "P5\n256 256\n255\n".len());
    }

    #[test]
    fn comments_are_tolerated() {
        let text = b"P2\n# made by hand\n3 1 # width height\n255\n1 # first\n2 3\n";
        assert_eq!(read_pgm(text).unwrap().pixels(), &[1, 2, 3]);
        let mut bin = b"P5 # c\n2 1\n255\n".to_vec();
        bin.extend_from_slice(&[9, 8]);
        assert_eq!(read_pgm(&bin).unwrap().pixels(), &[9, 8]);
    }

    #[test]
    fn distinct_parse_errors() {
        let kind = |b: &[u8]| match read_pgm(b) {
            Err(Error::Pgm { reason, offset }) => (reason, offset),
            other => panic!("{other:?}"),
        };
        assert_eq!(kind(b"P6\n1 1\n255\n\x00").0, PgmErrorKind::BadMagic);
        assert_eq!(kind(b"P5\n1 1\n65535\n\x00\x00"), (PgmErrorKind::UnsupportedMaxval(65535), 7));
        assert_eq!(
            kind(b"P5\n2 2\n255\n\x00").0,
            PgmErrorKind::Truncated { expected: 4, found: 1 }
        );
        assert_eq!(
            kind(b"P2\n2 1\n255\n7").0,
            PgmErrorKind::Truncated { expected: 2, found: 1 }
        );
        assert_eq!(kind(b"P2\n1 1\n255\n300\n").0, PgmErrorKind::SampleOutOfRange(300));
        assert_eq!(kind(b"P2\nx 1\n255\n").0, PgmErrorKind::MalformedHeader);
    }

    #[test]
    fn column_blocks() {
        let img = GrayImage::new(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let blocks = image_to_blocks(&img, 2).unwrap();
        assert_eq!(blocks, vec![vec![1.0, 4.0], vec![2.0, 5.0], vec![3.0, 6.0]]);
        assert!(image_to_blocks(&img, 4).is_err());
        assert!(image_to_blocks(&img, 0).is_err());
    }

    #[test]
    fn blocks_clamp_and_round() {
        let img = blocks_to_image(&[vec![300.7, -4.0], vec![127.5, 12.49]], 2, 2).unwrap();
        assert_eq!(img.pixels(), &[255, 128, 0, 12]);
        assert!(blocks_to_image(&[vec![1.0]], 2, 2).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn pgm_round_trip(seed in any::<u64>(), w in 1usize..40, h in 1usize..40, binary in any::<bool>()) {
            let img = random_image(w, h, seed);
            prop_assert_eq!(read_pgm(&write_pgm(&img, binary)).unwrap(), img);
        }

        #[test]
        fn block_round_trip(seed in any::<u64>(), w in 1usize..30, h in 1usize..30) {
            let img = random_image(w, h, seed);
            let blocks = image_to_blocks(&img, h).unwrap();
            prop_assert_eq!(blocks_to_image(&blocks, w, h).unwrap(), img);
        }
    }
}
