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

//! Pixel-domain corruption models.
//!
//! The intensity `level` is a fraction of full scale:
//!
//! * Gaussian: additive, standard deviation `level·255`.
//! * Salt & pepper: exactly `round(level·pixels)` distinct pixels forced to 0 or 255.
//! * Speckle: multiplicative, `out = in·(1 + n)` with `n ~ N(0, level)`.
//!
//! Every output is rounded to the nearest integer and clamped to `[0, 255]`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imageio::{quantize, GrayImage};
use crate::rng::SeededRng;

/// The four intensities swept in the standard noise table.
pub const TABLE_LEVELS: [f64; 4] = [0.02, 0.05, 0.10, 0.20];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    Gaussian,
    SaltPepper,
    Speckle,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::Gaussian, NoiseKind::SaltPepper, NoiseKind::Speckle];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::SaltPepper => "salt_pepper",
            NoiseKind::Speckle => "speckle",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let words: Vec<String> = s
            .split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_ascii_lowercase)
            .collect();
        match words.join("_").as_str() {
            "gaussian" => Ok(NoiseKind::Gaussian),
            "salt_pepper" | "saltpepper" | "sp" => Ok(NoiseKind::SaltPepper),
            "speckle" => Ok(NoiseKind::Speckle),
            other => Err(Error::param("noise kind", format!("unknown noise `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Fraction in `(0, 1]`.
    pub level: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, level: f64, seed: u64) -> Result<Self> {
        if !(level > 0.0 && level <= 1.0) {
            return Err(Error::param("level", format!("must lie in (0, 1], got {level}")));
        }
        Ok(NoiseSpec { kind, level, seed })
    }

    pub fn apply(&self, img: &GrayImage) -> Result<GrayImage> {
        match self.kind {
            NoiseKind::Gaussian => add_gaussian(img, self.level, self.seed),
            NoiseKind::SaltPepper => add_salt_pepper(img, self.level, self.seed),
            NoiseKind::Speckle => add_speckle(img, self.level, self.seed),
        }
    }

    /// `level` in percent, e.g. `2` for `0.02`.
    pub fn level_percent(&self) -> f64 {
        (self.level * 100.0 * 1e9).round() / 1e9
    }
}

/// All kinds crossed with [`TABLE_LEVELS`], in table order, seeded with `seed`.
pub fn table_grid(seed: u64) -> Vec<NoiseSpec> {
    NoiseKind::ALL
        .iter()
        .flat_map(|&kind| TABLE_LEVELS.iter().map(move |&level| NoiseSpec { kind, level, seed }))
        .collect()
}

fn check_level(level: f64, max: f64) -> Result<()> {
    if level >= 0.0 && level <= max {
        Ok(())
    } else {
        Err(Error::param("level", format!("must lie in [0, {max}], got {level}")))
    }
}

pub fn add_gaussian(img: &GrayImage, level: f64, seed: u64) -> Result<GrayImage> {
    check_level(level, f64::MAX)?;
    let sigma = level * 255.0;
    let mut rng = SeededRng::new(seed);
    let mut out = img.clone();
    for p in out.pixels_mut() {
        *p = quantize(*p as f64 + sigma * rng.normal());
    }
    Ok(out)
}

pub fn add_salt_pepper(img: &GrayImage, level: f64, seed: u64) -> Result<GrayImage> {
    check_level(level, 1.0)?;
    let total = img.pixels().len();
    let hits = ((level * total as f64).round() as usize).min(total);
    let mut rng = SeededRng::new(seed);
    // partial Fisher–Yates: the first `hits` slots become a uniform sample
    let mut idx: Vec<usize> = (0..total).collect();
    for i in 0..hits {
        let j = i + rng.below(total - i);
        idx.swap(i, j);
    }
    let mut out = img.clone();
    let px = out.pixels_mut();
    for &i in &idx[..hits] {
        px[i] = if rng.coin() { 255 } else { 0 };
    }
    Ok(out)
}

pub fn add_speckle(img: &GrayImage, level: f64, seed: u64) -> Result<GrayImage> {
    check_level(level, f64::MAX)?;
    let sd = level.sqrt();
    let mut rng = SeededRng::new(seed);
    let mut out = img.clone();
    for p in out.pixels_mut() {
        *p = quantize(*p as f64 * (1.0 + sd * rng.normal()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::test_pattern;

    #[test]
    fn zero_level_is_identity() {
        let img = test_pattern(32, 32);
        assert_eq!(add_gaussian(&img, 0.0, 1).unwrap(), img);
        assert_eq!(add_salt_pepper(&img, 0.0, 1).unwrap(), img);
        assert_eq!(add_speckle(&img, 0.0, 1).unwrap(), img);
    }

    #[test]
    fn speckle_leaves_black_alone() {
        let black = GrayImage::filled(16, 16, 0);
        assert_eq!(add_speckle(&black, 0.2, 4).unwrap(), black);
    }

    #[test]
    fn salt_pepper_count_and_values() {
        let img = GrayImage::filled(256, 256, 100);
        let out = add_salt_pepper(&img, 0.20, 3).unwrap();
        let changed: Vec<u8> = out
            .pixels()
            .iter()
            .zip(img.pixels())
            .filter(|(a, b)| a != b)
            .map(|(a, _)| *a)
            .collect();
        assert_eq!(changed.len(), 13107);
        assert!(changed.iter().all(|&v| v == 0 || v == 255));
        let full = add_salt_pepper(&img, 1.0, 3).unwrap();
        assert!(full.pixels().iter().all(|&v| v == 0 || v == 255));
    }

    #[test]
    fn deterministic() {
        let img = test_pattern(40, 30);
        for spec in table_grid(9) {
            assert_eq!(spec.apply(&img).unwrap(), spec.apply(&img).unwrap());
        }
    }

    #[test]
    fn invalid_levels() {
        let img = GrayImage::filled(2, 2, 5);
        assert!(add_gaussian(&img, -0.1, 0).is_err());
        assert!(add_salt_pepper(&img, 1.5, 0).is_err());
        assert!(add_speckle(&img, f64::NAN, 0).is_err());
        assert!(NoiseSpec::new(NoiseKind::Gaussian, 0.0, 0).is_err());
        assert!(NoiseSpec::new(NoiseKind::Gaussian, 1.0, 0).is_ok());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in NoiseKind::ALL {
            assert_eq!(kind.name().parse::<NoiseKind>().unwrap(), kind);
        }
        assert_eq!("Salt & pepper".parse::<NoiseKind>().unwrap(), NoiseKind::SaltPepper);
        assert!("poisson".parse::<NoiseKind>().is_err());
    }

    #[test]
    fn table_grid_shape() {
        let grid = table_grid(0);
        assert_eq!(grid.len(), 12);
        assert_eq!(grid[5].kind, NoiseKind::SaltPepper);
        assert_eq!(grid[5].level_percent(), 5.0);
        assert_eq!(grid[2].level_percent(), 10.0);
    }
}
