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

//! Reconstruction quality and timing.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::imageio::GrayImage;

/// Peak value of 8-bit imagery.
pub const PEAK: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub psnr_db: f64,
    pub rmse: f64,
    pub elapsed_seconds: f64,
}

impl QualityReport {
    pub fn from_rmse(rmse: f64, elapsed_seconds: f64) -> Self {
        QualityReport {
            psnr_db: psnr_from_rmse(rmse),
            rmse,
            elapsed_seconds,
        }
    }
}

/// Root-mean-square pixel difference.
pub fn rmse(reference: &GrayImage, candidate: &GrayImage) -> Result<f64> {
    if !reference.same_dims(candidate) {
        return Err(Error::DimensionMismatch {
            op: "rmse",
            expected: reference.pixels().len(),
            found: candidate.pixels().len(),
        });
    }
    let sum: f64 = reference
        .pixels()
        .iter()
        .zip(candidate.pixels())
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok((sum / reference.pixels().len() as f64).sqrt())
}

/// RMSE against an unquantized row-major reconstruction.
pub fn rmse_float(reference: &GrayImage, candidate: &[f64]) -> Result<f64> {
    if reference.pixels().len() != candidate.len() {
        return Err(Error::DimensionMismatch {
            op: "rmse_float",
            expected: reference.pixels().len(),
            found: candidate.len(),
        });
    }
    let sum: f64 = reference
        .pixels()
        .iter()
        .zip(candidate)
        .map(|(&a, &b)| (a as f64 - b).powi(2))
        .sum();
    Ok((sum / candidate.len() as f64).sqrt())
}

/// `20·log10(255 / rmse)`; `+∞` for a perfect match.
pub fn psnr_from_rmse(rmse: f64) -> f64 {
    if rmse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (PEAK / rmse).log10()
    }
}

/// Runs `work` and returns its output with the elapsed monotonic wall time in seconds.
pub fn time_block<T>(work: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = work();
    (out, start.elapsed().as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random_image(seed: u64) -> GrayImage {
        let mut rng = SeededRng::new(seed);
        GrayImage::from_fn(37, 23, |_, _| rng.below(256) as u8)
    }

    #[test]
    fn rmse_trivial_cases() {
        let img = random_image(1);
        assert_eq!(rmse(&img, &img).unwrap(), 0.0);
        let black = GrayImage::filled(4, 4, 0);
        let white = GrayImage::filled(4, 4, 255);
        assert_eq!(rmse(&black, &white).unwrap(), 255.0);
        assert!(rmse(&black, &GrayImage::filled(4, 5, 0)).is_err());
    }

    #[test]
    fn rmse_matches_two_pass_oracle() {
        let a = random_image(2);
        let b = random_image(3);
        // first pass: squared differences; second pass: mean
        let diffs: Vec<f64> = a
            .pixels()
            .iter()
            .zip(b.pixels())
            .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
            .collect();
        let mut total = 0.0;
        for d in &diffs {
            total += d;
        }
        let oracle = (total / diffs.len() as f64).sqrt();
        assert!((rmse(&a, &b).unwrap() - oracle).abs() <= 1e-9);
        assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
    }

    #[test]
    fn unit_shift_gives_unit_rmse() {
        let a = GrayImage::from_fn(10, 10, |x, y| (x * 10 + y) as u8);
        let b = GrayImage::from_fn(10, 10, |x, y| (x * 10 + y + 1) as u8);
        assert_eq!(rmse(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn psnr_table_values() {
        assert!((psnr_from_rmse(32.6403) - 17.8557).abs() < 1e-3);
        assert!((psnr_from_rmse(41.734) - 15.721).abs() < 1e-3);
        assert!((psnr_from_rmse(70.0861) - 11.2182).abs() < 1e-3);
        assert_eq!(psnr_from_rmse(0.0), f64::INFINITY);
        assert!(psnr_from_rmse(10.0) > psnr_from_rmse(10.5));
    }

    #[test]
    fn timing_bounds() {
        let ((), empty) = time_block(|| ());
        assert!(empty < 0.01);
        let ((), slept) = time_block(|| std::thread::sleep(std::time::Duration::from_millis(100)));
        assert!((0.1..=0.5).contains(&slept));
        let ((a, b), outer) = time_block(|| {
            let (_, a) = time_block(|| std::thread::sleep(std::time::Duration::from_millis(20)));
            let (_, b) = time_block(|| std::thread::sleep(std::time::Duration::from_millis(30)));
            (a, b)
        });
        assert!(a + b <= outer * 1.1);
    }
}
