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

//! The end-to-end image experiment: corrupt → sense → reconstruct → score → tabulate.
//!
//! Each image column `s` (length `n = height`) is treated as sparse in the
//! DCT basis, `s = Ψ·θ` with `Ψ = Dᵀ`. It is measured as `b = Φ·s` with an
//! m×n operator `Φ`, `m = round(ratio·n)`, the coefficients are recovered by
//! solving on `A = Φ·Ψ`, and the column is resynthesized as `ŝ = Ψ·θ̂`.
//!
//! One operator, seeded from the master seed, is shared by all blocks, images
//! and noise cells, so blocks are independent and may be solved in parallel.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imageio::{load_pgm, quantize, save_pgm, GrayImage};
use crate::linops::SensingOperator;
use crate::metrics::{psnr_from_rmse, rmse_float, time_block, QualityReport};
use crate::noise::NoiseSpec;
use crate::rng::derive_seed;
use crate::sensing::{dct_matrix, make_gaussian_orthonormal, make_partial_dct};
use crate::solver::{solve, PalmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Random rows of the DCT. Against the DCT sparsity basis this degenerates
    /// to sampling coefficients directly (maximal coherence).
    PartialDct,
    GaussianOrthonormal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub image_paths: Vec<PathBuf>,
    /// Empty means clean reconstructions only.
    pub noise_grid: Vec<NoiseSpec>,
    /// `m/n`, in `(0, 1]`.
    pub measurement_ratio: f64,
    pub operator_kind: OperatorKind,
    pub solver: PalmParams,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Settings for in-memory use: no images, default solver, ratio 0.5.
    pub fn new(measurement_ratio: f64, operator_kind: OperatorKind, master_seed: u64) -> Self {
        ExperimentConfig {
            image_paths: Vec::new(),
            noise_grid: Vec::new(),
            measurement_ratio,
            operator_kind,
            solver: PalmParams::default(),
            master_seed,
            output_dir: PathBuf::from("results"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.measurement_ratio > 0.0 && self.measurement_ratio <= 1.0) {
            return Err(Error::param(
                "measurement_ratio",
                format!("must lie in (0, 1], got {}", self.measurement_ratio),
            ));
        }
        if self.image_paths.is_empty() {
            return Err(Error::param("images", "at least one image is required"));
        }
        self.solver.validate()
    }

    fn check_pipeline(&self) -> Result<()> {
        if !(self.measurement_ratio > 0.0 && self.measurement_ratio <= 1.0) {
            return Err(Error::param(
                "measurement_ratio",
                format!("must lie in (0, 1], got {}", self.measurement_ratio),
            ));
        }
        self.solver.validate()
    }
}

/// Output of one image reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub image: GrayImage,
    /// Unquantized row-major reconstruction; the metrics are computed on it.
    pub pixels: Vec<f64>,
    pub report: QualityReport,
    /// Blocks whose solve diverged; they hold the minimum-norm fallback `Ψ·Aᵀb`.
    pub failed_blocks: Vec<usize>,
}

/// Number of measurements per block of length `n`.
pub fn measurement_count(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64).round() as usize).clamp(1, n)
}

/// The measurement operator `Φ` for blocks of length `n`.
pub fn measurement_operator(cfg: &ExperimentConfig, n: usize) -> Result<SensingOperator> {
    let m = measurement_count(cfg.measurement_ratio, n);
    let seed = derive_seed(cfg.master_seed, 0);
    match cfg.operator_kind {
        OperatorKind::PartialDct => make_partial_dct(m, n, seed),
        OperatorKind::GaussianOrthonormal => make_gaussian_orthonormal(m, n, seed),
    }
}

struct BlockSystem {
    phi: SensingOperator,
    a: SensingOperator,
    /// Ψ stored transposed (= D), so `Ψ·θ` is `D`'s adjoint.
    dct: SensingOperator,
}

impl BlockSystem {
    fn new(cfg: &ExperimentConfig, n: usize) -> Result<Self> {
        let phi = measurement_operator(cfg, n)?;
        let d = dct_matrix(n);
        let a = phi.matrix().matmul(&d.transpose())?;
        Ok(BlockSystem {
            a: SensingOperator::new(a, true)?,
            phi,
            dct: SensingOperator::new(d, true)?,
        })
    }

    fn solve_block(&self, column: &[f64], solver: &PalmParams) -> Result<(Vec<f64>, bool)> {
        let b = crate::linops::matvec(&self.phi, column)?;
        let (theta, failed) = match solve(&self.a, &b, solver, None) {
            Ok(res) => (res.x, false),
            Err(Error::Divergence { .. }) => (crate::linops::adjoint_matvec(&self.a, &b)?, true),
            Err(e) => return Err(e),
        };
        Ok((crate::linops::adjoint_matvec(&self.dct, &theta)?, failed))
    }
}

/// Reconstructs `observed` column by column and scores the result against
/// `reference` (the uncorrupted image).
pub fn reconstruct_observed(
    reference: &GrayImage,
    observed: &GrayImage,
    cfg: &ExperimentConfig,
) -> Result<Reconstruction> {
    cfg.check_pipeline()?;
    if !reference.same_dims(observed) {
        return Err(Error::DimensionMismatch {
            op: "reconstruct_observed",
            expected: reference.pixels().len(),
            found: observed.pixels().len(),
        });
    }
    let (width, height) = (observed.width(), observed.height());
    let system = BlockSystem::new(cfg, height)?;
    let columns: Vec<Vec<f64>> = (0..width)
        .map(|x| (0..height).map(|y| observed.get(x, y) as f64).collect())
        .collect();

    let (solved, elapsed) = time_block(|| {
        columns
            .par_iter()
            .map(|col| system.solve_block(col, &cfg.solver))
            .collect::<Result<Vec<_>>>()
    });
    let solved = solved?;

    let mut pixels = vec![0.0; width * height];
    let mut failed_blocks = Vec::new();
    for (x, (col, failed)) in solved.iter().enumerate() {
        if *failed {
            failed_blocks.push(x);
        }
        for (y, v) in col.iter().enumerate() {
            pixels[y * width + x] = *v;
        }
    }
    if !failed_blocks.is_empty() {
        log::warn!("{} block(s) diverged and fell back to the minimum-norm estimate", failed_blocks.len());
    }
    let rmse = rmse_float(reference, &pixels)?;
    let image = GrayImage::new(width, height, pixels.iter().map(|&v| quantize(v)).collect())?;
    Ok(Reconstruction {
        image,
        pixels,
        report: QualityReport::from_rmse(rmse, elapsed),
        failed_blocks,
    })
}

/// Reconstructs a clean image from compressive measurements of its columns.
pub fn reconstruct_image(img: &GrayImage, cfg: &ExperimentConfig) -> Result<Reconstruction> {
    reconstruct_observed(img, img, cfg)
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub image_name: String,
    /// Noise name, or `none` for the clean run.
    pub noise_kind: String,
    pub level_percent: f64,
    pub psnr_db: f64,
    pub rmse: f64,
    pub elapsed_seconds: f64,
    /// `ok`, `failed_blocks=<count>`, or `error: <message>`.
    pub status: String,
}

pub const CSV_HEADER: &str = "image_name,noise_kind,level_percent,psnr_db,rmse,elapsed_seconds,status";

fn csv_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl ExperimentRow {
    pub fn to_csv(&self) -> String {
        // status text is the only free-form field; keep it comma-free
        let status = self.status.replace([',', '\n', '\r'], ";");
        format!(
            "{},{},{},{},{},{},{}",
            self.image_name,
            self.noise_kind,
            self.level_percent,
            csv_number(self.psnr_db),
            csv_number(self.rmse),
            csv_number(self.elapsed_seconds),
            status
        )
    }
}

pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.to_csv());
    }
    out
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ExperimentRow>,
    pub csv_path: PathBuf,
    pub images: Vec<PathBuf>,
}

fn image_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
        .replace([',', ' '], "_")
}

/// `{image}_{noise}_{level%}_s{seed}.pgm`
pub fn reconstruction_file_name(image: &str, noise: Option<&NoiseSpec>, master_seed: u64) -> String {
    match noise {
        None => format!("{image}_clean_0_s{master_seed}.pgm"),
        Some(n) => format!("{image}_{}_{}_s{}.pgm", n.kind, n.level_percent(), n.seed),
    }
}

fn error_row(image_name: &str, noise: Option<&NoiseSpec>, err: &Error) -> ExperimentRow {
    ExperimentRow {
        image_name: image_name.to_string(),
        noise_kind: noise.map_or("none".into(), |n| n.kind.to_string()),
        level_percent: noise.map_or(0.0, NoiseSpec::level_percent),
        psnr_db: f64::NAN,
        rmse: f64::NAN,
        elapsed_seconds: 0.0,
        status: format!("error: {err}"),
    }
}

/// Runs the clean cell plus every noise cell on every image, writing
/// `results.csv` and one reconstructed PGM per row into `output_dir`.
///
/// Unreadable images and failing cells produce `error:` rows; the remaining
/// work still runs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| Error::io(cfg.output_dir.display().to_string(), e))?;
    let mut rows = Vec::new();
    let mut images = Vec::new();

    for path in &cfg.image_paths {
        let name = image_stem(path);
        let original = match load_pgm(path) {
            Ok(img) => img,
            Err(e) => {
                log::error!("skipping {}: {e}", path.display());
                rows.push(error_row(&name, None, &e));
                continue;
            }
        };
        let cells: Vec<Option<&NoiseSpec>> =
            std::iter::once(None).chain(cfg.noise_grid.iter().map(Some)).collect();
        for noise in cells {
            let outcome = noise
                .map_or_else(|| Ok(original.clone()), |n| n.apply(&original))
                .and_then(|observed| reconstruct_observed(&original, &observed, cfg));
            match outcome {
                Ok(rec) => {
                    let file = cfg.output_dir.join(reconstruction_file_name(&name, noise, cfg.master_seed));
                    save_pgm(&file, &rec.image)?;
                    images.push(file);
                    let status = if rec.failed_blocks.is_empty() {
                        "ok".to_string()
                    } else {
                        format!("failed_blocks={}", rec.failed_blocks.len())
                    };
                    rows.push(ExperimentRow {
                        image_name: name.clone(),
                        noise_kind: noise.map_or("none".into(), |n| n.kind.to_string()),
                        level_percent: noise.map_or(0.0, NoiseSpec::level_percent),
                        psnr_db: psnr_from_rmse(rec.report.rmse),
                        rmse: rec.report.rmse,
                        elapsed_seconds: rec.report.elapsed_seconds,
                        status,
                    });
                }
                Err(e) => {
                    log::error!("{name}: {e}");
                    rows.push(error_row(&name, noise, &e));
                }
            }
        }
    }

    let csv_path = cfg.output_dir.join("results.csv");
    std::fs::write(&csv_path, rows_to_csv(&rows)).map_err(|e| Error::io(csv_path.display().to_string(), e))?;
    Ok(ExperimentOutput { rows, csv_path, images })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::test_pattern;
    use crate::noise::NoiseKind;

    fn tight() -> PalmParams {
        PalmParams {
            tol_feasibility: 1e-9,
            tol_x_change: 1e-9,
            ..Default::default()
        }
    }

    #[test]
    fn full_measurement_is_near_exact() {
        let img = test_pattern(16, 32);
        let mut cfg = ExperimentConfig::new(1.0, OperatorKind::PartialDct, 1);
        cfg.solver = tight();
        let rec = reconstruct_image(&img, &cfg).unwrap();
        assert!(rec.report.rmse <= 1.0, "rmse {}", rec.report.rmse);
        assert!(rec.failed_blocks.is_empty());
    }

    #[test]
    fn constant_image_is_one_sparse() {
        let img = GrayImage::filled(8, 64, 128);
        let cfg = ExperimentConfig::new(0.5, OperatorKind::GaussianOrthonormal, 2);
        let rec = reconstruct_image(&img, &cfg).unwrap();
        assert!(rec.report.rmse <= 1.0, "rmse {}", rec.report.rmse);
    }

    #[test]
    fn reconstruction_is_deterministic() {
        let img = test_pattern(12, 32);
        let cfg = ExperimentConfig::new(0.5, OperatorKind::GaussianOrthonormal, 5);
        let a = reconstruct_image(&img, &cfg).unwrap();
        let b = reconstruct_image(&img, &cfg).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.report.rmse.to_bits(), b.report.rmse.to_bits());
        assert_eq!(a.pixels, b.pixels);
    }

    #[test]
    fn divergent_blocks_are_flagged_not_fatal() {
        let img = test_pattern(4, 16);
        let mut cfg = ExperimentConfig::new(0.5, OperatorKind::GaussianOrthonormal, 5);
        // a huge β makes the multiplier step overflow
        cfg.solver.beta = Some(1e300);
        cfg.solver.mu = Some(1e300);
        let rec = reconstruct_image(&img, &cfg).unwrap();
        assert_eq!(rec.failed_blocks, vec![0, 1, 2, 3]);
    }

    #[test]
    fn csv_row_format() {
        let row = ExperimentRow {
            image_name: "boat".into(),
            noise_kind: NoiseKind::SaltPepper.to_string(),
            level_percent: 5.0,
            psnr_db: 17.8557,
            rmse: 32.6403,
            elapsed_seconds: 1.5,
            status: "error: a, b".into(),
        };
        assert_eq!(row.to_csv(), "boat,salt_pepper,5,17.855700,32.640300,1.500000,error: a; b");
        assert_eq!(rows_to_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn file_names_encode_the_cell() {
        let spec = NoiseSpec::new(NoiseKind::Gaussian, 0.1, 42).unwrap();
        assert_eq!(reconstruction_file_name("img", Some(&spec), 0), "img_gaussian_10_s42.pgm");
        assert_eq!(reconstruction_file_name("img", None, 3), "img_clean_0_s3.pgm");
    }

    #[test]
    fn measurement_counts() {
        assert_eq!(measurement_count(0.5, 256), 128);
        assert_eq!(measurement_count(1e-6, 256), 1);
        assert_eq!(measurement_count(1.0, 7), 7);
    }
}
