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

//! The `palm-cs` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 solver divergence.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiment::{
    config::KeyValues, reconstruct_observed, rows_to_csv, run_experiment, ExperimentConfig,
    OperatorKind,
};
use crate::imageio::{load_pgm, save_pgm};
use crate::noise::{NoiseKind, NoiseSpec};
use crate::sensing::{
    basis_pair_from_spec, make_gaussian_orthonormal, make_partial_dct, mutual_coherence,
    read_operator, write_operator,
};
use crate::solver::{kkt_report, solve_from, PalmParams, PalmState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "palm-cs", version, about = "Sparse recovery and compressive-sensing image experiments")]
struct Cli {
    /// Master seed for every random draw [default: 0, or the config file's].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory (meaning depends on the subcommand).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// Print one line per solver iteration to stderr (`solve` only).
    #[arg(long, global = true)]
    trace: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve A·x + r = b for a serialized operator and a measurement vector.
    Solve {
        /// Operator container written by `palm-cs operator`.
        #[arg(long)]
        operator: PathBuf,
        /// Text file of whitespace-separated measurements.
        #[arg(long)]
        measurements: PathBuf,
        /// Optional warm start, same format.
        #[arg(long)]
        x0: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Sense, optionally corrupt, and reconstruct one PGM image.
    Reconstruct {
        #[arg(long)]
        image: PathBuf,
        /// Measurements per column divided by the column length.
        #[arg(long, default_value_t = 0.5)]
        ratio: f64,
        /// gaussian | partial_dct
        #[arg(long, default_value = "gaussian")]
        operator: String,
        /// Corrupt the image first, e.g. `salt_pepper:0.05`.
        #[arg(long)]
        noise: Option<String>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run a full experiment grid described by a key = value config file.
    Bench {
        /// `key = value` experiment description.
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the mutual coherence of two named bases, e.g. `identity:hadamard4`.
    Coherence {
        /// `phi:psi`, each one of identity, dct, hadamard, random (optionally suffixed with a size).
        #[arg(long)]
        pair: String,
        /// Size used when neither basis names one.
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Apply a noise model to a PGM image.
    Noise {
        #[arg(long)]
        image: PathBuf,
        /// gaussian | salt_pepper | speckle
        #[arg(long)]
        kind: String,
        /// Intensity as a fraction in (0, 1].
        #[arg(long)]
        level: f64,
    },
    /// Write a seeded measurement operator to a binary container.
    Operator {
        /// gaussian | partial_dct
        #[arg(long, default_value = "gaussian")]
        kind: String,
        /// Number of measurements (rows).
        #[arg(long)]
        m: usize,
        /// Signal length (columns).
        #[arg(long)]
        n: usize,
    },
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Residual weight [default: 1e-3·max|b|]
    #[arg(long)]
    mu: Option<f64>,
    /// Penalty parameter [default: m / sum|b|]
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    /// Used for both the feasibility and the x-change tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

impl SolverArgs {
    fn params(&self) -> PalmParams {
        PalmParams {
            mu: self.mu,
            beta: self.beta,
            tau: self.tau,
            gamma: self.gamma,
            max_iter: self.max_iter,
            tol_feasibility: self.tol,
            tol_x_change: self.tol,
        }
    }
}

/// Parses whitespace-separated numbers; `#` starts a comment.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Config {
                line: i + 1,
                reason: format!("`{tok}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Config { line: i + 1, reason: format!("`{tok}` is not finite") });
            }
            out.push(v);
        }
    }
    Ok(out)
}

pub fn format_vector(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}\n")).collect()
}

fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_vector(&text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Divergence { .. } => EXIT_DIVERGED,
        _ => EXIT_DATA,
    }
}

fn operator_kind(name: &str) -> Result<OperatorKind> {
    name.parse()
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    EXIT_OK
                }
                _ => {
                    let _ = e.print();
                    EXIT_USAGE
                }
            };
        }
    };
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Warn };
    let _ = env_logger::Builder::new().filter_level(level).try_init();

    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let seed = cli.seed.unwrap_or(0);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let say = !cli.quiet;
    match &cli.command {
        Command::Solve { operator, measurements, x0, solver } => {
            let a = read_operator(operator)?;
            let b = read_vector(measurements)?;
            let mut start = PalmState::zeros(a.rows(), a.cols());
            if let Some(path) = x0 {
                let x = read_vector(path)?;
                crate::error::check_len("x0", a.cols(), x.len())?;
                start.x = x;
            }
            let params = solver.params();
            let stderr = std::io::stderr();
            let mut err_lock = stderr.lock();
            let trace: Option<&mut dyn Write> = if cli.trace { Some(&mut err_lock) } else { None };
            let result = solve_from(&a, &b, &params, start, trace)?;
            let kkt = kkt_report(&a, &b, &result, result.mu)?;
            let report = format!(
                "iterations {}\nconverged {}\ndual_feasibility {:e}\ncomplementarity {:e}\nprimal_feasibility {:e}\nmultiplier_consistency {:e}\n",
                result.iterations,
                result.converged,
                kkt.dual_feasibility,
                kkt.complementarity,
                kkt.primal_feasibility,
                kkt.multiplier_consistency
            );
            match &cli.out {
                Some(path) => {
                    write_text(path, &format_vector(&result.x))?;
                    if say {
                        let _ = out.write_all(report.as_bytes());
                    }
                }
                None => {
                    if say {
                        let _ = out.write_all(report.as_bytes());
                        let _ = writeln!(out, "x");
                    }
                    let _ = out.write_all(format_vector(&result.x).as_bytes());
                }
            }
            Ok(EXIT_OK)
        }
        Command::Reconstruct { image, ratio, operator, noise, solver } => {
            let original = load_pgm(image)?;
            let mut cfg = ExperimentConfig::new(*ratio, operator_kind(operator)?, seed);
            cfg.solver = solver.params();
            let observed = match noise {
                Some(spec) => {
                    let grid = crate::experiment::config::parse_noise_grid(spec, seed)?;
                    grid.iter().try_fold(original.clone(), |img, n| n.apply(&img))?
                }
                None => original.clone(),
            };
            let rec = reconstruct_observed(&original, &observed, &cfg)?;
            let path = cli.out.clone().unwrap_or_else(|| PathBuf::from("reconstruction.pgm"));
            save_pgm(&path, &rec.image)?;
            if say {
                let _ = writeln!(
                    out,
                    "psnr_db {:.6}\nrmse {:.6}\nelapsed_seconds {:.6}\nfailed_blocks {}\nwrote {}",
                    rec.report.psnr_db,
                    rec.report.rmse,
                    rec.report.elapsed_seconds,
                    rec.failed_blocks.len(),
                    path.display()
                );
            }
            Ok(EXIT_OK)
        }
        Command::Bench { config } => {
            let text = std::fs::read_to_string(config)
                .map_err(|e| Error::io(config.display().to_string(), e))?;
            let mut kv = KeyValues::parse(&text)?;
            if let Some(seed) = cli.seed {
                kv.set("seed", seed.to_string());
            }
            let base = config.parent().unwrap_or(Path::new("."));
            let mut cfg = ExperimentConfig::from_key_values(&kv, base)?;
            if let Some(dir) = &cli.out {
                cfg.output_dir = dir.clone();
            }
            let output = run_experiment(&cfg)?;
            if say {
                let _ = out.write_all(rows_to_csv(&output.rows).as_bytes());
                let _ = writeln!(out, "wrote {}", output.csv_path.display());
            }
            let failed = output.rows.iter().any(|r| r.status.starts_with("error"));
            Ok(if failed { EXIT_DATA } else { EXIT_OK })
        }
        Command::Coherence { pair, n } => {
            let pair = basis_pair_from_spec(pair, *n, seed)?;
            let _ = writeln!(out, "{:?}", mutual_coherence(&pair));
            Ok(EXIT_OK)
        }
        Command::Noise { image, kind, level } => {
            let img = load_pgm(image)?;
            let kind: NoiseKind = kind.parse()?;
            let noisy = NoiseSpec::new(kind, *level, seed)?.apply(&img)?;
            let path = cli.out.clone().unwrap_or_else(|| PathBuf::from("noisy.pgm"));
            save_pgm(&path, &noisy)?;
            if say {
                let _ = writeln!(out, "wrote {}", path.display());
            }
            Ok(EXIT_OK)
        }
        Command::Operator { kind, m, n } => {
            let a = match operator_kind(kind)? {
                OperatorKind::PartialDct => make_partial_dct(*m, *n, seed)?,
                OperatorKind::GaussianOrthonormal => make_gaussian_orthonormal(*m, *n, seed)?,
            };
            let path = cli.out.clone().unwrap_or_else(|| PathBuf::from("operator.bin"));
            write_operator(&path, &a)?;
            if say {
                let _ = writeln!(out, "wrote {}×{} operator to {}", m, n, path.display());
            }
            Ok(EXIT_OK)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_text_format() {
        assert_eq!(parse_vector("1 2.5\n# note\n-3e-1 # tail\n").unwrap(), vec![1.0, 2.5, -0.3]);
        assert!(parse_vector("1 x").is_err());
        assert!(parse_vector("inf").is_err());
        let v = vec![0.1, -2.0, 1e-300];
        assert_eq!(parse_vector(&format_vector(&v)).unwrap(), v);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["palm-cs"]), EXIT_USAGE);
        assert_eq!(run(["palm-cs", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["palm-cs", "coherence"]), EXIT_USAGE);
        assert_eq!(run(["palm-cs", "--help"]), EXIT_OK);
    }

    #[test]
    fn data_errors_exit_two() {
        assert_eq!(run(["palm-cs", "--quiet", "noise", "--image", "/nonexistent.pgm", "--kind", "speckle", "--level", "0.1"]), EXIT_DATA);
        assert_eq!(run(["palm-cs", "--quiet", "coherence", "--pair", "identity:hadamard6"]), EXIT_DATA);
    }
}
