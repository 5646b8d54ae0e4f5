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

//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! images            = lena.pgm, boat.pgm   # relative to the config file
//! noise             = table                # none | table | kind:level, ...
//! measurement_ratio = 0.5
//! operator          = gaussian             # gaussian | partial_dct
//! seed              = 0
//! output_dir        = results
//! mu                = auto                 # or a positive number
//! beta              = auto
//! tau               = 1.0
//! gamma             = 1.0
//! max_iter          = 5000
//! tol_feasibility   = 1e-6
//! tol_x_change      = 1e-6
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::noise::{NoiseKind, NoiseSpec, TABLE_LEVELS};
use crate::rng::derive_seed;
use crate::solver::PalmParams;

use super::{ExperimentConfig, OperatorKind};

const KNOWN_KEYS: &[&str] = &[
    "images",
    "noise",
    "measurement_ratio",
    "operator",
    "seed",
    "output_dir",
    "mu",
    "beta",
    "tau",
    "gamma",
    "max_iter",
    "tol_feasibility",
    "tol_x_change",
];

/// Parsed but uninterpreted `key = value` pairs, with the line each came from.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config { line: line_no, reason: format!("unknown key `{key}`") });
            }
            if entries.insert(key.clone(), (line_no, value.trim().to_string())).is_some() {
                return Err(Error::Config { line: line_no, reason: format!("duplicate key `{key}`") });
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (0, value.into()));
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |(l, _)| *l)
    }

    fn typed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Error::Config {
                line: self.line(key),
                reason: format!("bad value `{v}` for `{key}`"),
            }),
        }
    }

    fn auto_or<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            Some(v) if v.eq_ignore_ascii_case("auto") => Ok(None),
            _ => self.typed(key),
        }
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" | "gaussian_orthonormal" => Ok(OperatorKind::GaussianOrthonormal),
            "partial_dct" | "dct" => Ok(OperatorKind::PartialDct),
            other => Err(Error::param("operator", format!("unknown operator `{other}`"))),
        }
    }
}

/// Expands a `noise` value. Cell `i` of the grid is seeded with
/// `derive_seed(master_seed, i + 1)`.
pub fn parse_noise_grid(value: &str, master_seed: u64) -> Result<Vec<NoiseSpec>> {
    let value = value.trim();
    let cells: Vec<(NoiseKind, f64)> = if value.is_empty() || value.eq_ignore_ascii_case("none") {
        Vec::new()
    } else if value.eq_ignore_ascii_case("table") {
        NoiseKind::ALL
            .iter()
            .flat_map(|&k| TABLE_LEVELS.iter().map(move |&l| (k, l)))
            .collect()
    } else {
        value
            .split(',')
            .map(|item| {
                let (kind, level) = item.trim().split_once(':').ok_or_else(|| {
                    Error::param("noise", format!("expected `kind:level`, got `{item}`"))
                })?;
                let level: f64 = level
                    .trim()
                    .parse()
                    .map_err(|_| Error::param("noise", format!("bad level in `{item}`")))?;
                Ok((kind.parse()?, level))
            })
            .collect::<Result<_>>()?
    };
    cells
        .into_iter()
        .enumerate()
        .map(|(i, (kind, level))| NoiseSpec::new(kind, level, derive_seed(master_seed, i as u64 + 1)))
        .collect()
}

impl ExperimentConfig {
    /// Builds a configuration from parsed pairs. Relative paths resolve against `base_dir`.
    pub fn from_key_values(kv: &KeyValues, base_dir: &Path) -> Result<Self> {
        let resolve = |p: &str| {
            let p = PathBuf::from(p.trim());
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        let image_paths: Vec<PathBuf> = kv
            .get("images")
            .unwrap_or("")
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(resolve)
            .collect();
        let master_seed = kv.typed("seed")?.unwrap_or(0);
        let noise_grid = parse_noise_grid(kv.get("noise").unwrap_or("none"), master_seed)?;
        let defaults = PalmParams::default();
        let solver = PalmParams {
            mu: kv.auto_or("mu")?,
            beta: kv.auto_or("beta")?,
            tau: kv.typed("tau")?.unwrap_or(defaults.tau),
            gamma: kv.typed("gamma")?.unwrap_or(defaults.gamma),
            max_iter: kv.typed("max_iter")?.unwrap_or(defaults.max_iter),
            tol_feasibility: kv.typed("tol_feasibility")?.unwrap_or(defaults.tol_feasibility),
            tol_x_change: kv.typed("tol_x_change")?.unwrap_or(defaults.tol_x_change),
        };
        let cfg = ExperimentConfig {
            image_paths,
            noise_grid,
            measurement_ratio: kv.typed("measurement_ratio")?.unwrap_or(0.5),
            operator_kind: kv.typed("operator")?.unwrap_or(OperatorKind::GaussianOrthonormal),
            solver,
            master_seed,
            output_dir: resolve(kv.get("output_dir").unwrap_or("results")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        ExperimentConfig::from_key_values(&KeyValues::parse(text)?, base_dir)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        ExperimentConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config() {
        let text = "\
# table run
images = a.pgm, /abs/b.pgm
noise = table
measurement_ratio = 0.25   # quarter
operator = partial_dct
seed = 7
mu = 0.01
beta = auto
max_iter = 300
";
        let cfg = ExperimentConfig::parse(text, Path::new("/data")).unwrap();
        assert_eq!(cfg.image_paths, vec![PathBuf::from("/data/a.pgm"), PathBuf::from("/abs/b.pgm")]);
        assert_eq!(cfg.noise_grid.len(), 12);
        assert_eq!(cfg.measurement_ratio, 0.25);
        assert_eq!(cfg.operator_kind, OperatorKind::PartialDct);
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.solver.mu, Some(0.01));
        assert_eq!(cfg.solver.beta, None);
        assert_eq!(cfg.solver.max_iter, 300);
        assert_eq!(cfg.output_dir, PathBuf::from("/data/results"));
        // same master seed → same noise seeds
        let again = ExperimentConfig::parse(text, Path::new("/data")).unwrap();
        assert_eq!(cfg.noise_grid, again.noise_grid);
    }

    #[test]
    fn explicit_noise_list() {
        let grid = parse_noise_grid("gaussian:0.05, salt & pepper:0.1", 3).unwrap();
        assert_eq!(grid.len(), 2);
        assert_eq!(grid[1].kind, NoiseKind::SaltPepper);
        assert_ne!(grid[0].seed, grid[1].seed);
        assert!(parse_noise_grid("none", 0).unwrap().is_empty());
        assert!(parse_noise_grid("gaussian", 0).is_err());
        assert!(parse_noise_grid("gaussian:1.5", 0).is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = KeyValues::parse("images = a.pgm\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        let err = KeyValues::parse("images = a.pgm\nimages = b.pgm\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        let err = KeyValues::parse("no equals sign\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }));
        let err = ExperimentConfig::parse("images = a.pgm\nmax_iter = many\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
    }

    #[test]
    fn validation() {
        assert!(ExperimentConfig::parse("noise = none\n", Path::new(".")).is_err());
        assert!(ExperimentConfig::parse("images = a.pgm\nmeasurement_ratio = 0\n", Path::new(".")).is_err());
        assert!(ExperimentConfig::parse("images = a.pgm\ngamma = 3\n", Path::new(".")).is_err());
    }
}
