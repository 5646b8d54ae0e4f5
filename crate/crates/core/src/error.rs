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

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite iterate in the {update}-update at iteration {iteration}")]
    Divergence {
        iteration: usize,
        update: &'static str,
    },

    #[error("sensing matrix lost rank during orthonormalization (row {row}); retry with another seed")]
    RankDeficient { row: usize },

    #[error("PGM parse error at byte {offset}: {reason}")]
    Pgm { offset: usize, reason: PgmErrorKind },

    #[error("operator container: {0}")]
    Container(String),

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Distinct PGM failure modes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PgmErrorKind {
    #[error("bad magic number (expected P2 or P5)")]
    BadMagic,
    #[error("unsupported maxval {0} (only 255 is accepted)")]
    UnsupportedMaxval(u64),
    #[error("malformed header field")]
    MalformedHeader,
    #[error("truncated payload: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("sample value {0} exceeds maxval")]
    SampleOutOfRange(u64),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_len(op: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            op,
            expected,
            found,
        })
    }
}
