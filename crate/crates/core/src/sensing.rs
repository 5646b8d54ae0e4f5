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

//! Measurement operators, orthonormal bases and their incoherence.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linops::{axpy, dot_unchecked, norm2, Mat, SensingOperator, ORTHONORMAL_TOL};
use crate::rng::SeededRng;

/// N×N orthonormal DCT-II matrix. Row `k` is the `k`-th cosine basis vector,
/// so `D·s` gives the DCT coefficients of `s` and `Dᵀ·θ` inverts it.
pub fn dct_matrix(n: usize) -> Mat {
    let mut d = Mat::zeros(n, n);
    let nf = n as f64;
    for k in 0..n {
        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for j in 0..n {
            let angle = std::f64::consts::PI * (2 * j + 1) as f64 * k as f64 / (2.0 * nf);
            d.set(k, j, scale * angle.cos());
        }
    }
    d
}

/// Normalized Sylvester–Hadamard matrix (entries ±1/√n). `n` must be a power of two.
pub fn hadamard_matrix(n: usize) -> Result<Mat> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::param("n", format!("Hadamard order must be a power of two, got {n}")));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut h = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            h.set(i, j, sign * scale);
        }
    }
    Ok(h)
}

fn check_shape(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::param("m", format!("need 1 ≤ m ≤ N, got m = {m}, N = {n}")));
    }
    Ok(())
}

/// `m` distinct rows of the N×N orthonormal DCT-II matrix, picked by a seeded
/// Fisher–Yates shuffle of the row indices and kept in ascending order.
pub fn make_partial_dct(m: usize, n: usize, seed: u64) -> Result<SensingOperator> {
    check_shape(m, n)?;
    let mut rng = SeededRng::new(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.below(i + 1);
        idx.swap(i, j);
    }
    let mut chosen = idx[..m].to_vec();
    chosen.sort_unstable();

    let full = dct_matrix(n);
    let mut data = Vec::with_capacity(m * n);
    for &k in &chosen {
        data.extend_from_slice(full.row(k));
    }
    SensingOperator::new(Mat::from_row_major(m, n, data)?, true)
}

/// Seeded standard-normal m×N matrix whose rows are orthonormalized by
/// modified Gram–Schmidt with one full re-orthogonalization pass.
pub fn make_gaussian_orthonormal(m: usize, n: usize, seed: u64) -> Result<SensingOperator> {
    check_shape(m, n)?;
    let mut rng = SeededRng::new(seed);
    let mut rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.normal()).collect())
        .collect();
    for i in 0..m {
        let (done, rest) = rows.split_at_mut(i);
        let row = &mut rest[0];
        let original = norm2(row);
        for _pass in 0..2 {
            for q in done.iter() {
                let c = dot_unchecked(q, row);
                axpy(-c, q, row);
            }
        }
        let remaining = norm2(row);
        if remaining.is_nan() || remaining <= 1e-8 * original {
            return Err(Error::RankDeficient { row: i });
        }
        row.iter_mut().for_each(|v| *v /= remaining);
    }
    let data = rows.into_iter().flatten().collect();
    SensingOperator::new(Mat::from_row_major(m, n, data)?, true)
}

/// Two N×N matrices with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPair {
    phi: Mat,
    psi: Mat,
}

fn check_orthonormal_columns(name: &'static str, m: &Mat) -> Result<()> {
    if m.rows() != m.cols() || m.rows() == 0 {
        return Err(Error::param(name, format!("basis must be square, got {}×{}", m.rows(), m.cols())));
    }
    let dev = m.transpose().row_gram().max_deviation_from_identity();
    if dev > ORTHONORMAL_TOL {
        return Err(Error::param(name, format!("columns not orthonormal (|MᵀM − I|max = {dev:e})")));
    }
    Ok(())
}

impl BasisPair {
    pub fn new(phi: Mat, psi: Mat) -> Result<Self> {
        check_orthonormal_columns("phi", &phi)?;
        check_orthonormal_columns("psi", &psi)?;
        if phi.rows() != psi.rows() {
            return Err(Error::DimensionMismatch {
                op: "BasisPair::new",
                expected: phi.rows(),
                found: psi.rows(),
            });
        }
        Ok(BasisPair { phi, psi })
    }

    pub fn phi(&self) -> &Mat {
        &self.phi
    }

    pub fn psi(&self) -> &Mat {
        &self.psi
    }

    pub fn dim(&self) -> usize {
        self.phi.rows()
    }
}

/// `√N · max_{i,j} |⟨φ_i, ψ_j⟩|` over the columns of the two bases.
/// Ranges from 1 (maximally incoherent) to √N (a shared column).
pub fn mutual_coherence(pair: &BasisPair) -> f64 {
    let phi_t = pair.phi.transpose();
    let psi_t = pair.psi.transpose();
    let mut worst = 0.0f64;
    for i in 0..phi_t.rows() {
        for j in 0..psi_t.rows() {
            worst = worst.max(dot_unchecked(phi_t.row(i), psi_t.row(j)).abs());
        }
    }
    (pair.dim() as f64).sqrt() * worst
}

/// Builds a named N×N basis (columns orthonormal).
///
/// Names: `identity`, `dct` (columns are cosine basis vectors), `hadamard`
/// (N a power of two), `random` (seeded Gaussian, orthonormalized).
pub fn named_basis(name: &str, n: usize, seed: u64) -> Result<Mat> {
    match name {
        "identity" => Ok(Mat::identity(n)),
        "dct" => Ok(dct_matrix(n).transpose()),
        "hadamard" => hadamard_matrix(n),
        "random" => Ok(make_gaussian_orthonormal(n, n, seed)?.matrix().transpose()),
        other => Err(Error::param("basis", format!("unknown basis `{other}`"))),
    }
}

/// Splits a basis token such as `hadamard4` into its name and optional size.
pub fn parse_basis_token(token: &str) -> Result<(&str, Option<usize>)> {
    let split = token
        .find(|c: char| c.is_ascii_digit())
        .unwrap_or(token.len());
    let (name, digits) = token.split_at(split);
    if name.is_empty() {
        return Err(Error::param("basis", format!("missing basis name in `{token}`")));
    }
    if digits.is_empty() {
        return Ok((name, None));
    }
    let n = digits
        .parse()
        .map_err(|_| Error::param("basis", format!("bad size in `{token}`")))?;
    Ok((name, Some(n)))
}

/// Builds a pair from a `name[N]:name[N]` description, e.g. `identity:hadamard4`.
/// A missing size is taken from the other side, then from `default_n`.
pub fn basis_pair_from_spec(spec: &str, default_n: usize, seed: u64) -> Result<BasisPair> {
    let (left, right) = spec
        .split_once(':')
        .ok_or_else(|| Error::param("pair", format!("expected `a:b`, got `{spec}`")))?;
    let (ln, lsize) = parse_basis_token(left.trim())?;
    let (rn, rsize) = parse_basis_token(right.trim())?;
    let n = lsize.or(rsize).unwrap_or(default_n);
    let phi = named_basis(ln, lsize.unwrap_or(n), seed)?;
    let psi = named_basis(rn, rsize.unwrap_or(n), seed.wrapping_add(1))?;
    BasisPair::new(phi, psi)
}

const POWER_START_SEED: u64 = 0x05ee_d0f5_ca1e;

/// Power-iteration estimate of the largest singular value of `A`.
///
/// Each step reports `||A·v||` for a unit vector `v`, which never exceeds
/// `σmax`; the running maximum is returned, so the estimate is nondecreasing
/// in `iterations`.
pub fn spectral_norm_estimate(a: &SensingOperator, iterations: usize) -> f64 {
    let mut rng = SeededRng::new(POWER_START_SEED);
    let mut v: Vec<f64> = (0..a.cols()).map(|_| rng.normal()).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; a.rows()];
    let mut best = 0.0f64;
    for _ in 0..iterations.max(1) {
        a.apply_into(&v, &mut w);
        best = best.max(norm2(&w));
        a.apply_adjoint_into(&w, &mut v);
        let nv = norm2(&v);
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
    }
    best
}

const CONTAINER_MAGIC: &[u8; 8] = b"PALMOP\x00\x01";
const FLAG_ROWS_ORTHONORMAL: u32 = 1;
const HEADER_LEN: usize = 8 + 8 + 8 + 4;

/// Serializes an operator:
///
/// ```text
/// offset  size  field
/// 0       8     magic "PALMOP\0\x01"
/// 8       8     m (u64 LE)
/// 16      8     N (u64 LE)
/// 24      4     flags (u32 LE; bit 0 = rows orthonormal)
/// 28      8·m·N row-major f64 LE
/// ```
pub fn operator_to_bytes(a: &SensingOperator) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * a.rows() * a.cols());
    out.extend_from_slice(CONTAINER_MAGIC);
    out.extend_from_slice(&(a.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(a.cols() as u64).to_le_bytes());
    let flags = if a.rows_orthonormal() { FLAG_ROWS_ORTHONORMAL } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    for v in a.matrix().as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn operator_from_bytes(bytes: &[u8]) -> Result<SensingOperator> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Container(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..8] != CONTAINER_MAGIC {
        return Err(Error::Container("bad magic".into()));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (m, n) = (u64_at(8) as usize, u64_at(16) as usize);
    let flags = u32::from_le_bytes(bytes[24..28].try_into().unwrap());
    if flags & !FLAG_ROWS_ORTHONORMAL != 0 {
        return Err(Error::Container(format!("unknown flag bits {flags:#x}")));
    }
    let expected = m
        .checked_mul(n)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Container("dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Container(format!(
            "expected {expected} bytes for a {m}×{n} operator, found {}",
            bytes.len()
        )));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    SensingOperator::new(
        Mat::from_row_major(m, n, data)?,
        flags & FLAG_ROWS_ORTHONORMAL != 0,
    )
}

pub fn write_operator(path: &Path, a: &SensingOperator) -> Result<()> {
    std::fs::write(path, operator_to_bytes(a)).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_operator(path: &Path) -> Result<SensingOperator> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    operator_from_bytes(&bytes)
}
