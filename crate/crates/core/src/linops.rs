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

//! Dense real linear algebra and the sensing-operator abstraction.
//!
//! Vectors are plain `[f64]` slices. Matrices are dense and row-major.

use crate::error::{check_len, Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("Mat::from_row_major", rows * cols, data.len())?;
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(
                "matrix",
                format!("non-finite entry at flat index {pos}"),
            ));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        check_len("Mat::matmul", self.cols, other.rows)?;
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, other.row(k), dst);
                }
            }
        }
        Ok(out)
    }

    /// `self · selfᵀ`, the Gram matrix of the rows.
    pub fn row_gram(&self) -> Mat {
        let mut g = Mat::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in i..self.rows {
                let v = dot_unchecked(self.row(i), self.row(j));
                g.data[i * self.rows + j] = v;
                g.data[j * self.rows + i] = v;
            }
        }
        g
    }

    /// Largest absolute entry of `self − I`. Requires a square matrix.
    pub fn max_deviation_from_identity(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.get(i, j) - target).abs());
            }
        }
        worst
    }
}

/// Tolerance used to validate the orthonormal-rows flag.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// The measurement matrix `A` (m × N, m ≤ N) with forward and adjoint application.
#[derive(Debug, Clone)]
pub struct SensingOperator {
    matrix: Mat,
    // columns of A, contiguous; lets A·v skip zero entries of v
    transposed: Mat,
    rows_orthonormal: bool,
}

impl PartialEq for SensingOperator {
    fn eq(&self, other: &Self) -> bool {
        self.rows_orthonormal == other.rows_orthonormal && self.matrix == other.matrix
    }
}

impl SensingOperator {
    /// Wraps `matrix`, verifying the underdetermined shape and, if claimed,
    /// that `A·Aᵀ = I` to [`ORTHONORMAL_TOL`].
    pub fn new(matrix: Mat, rows_orthonormal: bool) -> Result<Self> {
        if matrix.rows == 0 || matrix.cols == 0 {
            return Err(Error::param("matrix", "operator must be non-empty"));
        }
        if matrix.rows > matrix.cols {
            return Err(Error::param(
                "matrix",
                format!(
                    "operator must be underdetermined (m ≤ N), got {}×{}",
                    matrix.rows, matrix.cols
                ),
            ));
        }
        if rows_orthonormal {
            let dev = matrix.row_gram().max_deviation_from_identity();
            if dev > ORTHONORMAL_TOL {
                return Err(Error::param(
                    "rows_orthonormal",
                    format!("|A·Aᵀ − I|max = {dev:e} exceeds {ORTHONORMAL_TOL:e}"),
                ));
            }
        }
        Ok(SensingOperator::new_trusted(matrix, rows_orthonormal))
    }

    /// Wraps a matrix without the orthonormality check. The caller guarantees it.
    pub(crate) fn new_trusted(matrix: Mat, rows_orthonormal: bool) -> Self {
        debug_assert!(matrix.rows <= matrix.cols);
        SensingOperator {
            transposed: matrix.transpose(),
            matrix,
            rows_orthonormal,
        }
    }

    pub fn identity(n: usize) -> Self {
        SensingOperator::new_trusted(Mat::identity(n), true)
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols
    }

    pub fn rows_orthonormal(&self) -> bool {
        self.rows_orthonormal
    }

    /// `out = A·v` without length checks beyond debug assertions.
    pub(crate) fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols());
        debug_assert_eq!(out.len(), self.rows());
        out.fill(0.0);
        accumulate_rows(&self.transposed, v, out);
    }

    /// `out = Aᵀ·w` without length checks beyond debug assertions.
    pub(crate) fn apply_adjoint_into(&self, w: &[f64], out: &mut [f64]) {
        debug_assert_eq!(w.len(), self.rows());
        debug_assert_eq!(out.len(), self.cols());
        out.fill(0.0);
        accumulate_rows(&self.matrix, w, out);
    }
}

/// `out += Σ_i coeffs_i · m.row(i)`, skipping zero coefficients. Rows are
/// consumed four at a time so `out` is streamed once per group.
fn accumulate_rows(m: &Mat, coeffs: &[f64], out: &mut [f64]) {
    let mut pending = [(0.0, 0usize); 4];
    let mut fill = 0;
    for (i, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        pending[fill] = (c, i);
        fill += 1;
        if fill == 4 {
            let [(c0, r0), (c1, r1), (c2, r2), (c3, r3)] = pending;
            let (a0, a1, a2, a3) = (m.row(r0), m.row(r1), m.row(r2), m.row(r3));
            for (j, o) in out.iter_mut().enumerate() {
                *o += c0 * a0[j] + c1 * a1[j] + c2 * a2[j] + c3 * a3[j];
            }
            fill = 0;
        }
    }
    for &(c, i) in &pending[..fill] {
        axpy(c, m.row(i), out);
    }
}

/// `A·v`.
pub fn matvec(a: &SensingOperator, v: &[f64]) -> Result<Vec<f64>> {
    check_len("matvec", a.cols(), v.len())?;
    let mut out = vec![0.0; a.rows()];
    a.apply_into(v, &mut out);
    Ok(out)
}

/// `Aᵀ·w`.
pub fn adjoint_matvec(a: &SensingOperator, w: &[f64]) -> Result<Vec<f64>> {
    check_len("adjoint_matvec", a.rows(), w.len())?;
    let mut out = vec![0.0; a.cols()];
    a.apply_adjoint_into(w, &mut out);
    Ok(out)
}

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len("dot", a.len(), b.len())?;
    Ok(dot_unchecked(a, b))
}

#[inline]
pub(crate) fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // independent partial sums let the reduction vectorize
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha·x`.
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot_unchecked(v, v).sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Euclidean distance between two equal-length slices.
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    fn random_op(m: usize, n: usize, seed: u64) -> SensingOperator {
        let mut rng = SeededRng::new(seed);
        let data = (0..m * n).map(|_| rng.normal()).collect();
        SensingOperator::new(Mat::from_row_major(m, n, data).unwrap(), false).unwrap()
    }

    fn naive_matvec(a: &Mat, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.rows()];
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                out[i] += a.as_slice()[i * a.cols() + j] * v[j];
            }
        }
        out
    }

    #[test]
    fn identity_matvec() {
        let a = SensingOperator::identity(2);
        assert_eq!(matvec(&a, &[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);
        assert_eq!(adjoint_matvec(&a, &[0.5, 7.0]).unwrap(), vec![0.5, 7.0]);
    }

    #[test]
    fn single_row_cases() {
        let ones = SensingOperator::new(Mat::from_row_major(1, 3, vec![1.0; 3]).unwrap(), false)
            .unwrap();
        assert_eq!(matvec(&ones, &[1.0, 2.0, 3.0]).unwrap(), vec![6.0]);
        let row = SensingOperator::new(Mat::from_row_major(1, 2, vec![2.0, 0.0]).unwrap(), false)
            .unwrap();
        assert_eq!(adjoint_matvec(&row, &[5.0]).unwrap(), vec![10.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = SensingOperator::identity(3);
        match matvec(&a, &[1.0, 2.0]) {
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 2,
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(adjoint_matvec(&a, &[1.0]).is_err());
        assert!(dot(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rejects_overdetermined_and_false_orthonormal_claims() {
        let tall = Mat::from_row_major(3, 2, vec![0.0; 6]).unwrap();
        assert!(SensingOperator::new(tall, false).is_err());
        let not_orth = Mat::from_row_major(1, 2, vec![1.0, 1.0]).unwrap();
        assert!(SensingOperator::new(not_orth, true).is_err());
        assert!(Mat::from_row_major(1, 2, vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn matvec_matches_triple_loop() {
        for (seed, (m, n)) in [(4, 8), (17, 33), (64, 128)].into_iter().enumerate() {
            let a = random_op(m, n, seed as u64);
            let mut rng = SeededRng::new(100 + seed as u64);
            let v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let fast = matvec(&a, &v).unwrap();
            let slow = naive_matvec(a.matrix(), &v);
            for (f, s) in fast.iter().zip(&slow) {
                assert!((f - s).abs() <= 1e-12 * (1.0 + s.abs()), "{f} vs {s}");
            }
        }
    }

    #[test]
    fn norms_basic() {
        assert_eq!(norm1(&[-1.0, 2.0, -3.0]), 6.0);
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        assert_eq!(norm_inf(&[1.0, -7.5, 2.0]), 7.5);
    }

    #[test]
    fn norm_axioms_on_random_pairs() {
        let mut rng = SeededRng::new(7);
        let norms: [fn(&[f64]) -> f64; 3] = [norm1, norm2, norm_inf];
        for _ in 0..1000 {
            let len = 1 + (rng.next_u64() % 16) as usize;
            let u: Vec<f64> = (0..len).map(|_| rng.normal()).collect();
            let v: Vec<f64> = (0..len).map(|_| rng.normal()).collect();
            let t = 4.0 * rng.normal();
            let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            let scaled: Vec<f64> = u.iter().map(|a| t * a).collect();
            for norm in norms {
                assert_eq!(norm(&vec![0.0; len]), 0.0);
                assert!(norm(&u) > 0.0);
                assert!((norm(&scaled) - t.abs() * norm(&u)).abs() <= 1e-12 * (1.0 + norm(&scaled)));
                assert!(norm(&sum) <= norm(&u) + norm(&v) + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn adjoint_identity(seed in any::<u64>(), m in 1usize..12, extra in 0usize..12) {
            let n = m + extra;
            let a = random_op(m, n, seed);
            let mut rng = SeededRng::new(seed ^ 0xdead_beef);
            let v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let w: Vec<f64> = (0..m).map(|_| rng.normal()).collect();
            let lhs = dot(&matvec(&a, &v).unwrap(), &w).unwrap();
            let rhs = dot(&v, &adjoint_matvec(&a, &w).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }
    }
}
