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

//! Primal augmented Lagrangian solver for
//!
//! ```text
//! min_{x,r} ||x||₁ + (1/2μ)||r||²   subject to   A·x + r = b
//! ```
//!
//! Each iteration minimizes the augmented Lagrangian
//! `L(x, r, y) = ||x||₁ + (1/2μ)||r||² − yᵀ(Ax + r − b) + (β/2)||Ax + r − b||²`
//! exactly in `r`, takes a linearized proximal (soft-thresholding) step in `x`,
//! then moves the multiplier `y` by a damped ascent step.

use std::io::Write;

use crate::error::{check_len, Error, Result};
use crate::linops::{all_finite, dist2, dot_unchecked, norm1, norm2, norm_inf, SensingOperator};
use crate::sensing::spectral_norm_estimate;
use crate::shrinkage::{shrink, shrink_in_place};

/// Power iterations used for the step-size sanity check on general operators.
const STEP_CHECK_ITERATIONS: usize = 50;

/// Solver configuration.
///
/// `mu` and `beta` may be left as `None`, in which case they are scaled to the
/// measurement vector: `mu = 1e-3·||b||∞` and `beta = m/||b||₁` (both fall back
/// to `1.0` when `b = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct PalmParams {
    /// Weight of the residual term, `(1/2μ)||r||²`.
    pub mu: Option<f64>,
    /// Penalty parameter of the augmented term.
    pub beta: Option<f64>,
    /// Proximal step of the linearized x-update. Needs `tau·σmax(A)² ≤ 1`.
    pub tau: f64,
    /// Multiplier step factor, in `(0, 2)`.
    pub gamma: f64,
    pub max_iter: usize,
    pub tol_feasibility: f64,
    pub tol_x_change: f64,
}

impl Default for PalmParams {
    fn default() -> Self {
        PalmParams {
            mu: None,
            beta: None,
            tau: 1.0,
            gamma: 1.0,
            max_iter: 5000,
            tol_feasibility: 1e-6,
            tol_x_change: 1e-6,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {v}")))
    }
}

impl PalmParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(mu) = self.mu {
            positive("mu", mu)?;
        }
        if let Some(beta) = self.beta {
            positive("beta", beta)?;
        }
        positive("tau", self.tau)?;
        positive("gamma", self.gamma)?;
        if self.gamma >= 2.0 {
            return Err(Error::param("gamma", format!("must be < 2, got {}", self.gamma)));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be ≥ 1"));
        }
        for (name, tol) in [
            ("tol_feasibility", self.tol_feasibility),
            ("tol_x_change", self.tol_x_change),
        ] {
            if !tol.is_finite() || tol < 0.0 {
                return Err(Error::param(name, format!("must be finite and ≥ 0, got {tol}")));
            }
        }
        Ok(())
    }

    /// The `mu` actually used for measurements `b`.
    pub fn resolved_mu(&self, b: &[f64]) -> f64 {
        self.mu.unwrap_or_else(|| {
            let peak = norm_inf(b);
            if peak > 0.0 {
                1e-3 * peak
            } else {
                1.0
            }
        })
    }

    /// The `beta` actually used for measurements `b`.
    pub fn resolved_beta(&self, b: &[f64]) -> f64 {
        self.beta.unwrap_or_else(|| {
            let mass = norm1(b);
            if mass > 0.0 {
                b.len() as f64 / mass
            } else {
                1.0
            }
        })
    }
}

/// Iterates `(x, r, y)` after `k` completed iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct PalmState {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub y: Vec<f64>,
    pub k: usize,
}

impl PalmState {
    /// Cold start: `x = 0`, `r = 0`, `y = 0`.
    pub fn zeros(m: usize, n: usize) -> Self {
        PalmState {
            x: vec![0.0; n],
            r: vec![0.0; m],
            y: vec![0.0; m],
            k: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PalmResult {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub y: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `||A·x + r − b||₂` after each iteration.
    pub feasibility_history: Vec<f64>,
    /// `||x||₁ + (1/2μ)||r||²` after each iteration.
    pub objective_history: Vec<f64>,
    /// The resolved `mu` and `beta` used by this solve.
    pub mu: f64,
    pub beta: f64,
}

impl PalmResult {
    /// Final iterate packaged for a warm restart.
    pub fn state(&self) -> PalmState {
        PalmState {
            x: self.x.clone(),
            r: self.r.clone(),
            y: self.y.clone(),
            k: self.iterations,
        }
    }
}

fn check_dims(a: &SensingOperator, b: &[f64], x: &[f64], r: &[f64], y: &[f64]) -> Result<()> {
    check_len("b", a.rows(), b.len())?;
    check_len("x", a.cols(), x.len())?;
    check_len("r", a.rows(), r.len())?;
    check_len("y", a.rows(), y.len())
}

/// Value of the augmented Lagrangian at `(x, r, y)`.
pub fn augmented_lagrangian(
    a: &SensingOperator,
    b: &[f64],
    x: &[f64],
    r: &[f64],
    y: &[f64],
    mu: f64,
    beta: f64,
) -> Result<f64> {
    check_dims(a, b, x, r, y)?;
    let mut c = vec![0.0; a.rows()];
    a.apply_into(x, &mut c);
    for ((ci, ri), bi) in c.iter_mut().zip(r).zip(b) {
        *ci += ri - bi;
    }
    Ok(norm1(x) + dot_unchecked(r, r) / (2.0 * mu) - dot_unchecked(y, &c)
        + 0.5 * beta * dot_unchecked(&c, &c))
}

/// Exact minimizer of the Lagrangian in `r` with `x` and `y` held fixed:
/// `r = (μβ/(1+μβ))·(y/β − (A·x − b))`.
pub fn update_r(
    a: &SensingOperator,
    b: &[f64],
    x: &[f64],
    y: &[f64],
    mu: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    check_len("b", a.rows(), b.len())?;
    check_len("x", a.cols(), x.len())?;
    check_len("y", a.rows(), y.len())?;
    let mut ax = vec![0.0; a.rows()];
    a.apply_into(x, &mut ax);
    let mut r = vec![0.0; a.rows()];
    r_from_ax(&ax, b, y, mu, beta, &mut r);
    Ok(r)
}

#[inline]
fn r_from_ax(ax: &[f64], b: &[f64], y: &[f64], mu: f64, beta: f64, r: &mut [f64]) {
    let factor = mu * beta / (1.0 + mu * beta);
    for i in 0..r.len() {
        r[i] = factor * (y[i] / beta - (ax[i] - b[i]));
    }
}

/// Gradient, divided by `beta`, of `(β/2)||A·x + r − b − y/β||²` at `x`:
/// `g = Aᵀ(A·x + r − b − y/β)`.
pub fn gradient_g(
    a: &SensingOperator,
    b: &[f64],
    x: &[f64],
    r_next: &[f64],
    y: &[f64],
    beta: f64,
) -> Result<Vec<f64>> {
    check_dims(a, b, x, r_next, y)?;
    let mut ax = vec![0.0; a.rows()];
    a.apply_into(x, &mut ax);
    let mut resid = vec![0.0; a.rows()];
    let mut g = vec![0.0; a.cols()];
    gradient_from_ax(a, &ax, b, r_next, y, beta, &mut resid, &mut g);
    Ok(g)
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn gradient_from_ax(
    a: &SensingOperator,
    ax: &[f64],
    b: &[f64],
    r: &[f64],
    y: &[f64],
    beta: f64,
    scratch: &mut [f64],
    g: &mut [f64],
) {
    for i in 0..scratch.len() {
        scratch[i] = ax[i] + r[i] - b[i] - y[i] / beta;
    }
    a.apply_adjoint_into(scratch, g);
}

/// Linearized proximal step: `shrink(x − τ·g, τ/β)`.
pub fn update_x(x: &[f64], g: &[f64], tau: f64, beta: f64) -> Result<Vec<f64>> {
    check_len("g", x.len(), g.len())?;
    positive("tau", tau)?;
    positive("beta", beta)?;
    let z: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - tau * gi).collect();
    shrink(&z, tau / beta)
}

/// Multiplier step: `y − γβ·(A·x + r − b)`.
#[allow(clippy::too_many_arguments)]
pub fn update_y(
    y: &[f64],
    a: &SensingOperator,
    x_next: &[f64],
    r_next: &[f64],
    b: &[f64],
    gamma: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    check_dims(a, b, x_next, r_next, y)?;
    let mut c = vec![0.0; a.rows()];
    a.apply_into(x_next, &mut c);
    Ok(y.iter()
        .zip(&c)
        .zip(r_next.iter().zip(b))
        .map(|((yi, ci), (ri, bi))| yi - gamma * beta * (ci + ri - bi))
        .collect())
}

/// Returns `Some(σmax²·τ)` when a general (non-orthonormal) operator violates
/// the proximal step condition `τ·σmax(A)² ≤ 1`.
pub fn step_size_violation(a: &SensingOperator, tau: f64) -> Option<f64> {
    if a.rows_orthonormal() {
        return None;
    }
    let sigma = spectral_norm_estimate(a, STEP_CHECK_ITERATIONS);
    let product = tau * sigma * sigma;
    (product > 1.0).then_some(product)
}

/// Runs the solver from `x0` (zero if absent) with `y = 0`.
pub fn solve(
    a: &SensingOperator,
    b: &[f64],
    params: &PalmParams,
    x0: Option<&[f64]>,
) -> Result<PalmResult> {
    let mut start = PalmState::zeros(a.rows(), a.cols());
    if let Some(x0) = x0 {
        check_len("x0", a.cols(), x0.len())?;
        start.x.copy_from_slice(x0);
    }
    solve_from(a, b, params, start, None)
}

/// Runs the solver from an explicit state, optionally writing one trace
/// record per iteration to `trace`:
///
/// ```text
/// {iteration:>8} {objective:>22.12e} {feasibility:>22.12e}
/// ```
pub fn solve_from(
    a: &SensingOperator,
    b: &[f64],
    params: &PalmParams,
    start: PalmState,
    mut trace: Option<&mut dyn Write>,
) -> Result<PalmResult> {
    params.validate()?;
    let PalmState { mut x, mut r, mut y, k: k0 } = start;
    check_dims(a, b, &x, &r, &y)?;
    if !all_finite(b) || !all_finite(&x) || !all_finite(&y) {
        return Err(Error::param("input", "b, x0 and y0 must be finite"));
    }
    let mu = params.resolved_mu(b);
    let beta = params.resolved_beta(b);
    let (tau, gamma) = (params.tau, params.gamma);
    if let Some(product) = step_size_violation(a, tau) {
        log::warn!(
            "tau·σmax(A)² = {product:.4} > 1; the linearized x-step may not converge"
        );
    }

    let (m, n) = (a.rows(), a.cols());
    let b_scale = norm2(b).max(1.0);
    let mut ax = vec![0.0; m];
    let mut ax_next = vec![0.0; m];
    let mut scratch = vec![0.0; m];
    let mut g = vec![0.0; n];
    let mut x_next = vec![0.0; n];
    a.apply_into(&x, &mut ax);

    let mut feasibility_history = Vec::new();
    let mut objective_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..params.max_iter {
        let iteration = k0 + it + 1;

        r_from_ax(&ax, b, &y, mu, beta, &mut r);
        if !all_finite(&r) {
            return Err(Error::Divergence { iteration, update: "r" });
        }

        gradient_from_ax(a, &ax, b, &r, &y, beta, &mut scratch, &mut g);
        for j in 0..n {
            x_next[j] = x[j] - tau * g[j];
        }
        shrink_in_place(&mut x_next, tau / beta);
        if !all_finite(&x_next) {
            return Err(Error::Divergence { iteration, update: "x" });
        }

        a.apply_into(&x_next, &mut ax_next);
        for i in 0..m {
            scratch[i] = ax_next[i] + r[i] - b[i];
            y[i] -= gamma * beta * scratch[i];
        }
        if !all_finite(&y) {
            return Err(Error::Divergence { iteration, update: "y" });
        }

        let feasibility = norm2(&scratch);
        let objective = norm1(&x_next) + dot_unchecked(&r, &r) / (2.0 * mu);
        feasibility_history.push(feasibility);
        objective_history.push(objective);
        if let Some(sink) = trace.as_mut() {
            // a failing trace sink must not abort the solve
            let _ = writeln!(sink, "{iteration:>8} {objective:>22.12e} {feasibility:>22.12e}");
        }

        let dx = dist2(&x_next, &x);
        let x_scale = norm2(&x).max(1.0);
        std::mem::swap(&mut x, &mut x_next);
        std::mem::swap(&mut ax, &mut ax_next);
        iterations = it + 1;

        if feasibility <= params.tol_feasibility * b_scale && dx <= params.tol_x_change * x_scale
        {
            converged = true;
            break;
        }
    }

    Ok(PalmResult {
        x,
        r,
        y,
        iterations,
        converged,
        feasibility_history,
        objective_history,
        mu,
        beta,
    })
}

/// First-order optimality residuals of a solution.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktReport {
    /// `max(0, ||Aᵀy||∞ − 1)`.
    pub dual_feasibility: f64,
    /// `max_{j: x_j ≠ 0} |(Aᵀy)_j − sign(x_j)|`.
    pub complementarity: f64,
    /// `||A·x + r − b||₂`.
    pub primal_feasibility: f64,
    /// `||y − r/μ||∞`.
    pub multiplier_consistency: f64,
}

impl KktReport {
    pub fn max_violation(&self) -> f64 {
        self.dual_feasibility
            .max(self.complementarity)
            .max(self.primal_feasibility)
            .max(self.multiplier_consistency)
    }
}

pub fn kkt_report(
    a: &SensingOperator,
    b: &[f64],
    result: &PalmResult,
    mu: f64,
) -> Result<KktReport> {
    check_dims(a, b, &result.x, &result.r, &result.y)?;
    positive("mu", mu)?;
    let mut aty = vec![0.0; a.cols()];
    a.apply_adjoint_into(&result.y, &mut aty);
    let dual_feasibility = (norm_inf(&aty) - 1.0).max(0.0);
    let complementarity = result
        .x
        .iter()
        .zip(&aty)
        .filter(|(xj, _)| **xj != 0.0)
        .map(|(xj, gj)| (gj - xj.signum()).abs())
        .fold(0.0, f64::max);
    let mut c = vec![0.0; a.rows()];
    a.apply_into(&result.x, &mut c);
    for ((ci, ri), bi) in c.iter_mut().zip(&result.r).zip(b) {
        *ci += ri - bi;
    }
    let multiplier_consistency = result
        .y
        .iter()
        .zip(&result.r)
        .map(|(yi, ri)| (yi - ri / mu).abs())
        .fold(0.0, f64::max);
    Ok(KktReport {
        dual_feasibility,
        complementarity,
        primal_feasibility: norm2(&c),
        multiplier_consistency,
    })
}
