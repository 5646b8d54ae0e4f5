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

//! Soft-thresholding, the proximal operator of `alpha·||·||₁`.

use crate::error::{Error, Result};

/// Elementwise soft-thresholding: `sign(z)·max(|z| − alpha, 0)`.
///
/// Coordinates inside the dead zone `|z| ≤ alpha` come out as exactly `0.0`.
pub fn shrink(z: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::param(
            "alpha",
            format!("threshold must be finite and ≥ 0, got {alpha}"),
        ));
    }
    Ok(z.iter().map(|&v| shrink_scalar(v, alpha)).collect())
}

#[inline]
pub(crate) fn shrink_scalar(z: f64, alpha: f64) -> f64 {
    if z > alpha {
        z - alpha
    } else if z < -alpha {
        z + alpha
    } else {
        0.0
    }
}

/// In-place variant used by the solver's inner loop.
#[inline]
pub(crate) fn shrink_in_place(z: &mut [f64], alpha: f64) {
    for v in z.iter_mut() {
        *v = shrink_scalar(*v, alpha);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{dist2, norm1};
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    #[test]
    fn worked_example() {
        assert_eq!(shrink(&[5.0, -5.0, 1.0], 2.0).unwrap(), vec![3.0, -3.0, 0.0]);
    }

    #[test]
    fn zero_threshold_is_identity() {
        let z = [1.5, -0.25, 0.0, 1e-300];
        assert_eq!(shrink(&z, 0.0).unwrap(), z.to_vec());
    }

    #[test]
    fn negative_threshold_rejected() {
        assert!(shrink(&[1.0], -0.1).is_err());
        assert!(shrink(&[1.0], f64::NAN).is_err());
    }

    #[test]
    fn dead_zone_gives_exact_zero() {
        let out = shrink(&[0.5, -0.5, 1.0, -1.0, 1e-320], 1.0).unwrap();
        for v in out {
            assert_eq!(v.to_bits(), 0.0f64.to_bits());
        }
    }

    // grid search over t of alpha·|t| + ½(t − z)²
    fn prox_grid(z: f64, alpha: f64) -> f64 {
        let half = 2.0 * z.abs();
        let steps = (2.0 * half / 1e-5).round() as i64;
        let mut best = (f64::INFINITY, 0.0);
        for s in 0..=steps {
            let t = -half + s as f64 * 1e-5;
            let f = alpha * t.abs() + 0.5 * (t - z) * (t - z);
            if f < best.0 {
                best = (f, t);
            }
        }
        best.1
    }

    #[test]
    fn matches_grid_search_oracle() {
        let mut rng = SeededRng::new(11);
        for _ in 0..8 {
            let z = 4.0 * rng.normal();
            for alpha in [0.1, 1.0, 3.0] {
                let got = shrink(&[z], alpha).unwrap()[0];
                let want = prox_grid(z, alpha);
                assert!((got - want).abs() <= 1e-4, "z={z} alpha={alpha}: {got} vs {want}");
            }
        }
    }

    fn objective(x: &[f64], z: &[f64], alpha: f64) -> f64 {
        alpha * norm1(x) + 0.5 * dist2(x, z).powi(2)
    }

    #[test]
    fn beats_random_perturbations() {
        let mut rng = SeededRng::new(5);
        let z: Vec<f64> = (0..6).map(|_| 2.0 * rng.normal()).collect();
        let alpha = 0.7;
        let x = shrink(&z, alpha).unwrap();
        let best = objective(&x, &z, alpha);
        for _ in 0..10_000 {
            let scale = 10f64.powf(-3.0 + 3.0 * rng.uniform());
            let p: Vec<f64> = x.iter().map(|v| v + scale * rng.normal()).collect();
            assert!(objective(&p, &z, alpha) >= best - 1e-12);
        }
    }

    proptest! {
        #[test]
        fn non_expansive(a in prop::collection::vec(-50.0f64..50.0, 1..20),
                         shift in prop::collection::vec(-5.0f64..5.0, 20),
                         alpha in 0.0f64..10.0) {
            let b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
            let sa = shrink(&a, alpha).unwrap();
            let sb = shrink(&b, alpha).unwrap();
            prop_assert!(dist2(&sa, &sb) <= dist2(&a, &b) + 1e-12);
        }

        #[test]
        fn sign_and_magnitude(z in prop::collection::vec(-50.0f64..50.0, 1..20), alpha in 0.0f64..10.0) {
            for (&zi, ri) in z.iter().zip(shrink(&z, alpha).unwrap()) {
                prop_assert!(ri.abs() <= zi.abs());
                prop_assert!(ri == 0.0 || ri.signum() == zi.signum());
                if zi.abs() <= alpha {
                    prop_assert_eq!(ri, 0.0);
                }
            }
        }
    }
}
