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

//! Sparse recovery with the primal augmented Lagrangian method, plus a
//! compressive-sensing image experiment harness built around it.
//!
//! The modules stack bottom-up:
//!
//! * [`linops`] dense vectors/matrices and the [`SensingOperator`](linops::SensingOperator)
//! * [`shrinkage`] soft-thresholding
//! * [`solver`] the three-step iteration, diagnostics and KKT residuals
//! * [`sensing`] partial-DCT and Gaussian operators, bases, mutual coherence
//! * [`noise`], [`metrics`], [`imageio`] experiment substrate
//! * [`experiment`] the sense → corrupt → reconstruct → score pipeline
//! * [`cli`] the `palm-cs` command line


pub mod cli;
pub mod error;
pub mod experiment;

pub mod imageio;
pub mod linops;
pub mod metrics;
pub mod noise;
pub mod rng;
pub mod sensing;
pub mod shrinkage;
pub mod solver;

pub use error::{Error, Result};
pub use imageio::GrayImage;
pub use linops::{Mat, SensingOperator};
pub use noise::{NoiseKind, NoiseSpec};
pub use solver::{solve, KktReport, PalmParams, PalmResult, PalmState};
