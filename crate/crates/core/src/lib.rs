//! Reflectance and lighting estimation from multi-view images with known
//! geometry.
//!
//! Each view `i` observes `I_i(p) = ρ_i(p) σ_i·ν_i(p)`, where `ν_i(p)` is the
//! second-order spherical-harmonics lifting of the surface normal seen at
//! pixel `p`, `ρ_i` the reflectance map and `σ_i` the view's lighting
//! vector. [`solver::solve`] minimizes a Huber-relaxed energy with
//! smoothness and cross-view consistency terms by alternating
//! majorization-minimization. [`synth`] generates scenes with exact ground
//! truth, [`baseline`] holds the surface-domain SVD factorization and [`io`]
//! the on-disk dataset format used by the `refmaps` binary.

pub mod baseline;
pub mod config;
pub mod domain;
pub mod energy;
pub mod error;
pub mod evaluate;
pub mod io;
mod linalg;
pub mod shading;
pub mod solver;
pub mod synth;
pub mod validate;

pub use config::SolverConfig;
pub use domain::{
    Correspondence, CorrespondenceSet, Estimate, GeometricField, LightingVector, MultiViewProblem,
    NormalField, Pixel, PixelDomain, ScalarField, View,
};
pub use energy::{eval_energy, huber, huber_majorant, EnergyBreakdown};
pub use error::{Error, Result};
pub use shading::{lift_field, lift_normal};
pub use solver::{solve, Solution};
pub use validate::{validate_problem, Violation};
