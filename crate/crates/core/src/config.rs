use crate::error::{Error, Result};

/// Huber threshold used when none is given.
pub const DEFAULT_DELTA: f64 = 1e-4;
/// Relative energy change below which the outer loop stops.
pub const DEFAULT_REL_ENERGY_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_OUTER_ITERS: usize = 50;
/// Relative residual `‖b − Ax‖ / ‖b‖` at which conjugate gradient stops.
pub const DEFAULT_CG_TOL: f64 = 1e-6;

/// Hyper-parameters of the alternating solver.
///
/// `lambda` (smoothness) and `mu` (multi-view consistency) have no defaults;
/// results depend strongly on `lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    /// Zero runs no iteration and returns the initialization.
    pub max_outer_iters: usize,
    pub rel_energy_tol: f64,
    /// `None` picks `10·√n` for `n` unknowns.
    pub cg_max_iters: Option<usize>,
    pub cg_tol: f64,
    /// Rescale each channel so that the largest reflectance is 1.
    pub normalize: bool,
    /// Worker threads for matrix-vector products and per-view updates.
    /// Results do not depend on this value.
    pub threads: usize,
}

impl SolverConfig {
    pub fn new(lambda: f64, mu: f64) -> Self {
        SolverConfig {
            lambda,
            mu,
            delta: DEFAULT_DELTA,
            max_outer_iters: DEFAULT_MAX_OUTER_ITERS,
            rel_energy_tol: DEFAULT_REL_ENERGY_TOL,
            cg_max_iters: None,
            cg_tol: DEFAULT_CG_TOL,
            normalize: true,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mu must be finite and >= 0, got {}",
                self.mu
            )));
        }
        for (name, v) in [
            ("delta", self.delta),
            ("rel_energy_tol", self.rel_energy_tol),
            ("cg_tol", self.cg_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.cg_max_iters == Some(0) {
            return Err(Error::InvalidArgument("cg_max_iters must be positive".into()));
        }
        if self.threads == 0 {
            return Err(Error::InvalidArgument("threads must be positive".into()));
        }
        Ok(())
    }

    /// Conjugate-gradient iteration cap for a system with `unknowns` rows.
    pub fn cg_iteration_limit(&self, unknowns: usize) -> usize {
        self.cg_max_iters
            .unwrap_or_else(|| ((10.0 * (unknowns as f64).sqrt()).ceil() as usize).max(1))
    }
}
