//! Alternating majorization-minimization of the relaxed energy.
//!
//! Starting from the diffuse initialization (`ρ = I`, `σ = [0,0,0,1,0,…]`),
//! each outer iteration minimizes the quadratic majorant in `ρ` (all views
//! jointly, by conjugate gradient) and then in `σ` (per view, by
//! pseudo-inverse). Both steps are non-increasing for the true energy.

mod cg;
mod rho;
mod sigma;
mod trace;

use std::time::Instant;

pub use cg::{pcg, CgOutcome, CsrMatrix};
pub use rho::{update_rho, RhoSystem, RhoUpdate};
pub use sigma::{fit_view, update_sigma, SigmaFit, RANK_TOLERANCE};
pub use trace::{SolverTrace, TraceRecord, CSV_HEADER};

use crate::config::SolverConfig;
use crate::domain::{Estimate, LightingVector, MultiViewProblem, ScalarField};
use crate::energy::eval_energy;
use crate::error::{Error, Result};
use crate::validate::validate_problem;

/// Diffuse initialization of a graylevel problem: reflectance equals the
/// image and lighting is purely ambient, so every photometric residual is 0.
pub fn init_trivial(problem: &MultiViewProblem) -> Result<Estimate> {
    problem.require_graylevel()?;
    Ok(Estimate {
        reflectance: (0..problem.view_count())
            .map(|v| problem.image(v, 0).clone())
            .collect(),
        lighting: vec![LightingVector::DIFFUSE; problem.view_count()],
    })
}

/// Estimate and convergence history of one channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSolution {
    pub reflectance: Vec<ScalarField>,
    pub lighting: Vec<LightingVector>,
    pub trace: SolverTrace,
    /// Stopped by the relative-energy criterion.
    pub converged: bool,
    /// Factor that normalization divided the reflectance by (1 if none).
    pub normalization: f64,
}

impl ChannelSolution {
    pub fn estimate(&self) -> Estimate {
        Estimate {
            reflectance: self.reflectance.clone(),
            lighting: self.lighting.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub channels: Vec<ChannelSolution>,
}

impl Solution {
    pub fn reflectance(&self, view: usize, channel: usize) -> &ScalarField {
        &self.channels[channel].reflectance[view]
    }

    pub fn lighting(&self, view: usize, channel: usize) -> &LightingVector {
        &self.channels[channel].lighting[view]
    }

    /// Every channel stopped by the relative-energy criterion.
    pub fn converged(&self) -> bool {
        self.channels.iter().all(|c| c.converged)
    }
}

/// Solves every channel of `problem`.
pub fn solve(problem: &MultiViewProblem, cfg: &SolverConfig) -> Result<Solution> {
    solve_with_observer(problem, cfg, |_, _| {})
}

/// Like [`solve`], calling `observer(channel, record)` after the
/// initialization and after each outer iteration.
pub fn solve_with_observer(
    problem: &MultiViewProblem,
    cfg: &SolverConfig,
    mut observer: impl FnMut(usize, &TraceRecord),
) -> Result<Solution> {
    cfg.validate()?;
    let violations = validate_problem(problem);
    if !violations.is_empty() {
        return Err(Error::InvalidProblem(violations));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker threads: {e}")))?;
    let mut channels = Vec::with_capacity(problem.channels());
    for c in 0..problem.channels() {
        let gray = problem.channel(c)?;
        channels.push(solve_graylevel(&gray, cfg, &pool, |r| observer(c, r))?);
    }
    Ok(Solution { channels })
}

/// The outer loop on a validated graylevel problem.
fn solve_graylevel(
    problem: &MultiViewProblem,
    cfg: &SolverConfig,
    pool: &rayon::ThreadPool,
    mut observer: impl FnMut(&TraceRecord),
) -> Result<ChannelSolution> {
    let start = Instant::now();
    let mut state = init_trivial(problem)?;
    let mut energy = eval_energy(&state, problem, cfg)?;
    let mut trace = SolverTrace::default();
    let first = TraceRecord {
        iteration: 0,
        energy,
        rel_change: f64::NAN,
        cg_iterations: 0,
        wall_time: start.elapsed().as_secs_f64(),
        rank_deficient_views: Vec::new(),
    };
    observer(&first);
    trace.records.push(first);

    let mut converged = false;
    for k in 1..=cfg.max_outer_iters {
        let (rho, fits) = pool.install(|| -> Result<_> {
            let rho = update_rho(&state.reflectance, &state.lighting, problem, cfg)?;
            let fits = update_sigma(&rho.reflectance, &state.lighting, problem, cfg)?;
            Ok((rho, fits))
        })?;
        state = Estimate {
            reflectance: rho.reflectance,
            lighting: fits.iter().map(|f| f.lighting).collect(),
        };
        let next = eval_energy(&state, problem, cfg)?;
        if !next.total.is_finite() {
            return Err(Error::NumericalFailure {
                iterations: k,
                context: "energy became non-finite".into(),
            });
        }
        let rel_change = if energy.total == 0.0 {
            0.0
        } else {
            (next.total - energy.total).abs() / energy.total
        };
        energy = next;
        let record = TraceRecord {
            iteration: k,
            energy,
            rel_change,
            cg_iterations: rho.cg.iterations,
            wall_time: start.elapsed().as_secs_f64(),
            rank_deficient_views: fits
                .iter()
                .enumerate()
                .filter_map(|(v, f)| f.rank_deficient().then_some(v))
                .collect(),
        };
        observer(&record);
        trace.records.push(record);
        if rel_change < cfg.rel_energy_tol {
            converged = true;
            break;
        }
    }

    // Without an iteration the output is the initialization itself.
    let normalization = if cfg.normalize && trace.records.len() > 1 {
        normalize(&mut state)
    } else {
        1.0
    };
    Ok(ChannelSolution {
        reflectance: state.reflectance,
        lighting: state.lighting,
        trace,
        converged,
        normalization,
    })
}

/// Rescales so the largest reflectance over all views is 1, compensating in
/// the lighting. Returns the divisor; leaves the state alone if the maximum
/// is not positive.
fn normalize(state: &mut Estimate) -> f64 {
    let m = state
        .reflectance
        .iter()
        .map(ScalarField::max_masked)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(m > 0.0 && m.is_finite()) {
        return 1.0;
    }
    for r in &mut state.reflectance {
        *r = r.scaled(1.0 / m);
    }
    for l in &mut state.lighting {
        *l = l.scaled(m);
    }
    m
}
