//! The reflectance update: one sparse quadratic over all views.
//!
//! Replacing every Huber term by its majorant around the anchor maps gives
//! `½ xᵀA x − bᵀx + const`, where `x` stacks the masked-in reflectances of
//! all views. `A` gathers the IRLS weights:
//!
//! * photometric: `A_pp += w s²`, `b_p += w s I` with `s = σ·ν(p)`;
//! * smoothness and consistency: `λw` (resp. `μw`) on the edge Laplacian.

use crate::config::SolverConfig;
use crate::domain::{check_lighting, check_maps, LightingVector, MultiViewProblem, ScalarField};
use crate::energy::{irls_weight, photometric_residual};
use crate::error::{Error, Result};

use super::cg::{pcg, CgOutcome, CsrMatrix};

/// Assembled normal equations of the reflectance majorant.
#[derive(Clone, Debug)]
pub struct RhoSystem {
    /// Start of each view's block in the stacked unknown vector.
    offsets: Vec<usize>,
    /// For every view, the unknown index of each pixel (masked-out: `None`).
    slots: Vec<Vec<Option<usize>>>,
    matrix: CsrMatrix,
    rhs: Vec<f64>,
}

impl RhoSystem {
    /// Builds the system around `anchor` with lighting `sigma` fixed.
    pub fn assemble(
        anchor: &[ScalarField],
        sigma: &[LightingVector],
        problem: &MultiViewProblem,
        cfg: &SolverConfig,
    ) -> Result<RhoSystem> {
        problem.require_graylevel()?;
        check_maps(anchor, problem, "anchor reflectance")?;
        check_lighting(sigma, problem)?;
        let delta = cfg.delta;

        let mut offsets = Vec::with_capacity(problem.view_count());
        let mut slots = Vec::with_capacity(problem.view_count());
        let mut n = 0;
        for v in 0..problem.view_count() {
            offsets.push(n);
            let d = problem.domain(v);
            let mut s = vec![None; d.len()];
            for i in d.masked_indices() {
                s[i] = Some(n);
                n += 1;
            }
            slots.push(s);
        }

        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut rhs = vec![0.0; n];
        let edge = |rows: &mut Vec<Vec<(usize, f64)>>, a: usize, b: usize, w: f64| {
            rows[a].push((a, w));
            rows[b].push((b, w));
            rows[a].push((b, -w));
            rows[b].push((a, -w));
        };

        for v in 0..problem.view_count() {
            let d = problem.domain(v);
            let map = &anchor[v];
            for i in d.masked_indices() {
                let k = slots[v][i].unwrap();
                let s = sigma[v].shade(problem.geometry(v).at(i));
                let w = irls_weight(photometric_residual(problem, v, i, map.at(i), &sigma[v]), delta);
                rows[k].push((k, w * s * s));
                rhs[k] += w * s * problem.image(v, 0).at(i);
            }
            if cfg.lambda > 0.0 {
                for i in d.masked_indices() {
                    let k = slots[v][i].unwrap();
                    for nb in [d.right_of(i), d.below(i)].into_iter().flatten() {
                        let w = cfg.lambda * irls_weight(map.at(nb) - map.at(i), delta);
                        edge(&mut rows, k, slots[v][nb].unwrap(), w);
                    }
                }
            }
        }
        if cfg.mu > 0.0 {
            for e in problem.correspondences().entries() {
                let ia = problem.domain(e.view_i).index(e.pixel_i);
                let ib = problem.domain(e.view_j).index(e.pixel_j);
                let (Some(ka), Some(kb)) = (slots[e.view_i][ia], slots[e.view_j][ib]) else {
                    return Err(Error::InvalidArgument(format!(
                        "correspondence {e} references a masked-out pixel"
                    )));
                };
                let w = cfg.mu * irls_weight(anchor[e.view_i].at(ia) - anchor[e.view_j].at(ib), delta);
                edge(&mut rows, ka, kb, w);
            }
        }

        Ok(RhoSystem {
            offsets,
            slots,
            matrix: CsrMatrix::from_rows(rows),
            rhs,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.rhs.len()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Stacks the masked-in values of `maps`, view after view.
    pub fn pack(&self, maps: &[ScalarField]) -> Vec<f64> {
        let mut x = vec![0.0; self.unknowns()];
        for (v, map) in maps.iter().enumerate() {
            for (i, slot) in self.slots[v].iter().enumerate() {
                if let Some(k) = slot {
                    x[*k] = map.at(i);
                }
            }
        }
        x
    }

    /// Inverse of [`RhoSystem::pack`], using `template` for the domains.
    pub fn unpack(&self, x: &[f64], template: &[ScalarField]) -> Vec<ScalarField> {
        template
            .iter()
            .enumerate()
            .map(|(v, t)| {
                let values = self.slots[v]
                    .iter()
                    .map(|s| s.map_or(0.0, |k| x[k]))
                    .collect();
                ScalarField::new(t.domain().clone(), values).expect("domain length is preserved")
            })
            .collect()
    }

    /// `A x − b`, the gradient of the majorant at `x`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.matrix.mul_vec(x, &mut g);
        for (gi, bi) in g.iter_mut().zip(&self.rhs) {
            *gi -= bi;
        }
        g
    }

    /// `½ xᵀA x − bᵀx`: the majorant up to an additive constant.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        self.matrix.mul_vec(x, &mut ax);
        let mut s = 0.0;
        for k in 0..x.len() {
            s += x[k] * (0.5 * ax[k] - self.rhs[k]);
        }
        s
    }

    /// Index of the first unknown of `view`.
    pub fn offset(&self, view: usize) -> usize {
        self.offsets[view]
    }
}

/// Result of one reflectance update.
#[derive(Clone, Debug)]
pub struct RhoUpdate {
    pub reflectance: Vec<ScalarField>,
    pub cg: CgOutcome,
}

/// Minimizes the reflectance majorant around `anchor`. CG is warm-started at
/// the anchor; if rounding ever makes the quadratic larger than at the
/// anchor, the anchor is kept.
pub fn update_rho(
    anchor: &[ScalarField],
    sigma: &[LightingVector],
    problem: &MultiViewProblem,
    cfg: &SolverConfig,
) -> Result<RhoUpdate> {
    let sys = RhoSystem::assemble(anchor, sigma, problem, cfg)?;
    let x0 = sys.pack(anchor);
    let mut x = x0.clone();
    let cg = pcg(
        sys.matrix(),
        sys.rhs(),
        &mut x,
        cfg.cg_tol,
        cfg.cg_iteration_limit(sys.unknowns()),
    )?;
    let reflectance = if sys.objective(&x) <= sys.objective(&x0) {
        sys.unpack(&x, anchor)
    } else {
        anchor.to_vec()
    };
    Ok(RhoUpdate { reflectance, cg })
}
