//! Huber-relaxed variational energy and its quadratic majorants.
//!
//! The energy of reflectance maps `ρ` and lighting vectors `σ` is
//!
//! ```text
//! E(ρ, σ) = Σ_i Σ_p φ(ρ_i(p) σ_i·ν_i(p) − I_i(p))
//!         + λ Σ_i Σ_p [φ(∂x ρ_i(p)) + φ(∂y ρ_i(p))]
//!         + μ Σ_{(i,p)~(j,q)} φ(ρ_i(p) − ρ_j(q))
//! ```
//!
//! with `φ` the Huber loss of threshold `δ`. All sums run views first, then
//! rows, then columns; correspondences run in stored order. Totals are
//! therefore reproducible bit for bit.

use crate::config::SolverConfig;
use crate::domain::{check_lighting, check_maps, Estimate, LightingVector, MultiViewProblem, Pixel, PixelDomain, ScalarField};
use crate::error::Result;

/// Huber loss: `x²/(2δ)` for `|x| ≤ δ`, `|x| − δ/2` beyond.
#[inline]
pub fn huber(x: f64, delta: f64) -> f64 {
    let a = x.abs();
    if a <= delta {
        x * x / (2.0 * delta)
    } else {
        a - delta / 2.0
    }
}

/// Quadratic upper bound of [`huber`] touching it at `x0`.
#[inline]
pub fn huber_majorant(x: f64, x0: f64, delta: f64) -> f64 {
    let a0 = x0.abs();
    if a0 <= delta {
        x * x / (2.0 * delta)
    } else {
        x * x / (2.0 * a0) + a0 / 2.0 - delta / 2.0
    }
}

/// Curvature of [`huber_majorant`] around `x0`: `1 / max(δ, |x0|)`.
#[inline]
pub fn irls_weight(x0: f64, delta: f64) -> f64 {
    1.0 / x0.abs().max(delta)
}

/// Forward differences of a scalar field. Components are zero where the
/// forward neighbour is outside the frame or masked out.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    domain: PixelDomain,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

impl GradientField {
    pub fn domain(&self) -> &PixelDomain {
        &self.domain
    }

    /// `(∂x, ∂y)` at a masked-in pixel.
    pub fn get(&self, p: Pixel) -> Option<(f64, f64)> {
        self.domain.contains(p).then(|| {
            let i = self.domain.index(p);
            (self.dx[i], self.dy[i])
        })
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn dy(&self) -> &[f64] {
        &self.dy
    }
}

/// First-order forward stencils with a Neumann condition on the mask border.
pub fn grad_forward(f: &ScalarField) -> GradientField {
    let d = f.domain();
    let mut dx = vec![0.0; d.len()];
    let mut dy = vec![0.0; d.len()];
    for i in d.masked_indices() {
        if let Some(r) = d.right_of(i) {
            dx[i] = f.at(r) - f.at(i);
        }
        if let Some(b) = d.below(i) {
            dy[i] = f.at(b) - f.at(i);
        }
    }
    GradientField {
        domain: d.clone(),
        dx,
        dy,
    }
}

/// The three weighted terms of the energy. `smoothness` and `consistency`
/// already include their `λ` and `μ` factors.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub photometric: f64,
    pub smoothness: f64,
    pub consistency: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn from_terms(photometric: f64, smooth_sum: f64, consist_sum: f64, cfg: &SolverConfig) -> Self {
        let smoothness = cfg.lambda * smooth_sum;
        let consistency = cfg.mu * consist_sum;
        EnergyBreakdown {
            photometric,
            smoothness,
            consistency,
            total: photometric + smoothness + consistency,
        }
    }
}

/// Photometric residual `ρ σ·ν − I` at linear index `i` of view `v`.
#[inline]
pub(crate) fn photometric_residual(
    problem: &MultiViewProblem,
    v: usize,
    i: usize,
    rho: f64,
    sigma: &LightingVector,
) -> f64 {
    rho * sigma.shade(problem.geometry(v).at(i)) - problem.image(v, 0).at(i)
}

fn smoothness_sum(rho: &[ScalarField], mut term: impl FnMut(usize, usize, f64) -> f64) -> f64 {
    let mut sum = 0.0;
    for (v, map) in rho.iter().enumerate() {
        let d = map.domain();
        for i in d.masked_indices() {
            let gx = d.right_of(i).map_or(0.0, |r| map.at(r) - map.at(i));
            let gy = d.below(i).map_or(0.0, |b| map.at(b) - map.at(i));
            sum += term(v, i, gx) + term(v, i + d.len(), gy);
        }
    }
    sum
}

fn consistency_sum(
    rho: &[ScalarField],
    problem: &MultiViewProblem,
    mut term: impl FnMut(f64) -> f64,
) -> f64 {
    let mut sum = 0.0;
    for e in problem.correspondences().entries() {
        let a = &rho[e.view_i];
        let b = &rho[e.view_j];
        sum += term(a.at(a.domain().index(e.pixel_i)) - b.at(b.domain().index(e.pixel_j)));
    }
    sum
}

/// Evaluates the energy and its breakdown for a graylevel problem.
pub fn eval_energy(state: &Estimate, problem: &MultiViewProblem, cfg: &SolverConfig) -> Result<EnergyBreakdown> {
    problem.require_graylevel()?;
    state.check_against(problem)?;
    let delta = cfg.delta;

    let mut photometric = 0.0;
    for (v, map) in state.reflectance.iter().enumerate() {
        let sigma = &state.lighting[v];
        for i in map.domain().masked_indices() {
            photometric += huber(photometric_residual(problem, v, i, map.at(i), sigma), delta);
        }
    }
    let smooth = smoothness_sum(&state.reflectance, |_, _, g| huber(g, delta));
    let consist = consistency_sum(&state.reflectance, problem, |d| huber(d, delta));
    Ok(EnergyBreakdown::from_terms(photometric, smooth, consist, cfg))
}

/// Majorant of `E(·, σ)` around the reflectance maps `anchor`, evaluated at
/// `rho`. Every Huber term is replaced by its quadratic bound anchored at the
/// same term's value for `anchor`.
pub fn eval_majorant_rho(
    rho: &[ScalarField],
    anchor: &[ScalarField],
    sigma: &[LightingVector],
    problem: &MultiViewProblem,
    cfg: &SolverConfig,
) -> Result<f64> {
    problem.require_graylevel()?;
    check_maps(rho, problem, "reflectance")?;
    check_maps(anchor, problem, "anchor reflectance")?;
    check_lighting(sigma, problem)?;
    let delta = cfg.delta;

    let mut photometric = 0.0;
    for (v, map) in rho.iter().enumerate() {
        for i in map.domain().masked_indices() {
            let r = photometric_residual(problem, v, i, map.at(i), &sigma[v]);
            let r0 = photometric_residual(problem, v, i, anchor[v].at(i), &sigma[v]);
            photometric += huber_majorant(r, r0, delta);
        }
    }

    // Anchor gradients, indexed like the closure keys of `smoothness_sum`.
    let anchor_grads: Vec<Vec<f64>> = anchor
        .iter()
        .map(|m| {
            let g = grad_forward(m);
            let mut all = g.dx;
            all.extend_from_slice(&g.dy);
            all
        })
        .collect();
    let smooth = smoothness_sum(rho, |v, k, g| huber_majorant(g, anchor_grads[v][k], delta));

    let mut consist = 0.0;
    for e in problem.correspondences().entries() {
        let (ia, ib) = (
            problem.domain(e.view_i).index(e.pixel_i),
            problem.domain(e.view_j).index(e.pixel_j),
        );
        let d = rho[e.view_i].at(ia) - rho[e.view_j].at(ib);
        let d0 = anchor[e.view_i].at(ia) - anchor[e.view_j].at(ib);
        consist += huber_majorant(d, d0, delta);
    }

    Ok(EnergyBreakdown::from_terms(photometric, smooth, consist, cfg).total)
}

/// Majorant of `E(ρ, ·)` around the lighting vectors `anchor_sigma`,
/// evaluated at `sigma`. Smoothness and consistency do not depend on the
/// lighting and enter with their exact Huber values.
pub fn eval_majorant_sigma(
    sigma: &[LightingVector],
    anchor_sigma: &[LightingVector],
    rho: &[ScalarField],
    problem: &MultiViewProblem,
    cfg: &SolverConfig,
) -> Result<f64> {
    problem.require_graylevel()?;
    check_maps(rho, problem, "reflectance")?;
    check_lighting(sigma, problem)?;
    check_lighting(anchor_sigma, problem)?;
    let delta = cfg.delta;

    let mut photometric = 0.0;
    for (v, map) in rho.iter().enumerate() {
        for i in map.domain().masked_indices() {
            let r = photometric_residual(problem, v, i, map.at(i), &sigma[v]);
            let r0 = photometric_residual(problem, v, i, map.at(i), &anchor_sigma[v]);
            photometric += huber_majorant(r, r0, delta);
        }
    }
    let smooth = smoothness_sum(rho, |_, _, g| huber(g, delta));
    let consist = consistency_sum(rho, problem, |d| huber(d, delta));
    Ok(EnergyBreakdown::from_terms(photometric, smooth, consist, cfg).total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Correspondence, CorrespondenceSet, GeometricField, View};
    use crate::shading::lift_normal;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn huber_values() {
        assert_eq!(huber(0.0, 1e-4), 0.0);
        assert!((huber(1e-4, 1e-4) - 5e-5).abs() < 1e-18);
        assert!((huber(2.0, 1e-4) - 1.99995).abs() < 1e-15);
        assert_eq!(huber(-2.0, 1e-4), huber(2.0, 1e-4));
    }

    #[test]
    fn huber_is_below_abs_and_monotone() {
        let mut prev = 0.0;
        for k in 0..2000 {
            let x = k as f64 * 1e-3;
            let h = huber(x, 0.05);
            assert!(h <= x + 1e-15);
            assert!(h >= prev);
            prev = h;
        }
    }

    #[test]
    fn majorant_touches_at_anchor() {
        let d = 1e-4;
        for x0 in [0.0, d / 2.0, 3.0 * d, -7.0] {
            assert!((huber_majorant(x0, x0, d) - huber(x0, d)).abs() <= 1e-15);
        }
        assert!((huber_majorant(1.0, 2.0, 1e-4) - 1.24995).abs() < 1e-14);
    }

    #[test]
    fn majorant_bounds_huber_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 1e-2;
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-1.0..1.0);
            let x0: f64 = rng.random_range(-1.0..1.0);
            assert!(huber_majorant(x, x0, d) >= huber(x, d));
        }
    }

    fn field(w: usize, h: usize, mask: Vec<bool>, v: Vec<f64>) -> ScalarField {
        ScalarField::new(PixelDomain::new(w, h, mask).unwrap(), v).unwrap()
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let f = ScalarField::constant(PixelDomain::full(4, 3).unwrap(), 2.5);
        let g = grad_forward(&f);
        assert!(g.dx().iter().chain(g.dy()).all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_row_with_neumann_boundary() {
        let f = field(3, 1, vec![true; 3], vec![0.0, 1.0, 3.0]);
        let g = grad_forward(&f);
        assert_eq!(g.dx(), &[1.0, 2.0, 0.0]);
        assert_eq!(g.dy(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_treats_masked_out_pixel_as_boundary() {
        let mut mask = vec![true; 9];
        mask[4] = false;
        let vals: Vec<f64> = (0..9).map(|k| (k * k) as f64).collect();
        let f = field(3, 3, mask.clone(), vals.clone());
        let g = grad_forward(&f);
        // oracle: explicit neighbour checks on (row, col)
        for r in 0..3usize {
            for c in 0..3usize {
                let i = r * 3 + c;
                if !mask[i] {
                    assert_eq!(g.get(Pixel::new(r, c)), None);
                    continue;
                }
                let ex = if c + 1 < 3 && mask[i + 1] { vals[i + 1] - vals[i] } else { 0.0 };
                let ey = if r + 1 < 3 && mask[i + 3] { vals[i + 3] - vals[i] } else { 0.0 };
                assert_eq!(g.get(Pixel::new(r, c)), Some((ex, ey)));
            }
        }
    }

    #[test]
    fn single_pixel_support_has_at_most_two_nonzero_components() {
        for spot in 0..12 {
            let mut v = vec![0.0; 12];
            v[spot] = 1.0;
            let g = grad_forward(&field(4, 3, vec![true; 12], v));
            let own = g.dx()[spot].abs() + g.dy()[spot].abs();
            let nonzero_own = (g.dx()[spot] != 0.0) as usize + (g.dy()[spot] != 0.0) as usize;
            assert!(nonzero_own <= 2);
            assert!(own <= 2.0);
        }
    }

    /// Two random views on 4x4 grids with random masks and correspondences.
    fn random_problem(seed: u64) -> (MultiViewProblem, Estimate) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut views = Vec::new();
        let mut maps = Vec::new();
        let mut lights = Vec::new();
        for _ in 0..2 {
            let mut mask: Vec<bool> = (0..16).map(|_| rng.random_bool(0.8)).collect();
            mask[0] = true;
            let d = PixelDomain::new(4, 4, mask).unwrap();
            let nu: Vec<[f64; 9]> = (0..16)
                .map(|_| {
                    let v = [
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(0.2..1.0f64),
                    ];
                    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    lift_normal([v[0] / n, v[1] / n, v[2] / n]).unwrap()
                })
                .collect();
            let img: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..1.0)).collect();
            let rho: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..1.0)).collect();
            views.push(View::new(
                vec![ScalarField::new(d.clone(), img).unwrap()],
                GeometricField::from_raw(d.clone(), nu).unwrap(),
            ));
            maps.push(ScalarField::new(d, rho).unwrap());
            let mut s = [0.0; 9];
            for c in s.iter_mut() {
                *c = rng.random_range(-1.0..1.0);
            }
            lights.push(LightingVector(s));
        }
        let mut entries = Vec::new();
        for a in views[0].domain().masked_indices() {
            for b in views[1].domain().masked_indices() {
                if rng.random_bool(0.1) {
                    entries.push(Correspondence::canonical(
                        0,
                        views[0].domain().pixel(a),
                        1,
                        views[1].domain().pixel(b),
                    ));
                }
            }
        }
        let p = MultiViewProblem::new(1, views, CorrespondenceSet::new(entries).unwrap()).unwrap();
        (
            p,
            Estimate {
                reflectance: maps,
                lighting: lights,
            },
        )
    }

    /// Straight-line evaluator summing each term by (view, row, col).
    fn reference_energy(p: &MultiViewProblem, s: &Estimate, lambda: f64, mu: f64, delta: f64) -> (f64, f64, f64) {
        let phi = |x: f64| if x.abs() <= delta { x * x / (2.0 * delta) } else { x.abs() - delta / 2.0 };
        let (mut e1, mut e2, mut e3) = (0.0, 0.0, 0.0);
        for v in 0..p.view_count() {
            let d = p.domain(v);
            for r in 0..d.height() {
                for c in 0..d.width() {
                    let px = Pixel::new(r, c);
                    let Some(rho) = s.reflectance[v].get(px) else { continue };
                    let nu = p.geometry(v).get(px).unwrap();
                    let mut sn = 0.0;
                    for k in 0..9 {
                        sn += s.lighting[v].0[k] * nu[k];
                    }
                    e1 += phi(rho * sn - p.image(v, 0).get(px).unwrap());
                    let right = s.reflectance[v].get(Pixel::new(r, c + 1));
                    let down = s.reflectance[v].get(Pixel::new(r + 1, c));
                    e2 += phi(right.map_or(0.0, |x| x - rho)) + phi(down.map_or(0.0, |x| x - rho));
                }
            }
        }
        for e in p.correspondences().entries() {
            let a = s.reflectance[e.view_i].get(e.pixel_i).unwrap();
            let b = s.reflectance[e.view_j].get(e.pixel_j).unwrap();
            e3 += phi(a - b);
        }
        (e1, lambda * e2, mu * e3)
    }

    #[test]
    fn energy_matches_reference_evaluator() {
        for seed in 0..5 {
            let (p, s) = random_problem(seed);
            let mut cfg = SolverConfig::new(0.7, 3.0);
            cfg.delta = 0.05;
            let e = eval_energy(&s, &p, &cfg).unwrap();
            let (a, b, c) = reference_energy(&p, &s, 0.7, 3.0, 0.05);
            assert!((e.photometric - a).abs() <= 1e-12 * a.max(1.0));
            assert!((e.smoothness - b).abs() <= 1e-12 * b.max(1.0));
            assert!((e.consistency - c).abs() <= 1e-12 * c.max(1.0));
            assert_eq!(e.total, e.photometric + e.smoothness + e.consistency);
        }
    }

    #[test]
    fn single_pixel_energy() {
        let d = PixelDomain::full(1, 1).unwrap();
        // σ·ν = 2 with σ = ν/3 for ν = lift(0,0,1) (‖ν‖² = 6)
        let nu = lift_normal([0.0, 0.0, 1.0]).unwrap();
        let sigma = LightingVector(nu.map(|v| v / 3.0));
        assert!((sigma.shade(&nu) - 2.0).abs() < 1e-15);
        let p = MultiViewProblem::new(
            1,
            vec![View::new(
                vec![ScalarField::constant(d.clone(), 1.0)],
                GeometricField::from_raw(d.clone(), vec![nu]).unwrap(),
            )],
            CorrespondenceSet::empty(),
        )
        .unwrap();
        let s = Estimate {
            reflectance: vec![ScalarField::constant(d, 1.0)],
            lighting: vec![sigma],
        };
        let e = eval_energy(&s, &p, &SolverConfig::new(0.0, 0.0)).unwrap();
        assert!((e.total - 0.99995).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let (p, mut s) = random_problem(1);
        s.lighting.pop();
        assert!(eval_energy(&s, &p, &SolverConfig::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn rho_majorant_touches_and_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for seed in 0..4 {
            let (p, s) = random_problem(100 + seed);
            let mut cfg = SolverConfig::new(0.5, 2.0);
            cfg.delta = 0.02;
            let at_anchor =
                eval_majorant_rho(&s.reflectance, &s.reflectance, &s.lighting, &p, &cfg).unwrap();
            let e = eval_energy(&s, &p, &cfg).unwrap().total;
            assert!((at_anchor - e).abs() <= 1e-12 * e);
            for _ in 0..50 {
                let moved: Vec<ScalarField> = s
                    .reflectance
                    .iter()
                    .map(|m| m.map(|v| v + rng.random_range(-0.3..0.3)))
                    .collect();
                let maj = eval_majorant_rho(&moved, &s.reflectance, &s.lighting, &p, &cfg).unwrap();
                let st = Estimate {
                    reflectance: moved,
                    lighting: s.lighting.clone(),
                };
                let en = eval_energy(&st, &p, &cfg).unwrap().total;
                assert!(maj >= en - 1e-12 * en, "{maj} < {en}");
            }
        }
    }

    #[test]
    fn sigma_majorant_touches_and_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (p, s) = random_problem(9);
        let cfg = SolverConfig::new(0.5, 2.0);
        let at = eval_majorant_sigma(&s.lighting, &s.lighting, &s.reflectance, &p, &cfg).unwrap();
        let e = eval_energy(&s, &p, &cfg).unwrap().total;
        assert!((at - e).abs() <= 1e-12 * e);
        for _ in 0..100 {
            let moved: Vec<LightingVector> = s
                .lighting
                .iter()
                .map(|l| LightingVector(l.0.map(|v| v + rng.random_range(-0.5..0.5))))
                .collect();
            let maj = eval_majorant_sigma(&moved, &s.lighting, &s.reflectance, &p, &cfg).unwrap();
            let st = Estimate {
                reflectance: s.reflectance.clone(),
                lighting: moved,
            };
            assert!(maj >= eval_energy(&st, &p, &cfg).unwrap().total * (1.0 - 1e-12));
        }
    }

    #[test]
    fn sigma_majorant_is_quadratic_with_curvature_one_over_delta() {
        // all anchor residuals below δ: photometric part is r²/(2δ)
        let d = PixelDomain::full(1, 1).unwrap();
        let nu = lift_normal([0.0, 0.0, 1.0]).unwrap();
        let p = MultiViewProblem::new(
            1,
            vec![View::new(
                vec![ScalarField::constant(d.clone(), 1.0)],
                GeometricField::from_raw(d.clone(), vec![nu]).unwrap(),
            )],
            CorrespondenceSet::empty(),
        )
        .unwrap();
        let rho = vec![ScalarField::constant(d, 1.0)];
        let cfg = SolverConfig::new(0.0, 0.0);
        let anchor = vec![LightingVector::DIFFUSE];
        for t in [-0.5, -0.1, 0.0, 0.2, 1.0] {
            let mut s = LightingVector::DIFFUSE;
            s.0[3] += t;
            let m = eval_majorant_sigma(&[s], &anchor, &rho, &p, &cfg).unwrap();
            assert!((m - t * t / (2.0 * cfg.delta)).abs() <= 1e-9 * m.max(1.0));
        }
    }

    #[test]
    fn single_pixel_rho_majorant_without_regularization() {
        let d = PixelDomain::full(1, 1).unwrap();
        let nu = lift_normal([0.0, 0.0, 1.0]).unwrap();
        let p = MultiViewProblem::new(
            1,
            vec![View::new(
                vec![ScalarField::constant(d.clone(), 0.3)],
                GeometricField::from_raw(d.clone(), vec![nu]).unwrap(),
            )],
            CorrespondenceSet::empty(),
        )
        .unwrap();
        let cfg = SolverConfig::new(0.0, 0.0);
        let anchor = vec![ScalarField::constant(d.clone(), 0.9)];
        let rho = vec![ScalarField::constant(d, 0.5)];
        let m = eval_majorant_rho(&rho, &anchor, &[LightingVector::DIFFUSE], &p, &cfg).unwrap();
        assert!((m - huber_majorant(0.5 - 0.3, 0.9 - 0.3, cfg.delta)).abs() < 1e-15);
    }
}
