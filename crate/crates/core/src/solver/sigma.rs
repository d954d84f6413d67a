//! The lighting update: one weighted 9-parameter least-squares fit per view.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::config::SolverConfig;
use crate::domain::{check_lighting, check_maps, LightingVector, MultiViewProblem, ScalarField};
use crate::energy::{irls_weight, photometric_residual};
use crate::error::{Error, Result};
use crate::linalg::thin_svd;

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Outcome of the lighting fit of one view.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaFit {
    pub lighting: LightingVector,
    /// Numerical rank of the weighted design matrix (at most 9).
    pub rank: usize,
}

impl SigmaFit {
    pub fn rank_deficient(&self) -> bool {
        self.rank < 9
    }
}

/// Minimum-norm solution of `min ‖A x − y‖` via the SVD pseudo-inverse.
/// Returns the solution and the numerical rank of `A`.
fn min_norm_lstsq(a: DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, usize)> {
    let (u, sv, v_t) = thin_svd(&a);
    if sv.iter().any(|s| !s.is_finite()) {
        return Err(Error::NumericalFailure {
            iterations: 0,
            context: "singular value decomposition of the lighting design failed".into(),
        });
    }
    let cut = sv.iter().fold(0.0f64, |m, &s| m.max(s)) * RANK_TOLERANCE;
    let rank = sv.iter().filter(|&&s| s > cut && s > 0.0).count();
    let mut x = DVector::zeros(v_t.ncols());
    for (k, &s) in sv.iter().enumerate() {
        if s > cut && s > 0.0 {
            let coef = u.column(k).dot(y) / s;
            x += v_t.row(k).transpose() * coef;
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            iterations: 0,
            context: "pseudo-inverse produced non-finite values".into(),
        });
    }
    Ok((x, rank))
}

/// Fits the lighting of view `v` with IRLS weights taken at
/// `(rho, anchor)`. Keeps `anchor` unless the fit strictly lowers the
/// weighted residual.
pub fn fit_view(
    v: usize,
    rho: &ScalarField,
    anchor: &LightingVector,
    problem: &MultiViewProblem,
    cfg: &SolverConfig,
) -> Result<SigmaFit> {
    let d = problem.domain(v);
    let idx: Vec<usize> = d.masked_indices().collect();
    if idx.is_empty() {
        return Err(Error::DegenerateView { view: v });
    }
    let weights: Vec<f64> = idx
        .iter()
        .map(|&i| irls_weight(photometric_residual(problem, v, i, rho.at(i), anchor), cfg.delta).sqrt())
        .collect();
    let geom = problem.geometry(v);
    let img = problem.image(v, 0);
    let a = DMatrix::from_fn(idx.len(), 9, |r, c| weights[r] * rho.at(idx[r]) * geom.at(idx[r])[c]);
    let y = DVector::from_fn(idx.len(), |r, _| weights[r] * img.at(idx[r]));
    let (x, rank) = min_norm_lstsq(a, &y)?;

    let mut candidate = [0.0; 9];
    candidate.copy_from_slice(x.as_slice());
    let candidate = LightingVector(candidate);

    let weighted_ssr = |s: &LightingVector| {
        let mut acc = 0.0;
        for (r, &i) in idx.iter().enumerate() {
            let e = weights[r] * photometric_residual(problem, v, i, rho.at(i), s);
            acc += e * e;
        }
        acc
    };
    let lighting = if weighted_ssr(&candidate) < weighted_ssr(anchor) {
        candidate
    } else {
        *anchor
    };
    Ok(SigmaFit { lighting, rank })
}

/// Lighting update of every view; views are fitted independently.
pub fn update_sigma(
    rho: &[ScalarField],
    anchor: &[LightingVector],
    problem: &MultiViewProblem,
    cfg: &SolverConfig,
) -> Result<Vec<SigmaFit>> {
    problem.require_graylevel()?;
    check_maps(rho, problem, "reflectance")?;
    check_lighting(anchor, problem)?;
    (0..problem.view_count())
        .into_par_iter()
        .map(|v| fit_view(v, &rho[v], &anchor[v], problem, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CorrespondenceSet, GeometricField, PixelDomain, View};
    use crate::shading::lift_normal;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(images: Vec<f64>, nu: Vec<[f64; 9]>, w: usize, h: usize) -> MultiViewProblem {
        let d = PixelDomain::full(w, h).unwrap();
        MultiViewProblem::new(
            1,
            vec![View::new(
                vec![ScalarField::new(d.clone(), images).unwrap()],
                GeometricField::from_raw(d, nu).unwrap(),
            )],
            CorrespondenceSet::empty(),
        )
        .unwrap()
    }

    #[test]
    fn single_pixel_minimum_norm() {
        let nu = lift_normal([0.0, 0.0, 1.0]).unwrap();
        let p = problem(vec![3.0], vec![nu], 1, 1);
        let rho = ScalarField::constant(p.domain(0).clone(), 1.0);
        let fit = fit_view(0, &rho, &LightingVector::DIFFUSE, &p, &SolverConfig::new(0.0, 0.0)).unwrap();
        let expect = [0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 1.0];
        for k in 0..9 {
            assert!((fit.lighting.0[k] - expect[k]).abs() < 1e-12);
        }
        assert_eq!(fit.rank, 1);
    }

    #[test]
    fn planar_view_is_rank_one() {
        let nu = lift_normal([0.6, 0.0, 0.8]).unwrap();
        let img: Vec<f64> = (0..16).map(|k| 0.5 + 0.01 * k as f64).collect();
        let p = problem(img, vec![nu; 16], 4, 4);
        let rho = ScalarField::from_fn(p.domain(0).clone(), |px| 1.0 + 0.1 * px.col as f64);
        let fits = update_sigma(&[rho], &[LightingVector::DIFFUSE], &p, &SolverConfig::new(0.0, 0.0)).unwrap();
        assert_eq!(fits[0].rank, 1);
        assert!(fits[0].rank_deficient());
        // minimum norm: parallel to ν
        let l = fits[0].lighting.0;
        let t = l[3] / nu[3];
        for k in 0..9 {
            assert!((l[k] - t * nu[k]).abs() < 1e-12);
        }
    }

    /// Weighted normal equations `(AᵀWA) x = AᵀW y`, solved by Cholesky.
    fn normal_equations_oracle(p: &MultiViewProblem, rho: &ScalarField, anchor: &LightingVector, delta: f64) -> [f64; 9] {
        let mut m = nalgebra::SMatrix::<f64, 9, 9>::zeros();
        let mut rhs = nalgebra::SVector::<f64, 9>::zeros();
        for i in 0..p.domain(0).len() {
            let nu = p.geometry(0).at(i);
            let mut s0 = 0.0;
            for k in 0..9 {
                s0 += anchor.0[k] * nu[k];
            }
            let r0 = rho.at(i) * s0 - p.image(0, 0).at(i);
            let w = 1.0 / r0.abs().max(delta);
            let a = nalgebra::SVector::<f64, 9>::from_fn(|k, _| rho.at(i) * nu[k]);
            m += a * a.transpose() * w;
            rhs += a * (w * p.image(0, 0).at(i));
        }
        let x = m.cholesky().unwrap().solve(&rhs);
        let mut out = [0.0; 9];
        out.copy_from_slice(x.as_slice());
        out
    }

    #[test]
    fn recovers_generating_lighting_on_exact_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let truth = LightingVector([0.3, -0.2, 0.5, 0.9, 0.05, -0.04, 0.02, 0.03, 0.01]);
        let nu: Vec<[f64; 9]> = (0..16)
            .map(|_| {
                let t: f64 = rng.random_range(0.0..1.3);
                let ph: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                lift_normal([t.sin() * ph.cos(), t.sin() * ph.sin(), t.cos()]).unwrap()
            })
            .collect();
        let rho_vals: Vec<f64> = (0..16).map(|_| rng.random_range(0.3..1.0)).collect();
        let img = (0..16).map(|i| rho_vals[i] * truth.shade(&nu[i])).collect();
        let p = problem(img, nu, 4, 4);
        let rho = ScalarField::new(p.domain(0).clone(), rho_vals).unwrap();
        let cfg = SolverConfig::new(0.0, 0.0);
        let fit = fit_view(0, &rho, &LightingVector::DIFFUSE, &p, &cfg).unwrap();
        assert_eq!(fit.rank, 9);
        let oracle = normal_equations_oracle(&p, &rho, &LightingVector::DIFFUSE, cfg.delta);
        for k in 0..9 {
            assert!((fit.lighting.0[k] - truth.0[k]).abs() < 1e-8, "k={k}");
            assert!((fit.lighting.0[k] - oracle[k]).abs() < 1e-6, "k={k}");
        }
    }

    #[test]
    fn residual_does_not_increase() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let nu: Vec<[f64; 9]> = (0..16)
            .map(|_| {
                let t: f64 = rng.random_range(0.0..1.3);
                let ph: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                lift_normal([t.sin() * ph.cos(), t.sin() * ph.sin(), t.cos()]).unwrap()
            })
            .collect();
        let img = (0..16).map(|_| rng.random_range(0.0..1.0)).collect();
        let p = problem(img, nu, 4, 4);
        let rho = ScalarField::from_fn(p.domain(0).clone(), |_| rng.random_range(0.5..1.0));
        let cfg = SolverConfig::new(0.0, 0.0);
        let anchor = LightingVector([0.1, 0.0, 0.2, 0.8, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let fit = fit_view(0, &rho, &anchor, &p, &cfg).unwrap();
        let ssr = |s: &LightingVector| -> f64 {
            (0..16)
                .map(|i| {
                    let r = photometric_residual(&p, 0, i, rho.at(i), s);
                    r * r * irls_weight(photometric_residual(&p, 0, i, rho.at(i), &anchor), cfg.delta)
                })
                .sum()
        };
        assert!(ssr(&fit.lighting) <= ssr(&anchor));
    }
}
