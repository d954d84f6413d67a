//! Surface-domain least-squares baseline: nearest Kronecker product by SVD.
//!
//! With `n` surface points seen in `m` views, intensities satisfy
//! `I = N (ρ ⊗ S)` where `N` is block diagonal with rows `ν_jᵀ`, `ρ ∈ Rⁿ`
//! and `S ∈ R^{9×m}` holds one lighting vector per view. The baseline takes
//! `B = N† I` (block `j` is `ν_j I_jᵀ / ‖ν_j‖²`) and returns the rank-1
//! structured matrix `ρ ⊗ S` nearest to `B` in Frobenius norm.
//!
//! `N` is not injective, so `N†I` is generally not itself a Kronecker product
//! even for noise-free data. The factorization is exact only when the
//! rearranged `B` has rank 1, e.g. when all points share one normal.

use nalgebra::{DMatrix, DVector};

use crate::domain::LightingVector;
use crate::error::{Error, Result};
use crate::linalg::thin_svd;

/// Relative gap below which the two leading singular values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Geometry and intensities of `n` surface points in `m` views.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSamples {
    nu: Vec<[f64; 9]>,
    intensities: DMatrix<f64>,
    visibility: DMatrix<bool>,
}

impl SurfaceSamples {
    pub fn new(nu: Vec<[f64; 9]>, intensities: DMatrix<f64>, visibility: DMatrix<bool>) -> Result<Self> {
        let (n, m) = intensities.shape();
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument("need at least one point and one view".into()));
        }
        if nu.len() != n || visibility.shape() != (n, m) {
            return Err(Error::DimensionMismatch(format!(
                "{} geometric vectors, {n}x{m} intensities and {}x{} visibility",
                nu.len(),
                visibility.nrows(),
                visibility.ncols()
            )));
        }
        Ok(SurfaceSamples {
            nu,
            intensities,
            visibility,
        })
    }

    /// Every point visible in every view.
    pub fn fully_visible(nu: Vec<[f64; 9]>, intensities: DMatrix<f64>) -> Result<Self> {
        let (n, m) = intensities.shape();
        Self::new(nu, intensities, DMatrix::from_element(n, m, true))
    }

    pub fn points(&self) -> usize {
        self.nu.len()
    }

    pub fn views(&self) -> usize {
        self.intensities.ncols()
    }

    pub fn nu(&self) -> &[[f64; 9]] {
        &self.nu
    }

    pub fn intensities(&self) -> &DMatrix<f64> {
        &self.intensities
    }

    pub fn visibility(&self) -> &DMatrix<bool> {
        &self.visibility
    }

    /// `N† I` as `n` blocks of size `9×m`.
    pub fn pseudo_inverse_blocks(&self) -> Result<Vec<DMatrix<f64>>> {
        let m = self.views();
        self.nu
            .iter()
            .enumerate()
            .map(|(j, nu)| {
                let nn: f64 = nu.iter().map(|v| v * v).sum();
                if nn == 0.0 {
                    return Err(Error::Degenerate(format!("geometric vector of point {j} is zero")));
                }
                Ok(DMatrix::from_fn(9, m, |k, i| nu[k] * self.intensities[(j, i)] / nn))
            })
            .collect()
    }
}

/// Rank-1 factor pair `(ρ, S)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KroneckerFactors {
    pub rho: DVector<f64>,
    /// `9×m`, column `i` is the lighting vector of view `i`.
    pub s: DMatrix<f64>,
}

impl KroneckerFactors {
    pub fn lighting(&self, view: usize) -> LightingVector {
        let mut l = [0.0; 9];
        for (k, v) in l.iter_mut().enumerate() {
            *v = self.s[(k, view)];
        }
        LightingVector(l)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KroneckerFit {
    pub factors: KroneckerFactors,
    /// Singular values of the rearranged `N†I`, descending.
    pub singular_values: Vec<f64>,
    /// The two leading singular values are equal within [`TIE_TOLERANCE`];
    /// the dominant subspace, hence the factorization, is not unique.
    pub tie: bool,
}

/// Nearest Kronecker product to `N† I` under full visibility. Normalized so
/// that `‖ρ‖ = 1` with its first nonzero entry positive.
pub fn solve_kronecker(samples: &SurfaceSamples) -> Result<KroneckerFit> {
    if samples.visibility.iter().any(|v| !v) {
        return Err(Error::UnsupportedInput(
            "factorization requires every point to be visible in every view".into(),
        ));
    }
    let (n, m) = (samples.points(), samples.views());
    let blocks = samples.pseudo_inverse_blocks()?;
    // Row j is vec(B_j), column-major.
    let r = DMatrix::from_fn(n, 9 * m, |j, c| blocks[j][(c % 9, c / 9)]);
    let (u, sv, v_t) = thin_svd(&r);
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let singular_values: Vec<f64> = order.iter().map(|&k| sv[k]).collect();
    let top = order[0];
    let s1 = singular_values[0];

    let mut rho: DVector<f64> = u.column(top).into_owned();
    let mut vec_s: DVector<f64> = v_t.row(top).transpose() * s1;
    if let Some(first) = rho.iter().find(|v| **v != 0.0) {
        if *first < 0.0 {
            rho.neg_mut();
            vec_s.neg_mut();
        }
    }
    let s = DMatrix::from_fn(9, m, |k, i| vec_s[i * 9 + k]);
    let tie = singular_values.len() > 1 && s1 - singular_values[1] <= TIE_TOLERANCE * s1;
    Ok(KroneckerFit {
        factors: KroneckerFactors { rho, s },
        singular_values,
        tie,
    })
}

/// Diffuse factorization: every lighting column is `[0,0,0,1,0,…]` and
/// `ρ_j` is the mean intensity of point `j` over the views.
pub fn trivial_solution(samples: &SurfaceSamples) -> KroneckerFactors {
    let (n, m) = (samples.points(), samples.views());
    // Shifted by the first view so that identical columns give their value
    // exactly, not up to rounding of the sum.
    let rho = DVector::from_fn(n, |j, _| {
        let base = samples.intensities[(j, 0)];
        let mut s = 0.0;
        for i in 1..m {
            s += samples.intensities[(j, i)] - base;
        }
        base + s / m as f64
    });
    let s = DMatrix::from_fn(9, m, |k, _| LightingVector::DIFFUSE.0[k]);
    KroneckerFactors { rho, s }
}

/// `‖ρ ⊗ S − N† I‖_F`: the objective the SVD minimizes.
pub fn kron_residual(samples: &SurfaceSamples, f: &KroneckerFactors) -> Result<f64> {
    check_factors(samples, f)?;
    let blocks = samples.pseudo_inverse_blocks()?;
    let mut acc = 0.0;
    for (j, b) in blocks.iter().enumerate() {
        for i in 0..samples.views() {
            for k in 0..9 {
                let d = f.rho[j] * f.s[(k, i)] - b[(k, i)];
                acc += d * d;
            }
        }
    }
    Ok(acc.sqrt())
}

/// `‖N (ρ ⊗ S) − I‖_F`: how well the factors explain the intensities.
pub fn photometric_residual(samples: &SurfaceSamples, f: &KroneckerFactors) -> Result<f64> {
    check_factors(samples, f)?;
    let mut acc = 0.0;
    for (j, nu) in samples.nu.iter().enumerate() {
        for i in 0..samples.views() {
            let d = f.rho[j] * f.lighting(i).shade(nu) - samples.intensities[(j, i)];
            acc += d * d;
        }
    }
    Ok(acc.sqrt())
}

fn check_factors(samples: &SurfaceSamples, f: &KroneckerFactors) -> Result<()> {
    if f.rho.len() != samples.points() || f.s.shape() != (9, samples.views()) {
        return Err(Error::DimensionMismatch(format!(
            "factors of size {} and {}x{} for {} points in {} views",
            f.rho.len(),
            f.s.nrows(),
            f.s.ncols(),
            samples.points(),
            samples.views()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shading::lift_normal;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_nu(rng: &mut ChaCha8Rng) -> [f64; 9] {
        let t: f64 = rng.random_range(0.0..1.4);
        let p: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        lift_normal([t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]).unwrap()
    }

    fn render(nu: &[[f64; 9]], rho: &[f64], s: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(nu.len(), s.ncols(), |j, i| {
            let mut acc = 0.0;
            for k in 0..9 {
                acc += s[(k, i)] * nu[j][k];
            }
            rho[j] * acc
        })
    }

    #[test]
    fn single_point_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let nu = random_nu(&mut rng);
        let i = DMatrix::from_row_slice(1, 3, &[0.5, 0.7, 0.2]);
        let samples = SurfaceSamples::fully_visible(vec![nu], i.clone()).unwrap();
        let fit = solve_kronecker(&samples).unwrap();
        assert_eq!(fit.factors.rho.as_slice(), &[1.0]);
        let nn: f64 = nu.iter().map(|v| v * v).sum();
        for c in 0..3 {
            for k in 0..9 {
                assert!((fit.factors.s[(k, c)] - nu[k] * i[(0, c)] / nn).abs() < 1e-14);
            }
        }
        assert!(photometric_residual(&samples, &fit.factors).unwrap() < 1e-14);
    }

    #[test]
    fn planar_rank_one_data_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let nu = random_nu(&mut rng);
        let n = 12;
        let rho: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
        let s = DMatrix::from_fn(9, 4, |_, _| rng.random_range(-1.0..1.0));
        let nus = vec![nu; n];
        let samples = SurfaceSamples::fully_visible(nus.clone(), render(&nus, &rho, &s)).unwrap();
        let fit = solve_kronecker(&samples).unwrap();
        assert!(kron_residual(&samples, &fit.factors).unwrap() < 1e-10);
        assert!(photometric_residual(&samples, &fit.factors).unwrap() < 1e-10);
        let norm = rho.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..n {
            assert!((fit.factors.rho[j] - rho[j] / norm).abs() < 1e-12);
        }
        assert!(!fit.tie);
    }

    #[test]
    fn fixed_lighting_gives_identical_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10;
        let nus: Vec<[f64; 9]> = (0..n).map(|_| random_nu(&mut rng)).collect();
        let col: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
        let i = DMatrix::from_fn(n, 5, |j, _| col[j]);
        let samples = SurfaceSamples::fully_visible(nus, i).unwrap();
        let fit = solve_kronecker(&samples).unwrap();
        for c in 1..5 {
            for k in 0..9 {
                assert!((fit.factors.s[(k, c)] - fit.factors.s[(k, 0)]).abs() < 1e-12);
            }
        }
        let triv = trivial_solution(&samples);
        for j in 0..n {
            assert!((triv.rho[j] - col[j]).abs() < 1e-15);
        }
        assert!(photometric_residual(&samples, &triv).unwrap() < 1e-14);
    }

    #[test]
    fn trivial_rho_is_mean_over_views() {
        let nu = lift_normal([0.0, 0.0, 1.0]).unwrap();
        let i = DMatrix::from_fn(4, 3, |j, v| (j + v) as f64);
        let t = trivial_solution(&SurfaceSamples::fully_visible(vec![nu; 4], i).unwrap());
        for j in 0..4 {
            assert_eq!(t.rho[j], j as f64 + 1.0);
        }
        assert_eq!(t.lighting(2), LightingVector::DIFFUSE);
    }

    #[test]
    fn partial_visibility_and_zero_rows_are_rejected() {
        let nu = lift_normal([0.0, 0.0, 1.0]).unwrap();
        let mut vis = DMatrix::from_element(2, 2, true);
        vis[(1, 0)] = false;
        let s = SurfaceSamples::new(vec![nu; 2], DMatrix::zeros(2, 2), vis).unwrap();
        assert!(matches!(solve_kronecker(&s), Err(Error::UnsupportedInput(_))));
        let z = SurfaceSamples::fully_visible(vec![nu, [0.0; 9]], DMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(solve_kronecker(&z), Err(Error::Degenerate(_))));
    }

    #[test]
    fn no_sampled_competitor_beats_the_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let n = rng.random_range(1..=4);
            let m = rng.random_range(1..=3);
            let nus: Vec<[f64; 9]> = (0..n).map(|_| random_nu(&mut rng)).collect();
            let i = DMatrix::from_fn(n, m, |_, _| rng.random_range(0.0..1.0));
            let samples = SurfaceSamples::fully_visible(nus, i).unwrap();
            let fit = solve_kronecker(&samples).unwrap();
            let best = kron_residual(&samples, &fit.factors).unwrap();
            assert!(best <= kron_residual(&samples, &trivial_solution(&samples)).unwrap() + 1e-12);
            for _ in 0..500 {
                let mut f = fit.factors.clone();
                let scale = rng.random_range(0.0..0.3);
                f.rho.iter_mut().for_each(|v| *v += scale * rng.random_range(-1.0..1.0));
                f.s.iter_mut().for_each(|v| *v += scale * rng.random_range(-1.0..1.0));
                assert!(kron_residual(&samples, &f).unwrap() >= best - 1e-9);
            }
        }
    }
}
