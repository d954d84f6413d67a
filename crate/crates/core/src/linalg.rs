//! Dense SVD helper.
//!
//! nalgebra's SVD can return a wrong factorization for exactly rank-one
//! inputs (which planar data produce routinely), so decompositions go
//! through faer. Callers keep nalgebra types.

use nalgebra::{DMatrix, DVector};

/// Thin SVD `A = U diag(s) Vᵀ`, returned as `(U, s, Vᵀ)`.
pub(crate) fn thin_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (n, m) = a.shape();
    let k = n.min(m);
    if k == 0 {
        return (DMatrix::zeros(n, 0), DVector::zeros(0), DMatrix::zeros(0, m));
    }
    let fa = faer::Mat::<f64>::from_fn(n, m, |i, j| a[(i, j)]);
    let svd = match fa.thin_svd() {
        Ok(svd) => svd,
        // Only non-finite input makes the iteration fail.
        Err(_) => {
            return (
                DMatrix::from_element(n, k, f64::NAN),
                DVector::from_element(k, f64::NAN),
                DMatrix::from_element(k, m, f64::NAN),
            )
        }
    };
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    (
        DMatrix::from_fn(n, k, |i, j| u[(i, j)]),
        DVector::from_fn(k, |i, _| s[i]),
        DMatrix::from_fn(k, m, |i, j| v[(j, i)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reconstruction_error(a: &DMatrix<f64>) -> f64 {
        let (u, s, vt) = thin_svd(a);
        (u * DMatrix::from_diagonal(&s) * vt - a).norm()
    }

    #[test]
    fn reconstructs_low_rank_matrices_of_any_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let n = rng.random_range(1..30);
            let m = rng.random_range(1..60);
            let r = rng.random_range(1..4);
            let mut a = DMatrix::zeros(n, m);
            for _ in 0..r {
                let x = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
                let y = DMatrix::from_fn(1, m, |_, c| ((c % 9) as f64 + 1.0) * (c as f64).sin());
                a += x * y;
            }
            assert!(reconstruction_error(&a) < 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn singular_vectors_are_orthonormal() {
        let a = DMatrix::from_fn(7, 4, |i, j| ((i * 3 + j) as f64).cos());
        let (u, _, vt) = thin_svd(&a);
        assert!((u.transpose() * &u - DMatrix::identity(4, 4)).norm() < 1e-13);
        assert!((&vt * vt.transpose() - DMatrix::identity(4, 4)).norm() < 1e-13);
    }
}
