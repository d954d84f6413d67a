//! Compressed sparse rows and Jacobi-preconditioned conjugate gradient.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows per parallel task in [`CsrMatrix::mul_vec`].
const ROW_BLOCK: usize = 4096;

/// Square sparse matrix in CSR layout with sorted, duplicate-free columns.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds the matrix from per-row `(column, value)` lists. Duplicate
    /// columns are summed in list order, so the result is deterministic.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                debug_assert!(c < n);
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            s += self.values[k] * x[self.col_idx[k]];
        }
        s
    }

    /// `y = A x`. Each row is summed sequentially, so the result does not
    /// depend on the number of worker threads.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(ROW_BLOCK).enumerate().for_each(|(b, chunk)| {
            let base = b * ROW_BLOCK;
            for (k, out) in chunk.iter_mut().enumerate() {
                *out = self.row_dot(base + k, x);
            }
        });
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final `‖b − A x‖ / ‖b‖` (absolute residual when `b = 0`).
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solves `A x = b` for symmetric positive semi-definite `A`, starting from
/// the content of `x`. Zero diagonal entries get a unit preconditioner.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iters: usize) -> Result<CgOutcome> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let b_norm = dot(b, b).sqrt();
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };
    let threshold = tol * scale;

    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut r_norm = dot(&r, &r).sqrt();
    let fail = |iterations: usize| Error::NumericalFailure {
        iterations,
        context: "conjugate gradient produced a non-finite residual".into(),
    };
    if !r_norm.is_finite() {
        return Err(fail(0));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    let mut it = 0;
    while r_norm > threshold && it < max_iters {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() {
            return Err(fail(it));
        }
        if pap <= 0.0 {
            // Direction in the null space: nothing left to reduce.
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        r_norm = dot(&r, &r).sqrt();
        if !r_norm.is_finite() {
            return Err(fail(it));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(CgOutcome {
        iterations: it,
        relative_residual: r_norm / scale,
        converged: r_norm <= threshold,
    })
}
