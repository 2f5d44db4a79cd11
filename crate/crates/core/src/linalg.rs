//! Small dense linear-algebra helpers: sample moments, covariance factors
//! and the symmetric eigendecomposition (nalgebra-backed).

use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)] // inherent float methods need std on older toolchains
use num_traits::Float;

use crate::{Error, Matrix, Result};

/// Mean vector of `obs` (each entry one observation of equal dimension).
pub fn mean_vector<R: AsRef<[f64]>>(obs: &[R]) -> Vec<f64> {
    let d = obs.first().map_or(0, |o| o.as_ref().len());
    let mut m = alloc::vec![0.0; d];
    for o in obs {
        for (acc, v) in m.iter_mut().zip(o.as_ref()) {
            *acc += v;
        }
    }
    let n = obs.len().max(1) as f64;
    m.iter_mut().for_each(|v| *v /= n);
    m
}

/// Unbiased sample covariance (d x d) of `obs`.
pub fn sample_covariance<R: AsRef<[f64]>>(obs: &[R]) -> Matrix {
    let d = obs.first().map_or(0, |o| o.as_ref().len());
    let m = mean_vector(obs);
    let mut c = Matrix::zeros(d, d);
    if obs.len() < 2 {
        return c;
    }
    for o in obs {
        let o = o.as_ref();
        for i in 0..d {
            let di = o[i] - m[i];
            if di == 0.0 {
                continue;
            }
            for j in i..d {
                c.set(i, j, c.get(i, j) + di * (o[j] - m[j]));
            }
        }
    }
    let denom = (obs.len() - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = c.get(i, j) / denom;
            c.set(i, j, v);
            c.set(j, i, v);
        }
    }
    c
}

/// Covariance factor built from a Helmert contrast basis.
///
/// For `m` observations of dimension `d` returns `A` (d x (m-1)) with
/// `A * Aᵀ` equal to the unbiased sample covariance. Column `j` is
/// `(x_0 + ... + x_{j-1} - j * x_j) / sqrt(j (j + 1) (m - 1))`.
pub fn helmert_factor<R: AsRef<[f64]>>(obs: &[R]) -> Matrix {
    let m = obs.len();
    let d = obs.first().map_or(0, |o| o.as_ref().len());
    if m < 2 {
        return Matrix::zeros(d, 0);
    }
    let scale = ((m - 1) as f64).sqrt();
    let mut factor = Matrix::zeros(d, m - 1);
    let mut running = obs[0].as_ref().to_vec();
    for j in 1..m {
        let xj = obs[j].as_ref();
        let jf = j as f64;
        let norm = (jf * (jf + 1.0)).sqrt() * scale;
        for i in 0..d {
            factor.set(i, j - 1, (running[i] - jf * xj[i]) / norm);
            running[i] += xj[i];
        }
    }
    factor
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending, eigenvectors
/// as the columns of the returned matrix.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::input("eigendecomposition needs a square matrix"));
    }
    let m = DMatrix::from_row_slice(n, n, a.as_slice());
    let eig = m.symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, eig.eigenvectors[(row, src)]);
        }
    }
    Ok((values, vectors))
}

/// `V * sqrt(Λ)` restricted to eigenvalues above `rel_tol * λ_max`, so that
/// the product with its transpose reproduces a PSD matrix.
pub fn psd_factor(cov: &Matrix, rel_tol: f64) -> Result<Matrix> {
    let n = cov.n_rows();
    let (values, vectors) = symmetric_eigen(cov)?;
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..n)
        .filter(|&k| values[k] > rel_tol * top && values[k] > 0.0)
        .collect();
    let mut f = Matrix::zeros(n, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        let s = values[k].sqrt();
        for r in 0..n {
            f.set(r, c, vectors.get(r, k) * s);
        }
    }
    Ok(f)
}

pub fn inverse(a: &Matrix) -> Option<Matrix> {
    let n = a.n_rows();
    let m = DMatrix::from_row_slice(n, n, a.as_slice());
    let inv = m.try_inverse()?;
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, inv[(i, j)]);
        }
    }
    Some(out)
}

/// `mean + factor * z`.
pub fn affine_draw(mean: &[f64], factor: &Matrix, z: &[f64], out: &mut [f64]) {
    out.copy_from_slice(mean);
    for (i, o) in out.iter_mut().enumerate() {
        let row = factor.row(i);
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(z) {
            acc += a * b;
        }
        *o += acc;
    }
}
