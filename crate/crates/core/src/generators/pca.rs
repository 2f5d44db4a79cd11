//! PCA-based enlargement of a simulated panel with extra assets.
//!
//! The centred panel `R` (assets x time) is decomposed as `R = W R'` with the
//! eigenvectors of the asset covariance as columns of `W`. New assets get
//! new rows of `W` drawn from a Gaussian fitted to the existing rows; the
//! components are then projected back through the enlarged matrix.

use alloc::vec::Vec;

use crate::generators::normals;
use crate::linalg::{affine_draw, mean_vector, psd_factor, sample_covariance, symmetric_eigen};
use crate::rng::rng_from_seed;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    /// Eigenvectors as columns; row `i` holds asset `i`'s loadings.
    pub transform: Matrix,
    /// Projected series `Wᵀ R`, one row per component.
    pub components: Matrix,
    pub asset_means: Vec<f64>,
    /// Mean and covariance of the rows of `transform`.
    pub row_mean: Vec<f64>,
    pub row_covariance: Matrix,
}

impl PcaBasis {
    /// `rows` is assets x time.
    pub fn fit(rows: &Matrix) -> Result<Self> {
        let (n, t) = (rows.n_rows(), rows.n_cols());
        if n < 2 || t < 2 {
            return Err(Error::input("PCA needs at least two assets and two steps"));
        }
        let asset_means: Vec<f64> = rows.rows().map(crate::stats::mean).collect();
        let mut centred = rows.clone();
        for (i, &m) in asset_means.iter().enumerate() {
            centred.row_mut(i).iter_mut().for_each(|v| *v -= m);
        }
        let mut cov = centred.gram();
        for i in 0..n {
            for j in 0..n {
                cov.set(i, j, cov.get(i, j) / (t - 1) as f64);
            }
        }
        let (_, transform) = symmetric_eigen(&cov)?;
        let components = transform.transpose().matmul(&centred)?;
        let loadings: Vec<&[f64]> = transform.rows().collect();
        Ok(PcaBasis {
            row_mean: mean_vector(&loadings),
            row_covariance: sample_covariance(&loadings),
            transform,
            components,
            asset_means,
        })
    }

    pub fn dim(&self) -> usize {
        self.transform.n_rows()
    }

    /// `transform * components` plus asset means; rows beyond the fitted
    /// assets receive the average of the fitted means.
    pub fn project(&self, transform: &Matrix) -> Result<Matrix> {
        let mut out = transform.matmul(&self.components)?;
        let fallback = crate::stats::mean(&self.asset_means);
        for i in 0..out.n_rows() {
            let m = self.asset_means.get(i).copied().unwrap_or(fallback);
            out.row_mut(i).iter_mut().for_each(|v| *v += m);
        }
        Ok(out)
    }
}

/// Enlarged transformation matrix with `target_dim` rows; the original rows
/// are kept verbatim.
pub fn pca_enlarge(basis: &PcaBasis, target_dim: usize, seed: u64) -> Result<Matrix> {
    let n = basis.dim();
    if target_dim < n {
        return Err(Error::param("target_dim", "smaller than the fitted dimension"));
    }
    let mut out = Matrix::zeros(target_dim, basis.transform.n_cols());
    for i in 0..n {
        out.row_mut(i).copy_from_slice(basis.transform.row(i));
    }
    if target_dim == n {
        return Ok(out);
    }
    let factor = psd_factor(&basis.row_covariance, 1e-12)?;
    let mut rng = rng_from_seed(seed);
    for i in n..target_dim {
        let z = normals(&mut rng, factor.n_cols());
        affine_draw(&basis.row_mean, &factor, &z, out.row_mut(i));
    }
    Ok(out)
}
