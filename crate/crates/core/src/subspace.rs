//! Spectral subspace estimation. Hyperspectral scenes are strongly
//! band-correlated, so the target `Z` is represented as `Z = C x_3 R` with an
//! orthonormal basis `R` learned from the low-resolution HSI.

use crate::error::{Error, Result};
use crate::linalg::{svd_real, Mat};
use crate::tensor::{mode_n_product, unfold, Tensor3};

/// Orthonormal spectral basis: `S x L` with `R^T R = I`, deterministic sign
/// convention (the largest-magnitude entry of each column is positive).
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    r: Mat,
}

impl SpectralBasis {
    /// The basis matrix, bands x subspace dimension.
    pub fn r(&self) -> &Mat {
        &self.r
    }

    pub fn bands(&self) -> usize {
        self.r.rows
    }

    pub fn rank(&self) -> usize {
        self.r.cols
    }

    /// Wraps an explicitly supplied basis; `R^T R = I` must hold within
    /// 1e-10 per entry.
    pub fn from_orthonormal(r: Mat) -> Result<SpectralBasis> {
        if r.cols < 1 || r.cols > r.rows {
            return Err(Error::Parameter(format!(
                "basis must be tall with at least one column, got {}x{}",
                r.rows, r.cols
            )));
        }
        let gram = r.transpose().mul(&r);
        for i in 0..r.cols {
            for j in 0..r.cols {
                let want = if i == j { 1.0 } else { 0.0 };
                if (gram.get(i, j) - want).abs() > 1e-10 {
                    return Err(Error::Parameter(format!(
                        "basis columns are not orthonormal: gram({i},{j}) = {}",
                        gram.get(i, j)
                    )));
                }
            }
        }
        Ok(SpectralBasis { r })
    }
}

/// Left singular vectors of the mode-3 unfolding, truncated to the leading
/// `l` columns. Requires `1 <= l < bands`.
pub fn estimate_basis(x: &Tensor3, l: usize) -> Result<SpectralBasis> {
    let bands = x.dims().2;
    if l < 1 || l >= bands {
        return Err(Error::Parameter(format!(
            "subspace dimension must satisfy 1 <= L < bands, got L={l}, bands={bands}"
        )));
    }
    let x3 = unfold(x, 3);
    let svd = svd_real(&x3);
    let mut r = Mat::zeros(bands, l);
    for j in 0..l {
        // Sign convention: flip the column if its largest-magnitude entry is
        // negative; first occurrence wins on exact ties.
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for i in 0..bands {
            let a = svd.u.get(i, j).abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        let flip = if svd.u.get(best, j) < 0.0 { -1.0 } else { 1.0 };
        for i in 0..bands {
            r.set(i, j, flip * svd.u.get(i, j));
        }
    }
    Ok(SpectralBasis { r })
}

/// Coefficients of `z` in the basis: mode-3 product with `R^T`.
pub fn project(z: &Tensor3, basis: &SpectralBasis) -> Result<Tensor3> {
    if z.dims().2 != basis.bands() {
        return Err(Error::Dimension(format!(
            "tensor has {} bands, basis expects {}",
            z.dims().2,
            basis.bands()
        )));
    }
    mode_n_product(z, &basis.r.transpose(), 3)
}

/// Back-projection from coefficients to bands: mode-3 product with `R`.
pub fn reconstruct(c: &Tensor3, basis: &SpectralBasis) -> Result<Tensor3> {
    if c.dims().2 != basis.rank() {
        return Err(Error::Dimension(format!(
            "coefficient tensor has {} channels, basis rank is {}",
            c.dims().2,
            basis.rank()
        )));
    }
    mode_n_product(c, &basis.r, 3)
}
