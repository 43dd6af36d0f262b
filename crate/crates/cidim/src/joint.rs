//! Block-partitioned joint covariance of n jointly Gaussian vectors.

use nalgebra::DMatrix;

use crate::tol::Tolerances;
use crate::{Error, Result};

/// Joint covariance of zero-mean Gaussian vectors `X_1, ..., X_n`.
///
/// The matrix is stored whole; `block_dims` records how its rows/columns
/// split into the per-source blocks. Construction goes through
/// [`validate_covariance`], which symmetrizes and checks positive
/// semidefiniteness, so a value of this type is always a usable covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianJoint {
    block_dims: Vec<usize>,
    sigma: DMatrix<f64>,
}

/// Validates a square matrix as a block-partitioned Gaussian covariance.
///
/// The matrix is symmetrized by averaging with its transpose before the PSD
/// check; asymmetry beyond `rank_tol` (scaled by the largest entry) and
/// eigenvalues below `-rank_tol * lambda_max` are rejected.
pub fn validate_covariance(
    sigma: &DMatrix<f64>,
    block_dims: &[usize],
    tol: &Tolerances,
) -> Result<GaussianJoint> {
    tol.validate()?;
    if sigma.nrows() != sigma.ncols() {
        return Err(Error::NotSquare {
            rows: sigma.nrows(),
            cols: sigma.ncols(),
        });
    }
    if block_dims.is_empty() || block_dims.contains(&0) {
        return Err(Error::DimensionMismatch(
            "block_dims must be non-empty with positive entries".into(),
        ));
    }
    let total: usize = block_dims.iter().sum();
    if total != sigma.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "block dims sum to {total} but the matrix is {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }

    let scale = sigma.amax().max(1.0);
    let mut deviation: f64 = 0.0;
    for i in 0..sigma.nrows() {
        for j in (i + 1)..sigma.ncols() {
            deviation = deviation.max((sigma[(i, j)] - sigma[(j, i)]).abs());
        }
    }
    let allowed = tol.rank_tol * scale;
    if deviation > allowed {
        return Err(Error::NotSymmetric { deviation, allowed });
    }

    let symmetrized = (sigma + sigma.transpose()) * 0.5;
    let eigen = symmetrized.clone().symmetric_eigen();
    let lambda_max = eigen.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let lambda_min = eigen
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if lambda_min < -tol.rank_tol * lambda_max.max(1.0) {
        return Err(Error::NotPsd {
            min_eigenvalue: lambda_min,
        });
    }

    Ok(GaussianJoint {
        block_dims: block_dims.to_vec(),
        sigma: symmetrized,
    })
}

impl GaussianJoint {
    /// Number of source vectors.
    pub fn n_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// Per-source dimensions `d_{X_1}, ..., d_{X_n}`.
    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    /// Total stacked dimension.
    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    /// The full joint covariance matrix.
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Offset of block `i` within the stacked coordinates.
    pub fn block_offset(&self, i: usize) -> usize {
        self.block_dims[..i].iter().sum()
    }

    /// Marginal covariance of block `i`.
    pub fn block_cov(&self, i: usize) -> DMatrix<f64> {
        let off = self.block_offset(i);
        let d = self.block_dims[i];
        self.sigma.view((off, off), (d, d)).into_owned()
    }

    /// Cross-covariance `E[X_i X_j^T]`.
    pub fn cross_cov(&self, i: usize, j: usize) -> DMatrix<f64> {
        let (oi, oj) = (self.block_offset(i), self.block_offset(j));
        self.sigma
            .view((oi, oj), (self.block_dims[i], self.block_dims[j]))
            .into_owned()
    }

    /// Marginal covariance of the blocks listed in `blocks`, in the given order.
    pub fn marginal_cov(&self, blocks: &[usize]) -> DMatrix<f64> {
        let coords = self.coords_of_blocks(blocks);
        select_submatrix(&self.sigma, &coords)
    }

    /// Covariance `Σ_{-i}` with block `i`'s rows and columns deleted.
    pub fn drop_block_cov(&self, i: usize) -> DMatrix<f64> {
        let blocks: Vec<usize> = (0..self.n_blocks()).filter(|&b| b != i).collect();
        self.marginal_cov(&blocks)
    }

    /// Stacked coordinate indices of the listed blocks.
    pub fn coords_of_blocks(&self, blocks: &[usize]) -> Vec<usize> {
        let mut coords = Vec::new();
        for &b in blocks {
            let off = self.block_offset(b);
            coords.extend(off..off + self.block_dims[b]);
        }
        coords
    }

    /// Selector matrix picking the coordinates of the listed blocks.
    pub fn block_selector(&self, blocks: &[usize]) -> DMatrix<f64> {
        let coords = self.coords_of_blocks(blocks);
        let mut sel = DMatrix::zeros(coords.len(), self.dim());
        for (row, &c) in coords.iter().enumerate() {
            sel[(row, c)] = 1.0;
        }
        sel
    }

    /// Requires exactly two blocks, returning `(d_X, d_Y)`.
    pub fn pair_dims(&self) -> Result<(usize, usize)> {
        if self.n_blocks() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "operation requires exactly two blocks, got {}",
                self.n_blocks()
            )));
        }
        Ok((self.block_dims[0], self.block_dims[1]))
    }

    /// Rebuilds a joint with the same block structure but a new matrix.
    pub fn with_sigma(&self, sigma: DMatrix<f64>, tol: &Tolerances) -> Result<GaussianJoint> {
        validate_covariance(&sigma, &self.block_dims, tol)
    }
}

/// Assembles the joint covariance of a pair from its marginal blocks and the
/// cross-covariance `E[X Y^T]`.
pub(crate) fn assemble_pair_sigma(
    sigma_x: &DMatrix<f64>,
    sigma_y: &DMatrix<f64>,
    cross: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (dx, dy) = (sigma_x.nrows(), sigma_y.nrows());
    let mut sigma = DMatrix::zeros(dx + dy, dx + dy);
    sigma.view_mut((0, 0), (dx, dx)).copy_from(sigma_x);
    sigma.view_mut((0, dx), (dx, dy)).copy_from(cross);
    sigma
        .view_mut((dx, 0), (dy, dx))
        .copy_from(&cross.transpose());
    sigma.view_mut((dx, dx), (dy, dy)).copy_from(sigma_y);
    sigma
}

pub(crate) fn select_submatrix(m: &DMatrix<f64>, coords: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(coords.len(), coords.len());
    for (r, &i) in coords.iter().enumerate() {
        for (c, &j) in coords.iter().enumerate() {
            out[(r, c)] = m[(i, j)];
        }
    }
    out
}
