//! Shared fixtures for the integration suites.

use cidim::{validate_covariance, GaussianJoint, Tolerances};
use nalgebra::{dmatrix, DMatrix};

pub fn tol() -> Tolerances {
    Tolerances::default()
}

/// Two 4-vectors sharing their first three coordinates almost surely.
pub fn setup1_joint() -> GaussianJoint {
    let marginal = dmatrix![
        1.0, 0.5, 0.0, 0.0;
        0.5, 1.0, 0.0, 0.0;
        0.0, 0.0, 1.0, 0.0;
        0.0, 0.0, 0.0, 1.0
    ];
    let mut cross = marginal.clone();
    cross[(3, 3)] = 0.3;
    build_pair(&marginal, &marginal, &cross)
}

/// Two 7-vectors with identity marginals and a diagonal cross-covariance of
/// `shared` ones followed by 0.5 entries.
pub fn setup2_joint(shared: usize) -> GaussianJoint {
    let marginal = DMatrix::identity(7, 7);
    let mut cross = DMatrix::zeros(7, 7);
    for i in 0..7 {
        cross[(i, i)] = if i < shared { 1.0 } else { 0.5 };
    }
    build_pair(&marginal, &marginal, &cross)
}

pub fn build_pair(
    sigma_x: &DMatrix<f64>,
    sigma_y: &DMatrix<f64>,
    cross: &DMatrix<f64>,
) -> GaussianJoint {
    let (dx, dy) = (sigma_x.nrows(), sigma_y.nrows());
    let mut sigma = DMatrix::zeros(dx + dy, dx + dy);
    sigma.view_mut((0, 0), (dx, dx)).copy_from(sigma_x);
    sigma.view_mut((0, dx), (dx, dy)).copy_from(cross);
    sigma
        .view_mut((dx, 0), (dy, dx))
        .copy_from(&cross.transpose());
    sigma.view_mut((dx, dx), (dy, dy)).copy_from(sigma_y);
    validate_covariance(&sigma, &[dx, dy], &tol()).unwrap()
}

/// Embeds a per-block map into the stacked coordinates of a joint.
pub fn embed_block_map(m: &DMatrix<f64>, joint: &GaussianJoint, block: usize) -> DMatrix<f64> {
    let offset = joint.block_dims()[..block].iter().sum::<usize>();
    let mut out = DMatrix::zeros(m.nrows(), joint.dim());
    out.view_mut((0, offset), (m.nrows(), m.ncols())).copy_from(m);
    out
}
