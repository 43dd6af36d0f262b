//! Common-information dimensions (CID, RCID, GKCID) of jointly Gaussian
//! vectors and constructions of the minimum-dimension shared variable `W`.
//!
//! For two vectors the dimension is
//! `rank(Σ_X) + rank(Σ_Y) − rank(Σ)` and `W = N_X X` where
//! `N = [N_X  −N_Y]` spans the left null space of `Σ`. For `n` vectors the
//! dimension is `Σ_i rank(Σ_{-i}) − (n−1) rank(Σ)` and `W = [Z_1, ..., Z_n]`
//! is built sequentially: `Z_i` collects the information `X_i` carries about
//! the later sources that none of the earlier sources carries.
//!
//! Singular marginals are handled by pre-reduction: each `X_i` is replaced by
//! `F_i X_i` with `F_i` a row-space basis of its covariance, and all returned
//! maps are composed with the reductions so they act on the original
//! coordinates.

use nalgebra::DMatrix;

use crate::joint::GaussianJoint;
use crate::linalg::{
    block_diag, conditional_cov, conditional_cov_maps, null_space_basis, numeric_rank,
    row_space_basis, stack_rows,
};
use crate::tol::Tolerances;
use crate::{Error, Result};

/// Linear maps defining the shared variable `W` (and diagnostics).
#[derive(Debug, Clone)]
pub struct CommonVariableSpec {
    /// Maps the stacked sources `[X_1, ..., X_n]` to `W`. Has `dimension`
    /// rows and full numeric row rank.
    pub w_matrix: DMatrix<f64>,
    /// One map per source producing the same `W` from each `X_i`
    /// individually (Gács–Körner mode only).
    pub per_source_maps: Option<Vec<DMatrix<f64>>>,
    /// Dimension of `W`.
    pub dimension: usize,
    /// Step-by-step record when `W` was produced by the sequential
    /// n-vector construction.
    pub trace: Option<SequentialTrace>,
    /// Pair-construction maps and complements for conditional checks.
    pub pair_detail: Option<PairDetail>,
}

/// Maps kept by the two-vector construction, all acting on the original
/// (unreduced) block coordinates.
#[derive(Debug, Clone)]
pub struct PairDetail {
    /// `N_X` composed with the X-reduction; `left_map * x = W`.
    pub left_map: DMatrix<f64>,
    /// `N_Y` composed with the Y-reduction; equals `left_map * x` almost
    /// surely when applied to `y`.
    pub right_map: DMatrix<f64>,
    /// Complementary basis `N'_X` composed with the X-reduction.
    pub left_complement: DMatrix<f64>,
    /// Complementary basis `N'_Y` composed with the Y-reduction.
    pub right_complement: DMatrix<f64>,
}

/// One step of the sequential n-vector construction.
#[derive(Debug, Clone)]
pub struct SequentialStep {
    /// Row-space basis of `Σ_{i|1:i-1}`, in `X_i` coordinates.
    pub a_basis: DMatrix<f64>,
    /// Row-space basis of `Σ_{i+1:n|1:i-1}`, in `[X_{i+1}..X_n]` coordinates.
    pub b_basis: DMatrix<f64>,
    /// `U_i = A_i X_i` as a map on the stacked coordinates.
    pub u_map: DMatrix<f64>,
    /// `Y_i = B_i [X_{i+1}..X_n]` as a map on the stacked coordinates.
    pub y_map: DMatrix<f64>,
    /// Left null-space basis of `Cov([U_i; Y_i] | X_{1:i-1})`, partitioned
    /// as `[N_i  N̄_i]` with `N_i` spanning the first `r(U_i)` columns.
    pub null_basis: DMatrix<f64>,
    /// `Z_i = N_i U_i` as a map on the stacked coordinates.
    pub z_map: DMatrix<f64>,
}

/// Full record of the sequential construction: per-step bases plus the final
/// residual maps `T_i = C_i X_i`.
#[derive(Debug, Clone)]
pub struct SequentialTrace {
    pub steps: Vec<SequentialStep>,
    /// Row-space bases of `Σ_{X_i|Z}`, in `X_i` coordinates.
    pub c_bases: Vec<DMatrix<f64>>,
    /// `T_i = C_i X_i` as maps on the stacked coordinates.
    pub t_maps: Vec<DMatrix<f64>>,
    /// Row counts of the `Z_i`.
    pub z_dims: Vec<usize>,
}

impl SequentialTrace {
    /// Map producing the stacked `T = [T_1, ..., T_n]`.
    pub fn t_matrix(&self, total_dim: usize) -> DMatrix<f64> {
        let refs: Vec<&DMatrix<f64>> = self.t_maps.iter().collect();
        stack_rows(&refs, total_dim)
    }
}

/// Chain-constraint structure behind the Gács–Körner dimension.
#[derive(Debug, Clone)]
pub struct GkStructure {
    /// Row-space bases `F_i` of the marginal covariances.
    pub f_bases: Vec<DMatrix<f64>>,
    /// Constraint matrix whose left null space encodes all tuples of linear
    /// functionals with `a_1 X'_1 = -a_2 X'_2 = a_3 X'_3 = ...` almost
    /// surely: rows are indexed by the stacked reduced coordinates, and the
    /// i-th column group holds the joint covariance of `[X'_i; X'_{i+1}]`.
    pub sigma_tilde: DMatrix<f64>,
    /// Left null-space basis of `sigma_tilde`, partitioned per source.
    pub null_basis: DMatrix<f64>,
    /// Reduced dimensions `r_i = rank(Σ_{X_i})`.
    pub reduced_dims: Vec<usize>,
}

impl GkStructure {
    /// `r(Σ̃) − rank(Σ̃)`, the Gács–Körner common-information dimension.
    pub fn dimension(&self) -> usize {
        self.null_basis.nrows()
    }

    /// The columns of the null basis belonging to source `i`.
    pub fn null_partition(&self, i: usize) -> DMatrix<f64> {
        let offset: usize = self.reduced_dims[..i].iter().sum();
        self.null_basis
            .columns(offset, self.reduced_dims[i])
            .into_owned()
    }
}

/// CID of a two-block joint: `rank(Σ_X) + rank(Σ_Y) − rank(Σ)`.
pub fn cid_pair(joint: &GaussianJoint, tol: &Tolerances) -> Result<usize> {
    joint.pair_dims()?;
    let r_x = numeric_rank(&joint.block_cov(0), tol);
    let r_y = numeric_rank(&joint.block_cov(1), tol);
    let r = numeric_rank(joint.sigma(), tol);
    Ok((r_x + r_y).saturating_sub(r))
}

/// CID of an n-block joint: `Σ_i rank(Σ_{-i}) − (n−1) rank(Σ)`.
pub fn cid_multi(joint: &GaussianJoint, tol: &Tolerances) -> Result<usize> {
    let n = joint.n_blocks();
    if n < 2 {
        return Err(Error::DimensionMismatch(
            "common information dimension needs at least two blocks".into(),
        ));
    }
    let mut sum = 0usize;
    for i in 0..n {
        sum += numeric_rank(&joint.drop_block_cov(i), tol);
    }
    let r = numeric_rank(joint.sigma(), tol);
    Ok(sum.saturating_sub((n - 1) * r))
}

/// Rényi common-information dimension; coincides with [`cid_multi`] for
/// Gaussian vectors under linear maps.
pub fn rcid(joint: &GaussianJoint, tol: &Tolerances) -> Result<usize> {
    cid_multi(joint, tol)
}

/// Builds the chain-constraint structure for the Gács–Körner dimension.
///
/// A row vector `[a_1, ..., a_n]` (blocked by the reduced dimensions)
/// annihilates `sigma_tilde` exactly when `a_i X'_i + a_{i+1} X'_{i+1} = 0`
/// almost surely for every adjacent pair, i.e. when the alternating-sign
/// functionals `(−1)^{i+1} a_i X'_i` all agree. The dimension of that null
/// space is `r(Σ̃) − rank(Σ̃)`.
pub fn gk_structure(joint: &GaussianJoint, tol: &Tolerances) -> Result<GkStructure> {
    let n = joint.n_blocks();
    if n < 2 {
        return Err(Error::DimensionMismatch(
            "GK dimension needs at least two blocks".into(),
        ));
    }
    let f_bases: Vec<DMatrix<f64>> = (0..n)
        .map(|i| row_space_basis(&joint.block_cov(i), tol))
        .collect();
    let reduced_dims: Vec<usize> = f_bases.iter().map(|f| f.nrows()).collect();
    let total_reduced: usize = reduced_dims.iter().sum();
    let col_total: usize = (0..n - 1).map(|i| reduced_dims[i] + reduced_dims[i + 1]).sum();

    let mut sigma_tilde = DMatrix::zeros(total_reduced, col_total);
    let row_offset = |i: usize| -> usize { reduced_dims[..i].iter().sum() };
    let mut col = 0;
    for i in 0..n - 1 {
        let (ri, rj) = (reduced_dims[i], reduced_dims[i + 1]);
        let fi = &f_bases[i];
        let fj = &f_bases[i + 1];
        let cov_ii = fi * joint.block_cov(i) * fi.transpose();
        let cov_ij = fi * joint.cross_cov(i, i + 1) * fj.transpose();
        let cov_jj = fj * joint.block_cov(i + 1) * fj.transpose();
        sigma_tilde
            .view_mut((row_offset(i), col), (ri, ri))
            .copy_from(&cov_ii);
        sigma_tilde
            .view_mut((row_offset(i), col + ri), (ri, rj))
            .copy_from(&cov_ij);
        sigma_tilde
            .view_mut((row_offset(i + 1), col), (rj, ri))
            .copy_from(&cov_ij.transpose());
        sigma_tilde
            .view_mut((row_offset(i + 1), col + ri), (rj, rj))
            .copy_from(&cov_jj);
        col += ri + rj;
    }

    let null_basis = null_space_basis(&sigma_tilde, tol);
    Ok(GkStructure {
        f_bases,
        sigma_tilde,
        null_basis,
        reduced_dims,
    })
}

/// Gács–Körner common-information dimension `r(Σ̃) − rank(Σ̃)`.
pub fn gkcid(joint: &GaussianJoint, tol: &Tolerances) -> Result<usize> {
    Ok(gk_structure(joint, tol)?.dimension())
}

/// Constructs a minimum-dimension `W` for two blocks: `W = N_X X` with
/// `N = [N_X  −N_Y]` a left null-space basis of the (reduced) joint
/// covariance. The relation `N_X X = N_Y Y` holds almost surely.
pub fn construct_w_pair(joint: &GaussianJoint, tol: &Tolerances) -> Result<CommonVariableSpec> {
    let (d_x, d_y) = joint.pair_dims()?;
    let f_x = row_space_basis(&joint.block_cov(0), tol);
    let f_y = row_space_basis(&joint.block_cov(1), tol);
    let (r_x, r_y) = (f_x.nrows(), f_y.nrows());

    let reducer = block_diag(&[&f_x, &f_y]);
    let sigma_red = &reducer * joint.sigma() * reducer.transpose();
    let n = null_space_basis(&sigma_red, tol);
    let dimension = n.nrows();

    let expected = cid_pair(joint, tol)?;
    if dimension != expected {
        return Err(Error::InternalInconsistency(format!(
            "null space has {dimension} rows but the rank formula gives {expected}; \
             the tolerances are inconsistent for this input"
        )));
    }

    let n_x = n.columns(0, r_x).into_owned();
    let n_y = -n.columns(r_x, r_y).into_owned();
    if numeric_rank(&n_x, tol) != dimension || numeric_rank(&n_y, tol) != dimension {
        return Err(Error::InternalInconsistency(
            "null-space partition lost row rank".into(),
        ));
    }
    let left_map = &n_x * &f_x;
    let right_map = &n_y * &f_y;
    let left_complement = null_space_basis(&n_x.transpose(), tol) * &f_x;
    let right_complement = null_space_basis(&n_y.transpose(), tol) * &f_y;

    let mut w_matrix = DMatrix::zeros(dimension, d_x + d_y);
    w_matrix.view_mut((0, 0), (dimension, d_x)).copy_from(&left_map);
    let _ = d_y;

    Ok(CommonVariableSpec {
        w_matrix,
        per_source_maps: None,
        dimension,
        trace: None,
        pair_detail: Some(PairDetail {
            left_map,
            right_map,
            left_complement,
            right_complement,
        }),
    })
}

/// Constructs a minimum-dimension `W = [Z_1, ..., Z_n]` for n blocks by the
/// sequential extraction: at step `i`, `U_i` keeps the part of `X_i` not
/// determined by earlier sources, `Y_i` does the same for the later sources,
/// and `Z_i = N_i U_i` extracts the a.s. relations between them from the
/// left null space of their conditional covariance.
///
/// The finite-entropy companion variable is not built; the returned trace
/// exposes `T_i` and the conditional covariance inputs so callers can verify
/// its existence precondition instead.
pub fn construct_w_multi(joint: &GaussianJoint, tol: &Tolerances) -> Result<CommonVariableSpec> {
    let n = joint.n_blocks();
    if n < 2 {
        return Err(Error::DimensionMismatch(
            "construction needs at least two blocks".into(),
        ));
    }
    let total = joint.dim();
    let mut steps = Vec::with_capacity(n);
    let mut z_dims = Vec::with_capacity(n);
    let mut z_maps: Vec<DMatrix<f64>> = Vec::with_capacity(n);

    for i in 0..n {
        let earlier: Vec<usize> = (0..i).collect();
        let later: Vec<usize> = (i + 1..n).collect();
        let sel_earlier = joint.block_selector(&earlier);

        let cond_i = conditional_cov(joint, &[i], &earlier, tol)?;
        let a_basis = row_space_basis(&cond_i, tol);
        let u_map = &a_basis * joint.block_selector(&[i]);

        let cond_later = conditional_cov(joint, &later, &earlier, tol)?;
        let b_basis = row_space_basis(&cond_later, tol);
        let y_map = &b_basis * joint.block_selector(&later);

        let stacked = stack_rows(&[&u_map, &y_map], total);
        let cond_uy = conditional_cov_maps(joint.sigma(), &stacked, &sel_earlier, tol)?;
        let null_basis = null_space_basis(&cond_uy, tol);
        let n_i = null_basis.columns(0, u_map.nrows()).into_owned();
        let z_map = &n_i * &u_map;

        z_dims.push(z_map.nrows());
        z_maps.push(z_map.clone());
        steps.push(SequentialStep {
            a_basis,
            b_basis,
            u_map,
            y_map,
            null_basis,
            z_map,
        });
    }

    let z_refs: Vec<&DMatrix<f64>> = z_maps.iter().collect();
    let w_matrix = stack_rows(&z_refs, total);
    let dimension = w_matrix.nrows();
    let expected = cid_multi(joint, tol)?;
    if dimension != expected {
        return Err(Error::InternalInconsistency(format!(
            "sequential construction produced {dimension} dimensions but the rank \
             formula gives {expected}; the tolerances are inconsistent for this input"
        )));
    }

    let mut c_bases = Vec::with_capacity(n);
    let mut t_maps = Vec::with_capacity(n);
    for i in 0..n {
        let sel_i = joint.block_selector(&[i]);
        let cond = conditional_cov_maps(joint.sigma(), &sel_i, &w_matrix, tol)?;
        let c_i = row_space_basis(&cond, tol);
        let t_map = &c_i * &sel_i;
        c_bases.push(c_i);
        t_maps.push(t_map);
    }

    Ok(CommonVariableSpec {
        w_matrix,
        per_source_maps: None,
        dimension,
        trace: Some(SequentialTrace {
            steps,
            c_bases,
            t_maps,
            z_dims,
        }),
        pair_detail: None,
    })
}

/// Constructs the maximum-dimension common variable extractable from each
/// source individually: `W = (−1)^{i+1} N_i F_i X_i`, with the `N_i` taken
/// from the partitioned left null basis of the chain-constraint matrix.
pub fn construct_gk_w(joint: &GaussianJoint, tol: &Tolerances) -> Result<CommonVariableSpec> {
    let structure = gk_structure(joint, tol)?;
    let n = joint.n_blocks();
    let dimension = structure.dimension();

    let mut per_source_maps = Vec::with_capacity(n);
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let map = (structure.null_partition(i) * &structure.f_bases[i]) * sign;
        per_source_maps.push(map);
    }

    let mut w_matrix = DMatrix::zeros(dimension, joint.dim());
    if dimension > 0 {
        w_matrix
            .view_mut((0, 0), (dimension, joint.block_dims()[0]))
            .copy_from(&per_source_maps[0]);
    }

    Ok(CommonVariableSpec {
        w_matrix,
        per_source_maps: Some(per_source_maps),
        dimension,
        trace: None,
        pair_detail: None,
    })
}
