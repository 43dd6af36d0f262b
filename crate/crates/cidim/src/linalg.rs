//! Tolerance-aware dense linear algebra over covariance matrices.
//!
//! Inputs here are deliberately singular, so everything is built on SVD and
//! symmetric eigendecompositions — never Cholesky. Rank decisions use a
//! relative threshold `rank_tol * sigma_max`; conditional covariances are
//! re-symmetrized and eigenvalue-clamped against the scale of their
//! unconditional block so that downstream rank queries are anchored to the
//! input's magnitude rather than to rounding noise.

use nalgebra::DMatrix;

use crate::joint::GaussianJoint;
use crate::tol::Tolerances;
use crate::{Error, Result};

/// Singular values and orthonormal factors of the normalized cross-covariance
/// `Σ_X^{-1/2} Σ_XY Σ_Y^{-1/2}` of a Gaussian pair.
///
/// `sigma_vals` is sorted non-increasing, has length `min(r_x, r_y)`, and
/// every entry lies in `[0, 1]` after clamping values within `one_tol` of the
/// boundary. The factor columns are orthonormal and lie inside the ranges of
/// the corresponding marginal covariances, so a joint rebuilt from perturbed
/// singular values reproduces them exactly.
#[derive(Debug, Clone)]
pub struct CanonicalSpectrum {
    /// Canonical correlations, non-increasing.
    pub sigma_vals: Vec<f64>,
    /// Left singular vectors, one column per entry of `sigma_vals`.
    pub left_factor: DMatrix<f64>,
    /// Right singular vectors, one column per entry of `sigma_vals`.
    pub right_factor: DMatrix<f64>,
    /// Numeric rank of `Σ_X`.
    pub r_x: usize,
    /// Numeric rank of `Σ_Y`.
    pub r_y: usize,
}

impl CanonicalSpectrum {
    /// Number of canonical correlations equal to 1 within `one_tol`.
    pub fn unit_count(&self, tol: &Tolerances) -> usize {
        self.sigma_vals
            .iter()
            .filter(|&&s| s >= 1.0 - tol.one_tol)
            .count()
    }
}

/// SVD factors `(U, s, V^T)` with singular values sorted non-increasing.
///
/// `U` is the full `r x r` orthogonal factor (trailing columns span the left
/// null space) and `V^T` the full `c x c` one; `s` has `min(r, c)` entries.
///
/// Computed by one-sided Jacobi rotations rather than the library SVD: the
/// bidiagonalization path mishandles some singular covariance products
/// (reconstruction residuals around 1e-3 were observed on exactly singular
/// inputs), while Jacobi delivers high relative accuracy on the small dense
/// matrices this crate works with.
pub(crate) fn svd_parts(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (rows, cols) = (m.nrows(), m.ncols());
    if rows == 0 || cols == 0 {
        return (
            DMatrix::identity(rows, rows),
            Vec::new(),
            DMatrix::identity(cols, cols),
        );
    }

    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    let scale = a.amax();
    if scale > 0.0 {
        for _sweep in 0..60 {
            let mut rotated = false;
            for i in 0..cols {
                for j in (i + 1)..cols {
                    let alpha: f64 = a.column(i).dot(&a.column(i));
                    let beta: f64 = a.column(j).dot(&a.column(j));
                    let gamma: f64 = a.column(i).dot(&a.column(j));
                    if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for r in 0..rows {
                        let (ai, aj) = (a[(r, i)], a[(r, j)]);
                        a[(r, i)] = c * ai - s * aj;
                        a[(r, j)] = s * ai + c * aj;
                    }
                    for r in 0..cols {
                        let (vi, vj) = (v[(r, i)], v[(r, j)]);
                        v[(r, i)] = c * vi - s * vj;
                        v[(r, j)] = s * vi + c * vj;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }

    // Column norms are the singular values; sort descending.
    let mut norms: Vec<f64> = (0..cols).map(|i| a.column(i).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());
    let mut a_sorted = DMatrix::zeros(rows, cols);
    let mut v_sorted = DMatrix::zeros(cols, cols);
    for (new, &old) in order.iter().enumerate() {
        a_sorted.set_column(new, &a.column(old));
        v_sorted.set_column(new, &v.column(old));
    }
    norms.sort_by(|x, y| y.partial_cmp(x).unwrap());

    // Left factor: normalized rotated columns where the singular value
    // carries signal, orthonormal completion elsewhere.
    let floor = norms.first().copied().unwrap_or(0.0) * 1e-14;
    let mut u = DMatrix::zeros(rows, rows);
    let mut filled = 0;
    for (i, &norm) in norms.iter().enumerate().take(cols.min(rows)) {
        if norm > floor && norm > 0.0 {
            u.set_column(filled, &(a_sorted.column(i) / norm));
            filled += 1;
        }
    }
    complete_orthonormal(&mut u, filled);

    let s: Vec<f64> = norms.into_iter().take(rows.min(cols)).collect();
    (u, s, v_sorted.transpose())
}

/// Fills columns `filled..` of a square matrix with an orthonormal
/// completion of its first `filled` orthonormal columns. Each slot takes the
/// standard basis vector with the largest residual against everything
/// accepted so far (deterministic, and the residual is bounded below by a
/// dimension count).
fn complete_orthonormal(u: &mut DMatrix<f64>, filled: usize) {
    let n = u.nrows();
    let residual_of = |u: &DMatrix<f64>, have: usize, idx: usize| -> nalgebra::DVector<f64> {
        let mut vec = nalgebra::DVector::zeros(n);
        vec[idx] = 1.0;
        // Re-orthogonalize twice for stability.
        for _ in 0..2 {
            for c in 0..have {
                let proj: f64 = u.column(c).dot(&vec);
                vec.axpy(-proj, &u.column(c).into_owned(), 1.0);
            }
        }
        vec
    };
    for have in filled..n {
        let mut best: Option<(f64, nalgebra::DVector<f64>)> = None;
        for idx in 0..n {
            let vec = residual_of(u, have, idx);
            let norm = vec.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, vec));
            }
        }
        let (norm, vec) = best.expect("non-empty candidate set");
        assert!(norm > 1e-8, "orthonormal completion degenerated");
        u.set_column(have, &(vec / norm));
    }
}

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
pub(crate) fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    if m.nrows() == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eigen = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eigen.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap()
    });
    let mut values = Vec::with_capacity(order.len());
    let mut vectors = DMatrix::zeros(m.nrows(), m.nrows());
    for (new, &old) in order.iter().enumerate() {
        values.push(eigen.eigenvalues[old]);
        vectors.set_column(new, &eigen.eigenvectors.column(old));
    }
    (values, vectors)
}

/// Vertically stacks matrices that share a column count. An empty list or
/// all-empty rows produce a `0 x ncols` matrix.
pub(crate) fn stack_rows(mats: &[&DMatrix<f64>], ncols: usize) -> DMatrix<f64> {
    let total: usize = mats.iter().map(|m| m.nrows()).sum();
    let mut out = DMatrix::zeros(total, ncols);
    let mut row = 0;
    for m in mats {
        if m.nrows() > 0 {
            assert_eq!(m.ncols(), ncols, "stack_rows: column mismatch");
            out.view_mut((row, 0), (m.nrows(), ncols)).copy_from(*m);
            row += m.nrows();
        }
    }
    out
}

/// Block-diagonal assembly.
pub(crate) fn block_diag(mats: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = mats.iter().map(|m| m.nrows()).sum();
    let cols: usize = mats.iter().map(|m| m.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for m in mats {
        out.view_mut((r, c), (m.nrows(), m.ncols())).copy_from(*m);
        r += m.nrows();
        c += m.ncols();
    }
    out
}

/// Count of singular values above `rank_tol * sigma_max`. The zero matrix has
/// rank 0.
pub fn numeric_rank(m: &DMatrix<f64>, tol: &Tolerances) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let (_, s, _) = svd_parts(m);
    rank_from_singular_values(&s, tol)
}

/// Singular values of `m`, sorted non-increasing.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    svd_parts(m).1
}

pub(crate) fn rank_from_singular_values(s: &[f64], tol: &Tolerances) -> usize {
    let s_max = s.iter().cloned().fold(0.0_f64, f64::max);
    if s_max <= 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol.rank_tol * s_max).count()
}

/// Orthonormal rows spanning the left null space of `m`:
/// every returned row `b` satisfies `b * m ≈ 0`, and the row count equals
/// `nrows(m) - numeric_rank(m)`. Full-rank input yields an empty basis.
pub fn null_space_basis(m: &DMatrix<f64>, tol: &Tolerances) -> DMatrix<f64> {
    let rows = m.nrows();
    if rows == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.ncols() == 0 {
        return DMatrix::identity(rows, rows);
    }
    let (u, s, _) = svd_parts(m);
    let rank = rank_from_singular_values(&s, tol);
    let null_dim = rows - rank;
    let mut basis = DMatrix::zeros(null_dim, rows);
    for (row, col) in (rank..rows).enumerate() {
        basis.set_row(row, &u.column(col).transpose());
    }
    basis
}

/// Orthonormal rows spanning the row space of `m`; the row count equals
/// `numeric_rank(m)`.
pub fn row_space_basis(m: &DMatrix<f64>, tol: &Tolerances) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(0, m.ncols());
    }
    let (_, s, v_t) = svd_parts(m);
    let rank = rank_from_singular_values(&s, tol);
    v_t.rows(0, rank).into_owned()
}

fn check_symmetric_psd(m: &DMatrix<f64>, tol: &Tolerances) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let scale = m.amax().max(1.0);
    let mut deviation: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            deviation = deviation.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    let allowed = tol.rank_tol * scale;
    if deviation > allowed {
        return Err(Error::NotSymmetric { deviation, allowed });
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Spectral map `f(λ)` applied to a symmetric matrix, with eigenvalues below
/// `rank_tol * λ_max` treated as zero.
fn spectral_map(
    m: &DMatrix<f64>,
    tol: &Tolerances,
    f: impl Fn(f64) -> f64,
) -> Result<DMatrix<f64>> {
    let sym = check_symmetric_psd(m, tol)?;
    let (values, vectors) = sorted_symmetric_eigen(&sym);
    let lambda_max = values.iter().cloned().fold(0.0_f64, f64::max);
    if let Some(&lambda_min) = values.last() {
        if lambda_min < -tol.rank_tol * lambda_max.max(1.0) {
            return Err(Error::NotPsd {
                min_eigenvalue: lambda_min,
            });
        }
    }
    let threshold = tol.rank_tol * lambda_max;
    let mapped: Vec<f64> = values
        .iter()
        .map(|&l| if l > threshold { f(l) } else { 0.0 })
        .collect();
    Ok(assemble_spectral(&vectors, &mapped))
}

/// `Q * diag(values) * Q^T`, skipping zero entries.
fn assemble_spectral(vectors: &DMatrix<f64>, values: &[f64]) -> DMatrix<f64> {
    let n = vectors.nrows();
    let mut scaled = DMatrix::zeros(n, values.len());
    for (i, &v) in values.iter().enumerate() {
        if v != 0.0 {
            scaled.set_column(i, &(vectors.column(i) * v));
        }
    }
    let out = scaled * vectors.columns(0, values.len()).transpose();
    (&out + out.transpose()) * 0.5
}

/// Pseudo-inverse square root of a symmetric PSD matrix: `S` such that
/// `S * psd * S` is the orthogonal projector onto `range(psd)`.
pub fn pinv_sqrt(psd: &DMatrix<f64>, tol: &Tolerances) -> Result<DMatrix<f64>> {
    spectral_map(psd, tol, |l| 1.0 / l.sqrt())
}

/// PSD square root (eigenvalues below the rank threshold are zeroed).
pub fn psd_sqrt(psd: &DMatrix<f64>, tol: &Tolerances) -> Result<DMatrix<f64>> {
    spectral_map(psd, tol, f64::sqrt)
}

/// Moore–Penrose pseudo-inverse of a symmetric PSD matrix.
pub fn psd_pinv(psd: &DMatrix<f64>, tol: &Tolerances) -> Result<DMatrix<f64>> {
    spectral_map(psd, tol, |l| 1.0 / l)
}

/// Clamps a nearly-PSD symmetric matrix onto the PSD cone, zeroing
/// eigenvalues below `rank_tol * anchor_scale`. Used to clean up Schur
/// complements whose tiny eigenvalues are rounding noise relative to the
/// unconditional covariance they came from.
pub(crate) fn clamp_psd(m: &DMatrix<f64>, anchor_scale: f64, tol: &Tolerances) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    let sym = (m + m.transpose()) * 0.5;
    let (values, vectors) = sorted_symmetric_eigen(&sym);
    let lambda_max = values.iter().cloned().fold(0.0_f64, f64::max);
    let threshold = tol.rank_tol * lambda_max.max(anchor_scale);
    let clamped: Vec<f64> = values
        .iter()
        .map(|&l| if l > threshold { l } else { 0.0 })
        .collect();
    assemble_spectral(&vectors, &clamped)
}

/// Conditional covariance of `P x` given `Q x` for a Gaussian `x` with
/// covariance `sigma`: the Schur complement
/// `P Σ P^T − P Σ Q^T (Q Σ Q^T)^+ Q Σ P^T`, re-symmetrized and clamped.
pub fn conditional_cov_maps(
    sigma: &DMatrix<f64>,
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    if p.ncols() != sigma.nrows() || q.ncols() != sigma.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "maps expect {} coordinates, got {} and {}",
            sigma.nrows(),
            p.ncols(),
            q.ncols()
        )));
    }
    let p_cov = p * sigma * p.transpose();
    if q.nrows() == 0 {
        let scale = p_cov.amax();
        return Ok(clamp_psd(&p_cov, scale, tol));
    }
    let q_cov = q * sigma * q.transpose();
    let cross = p * sigma * q.transpose();
    let q_pinv = psd_pinv(&(&q_cov + q_cov.transpose()).scale(0.5), tol)?;
    let schur = &p_cov - &cross * q_pinv * cross.transpose();
    let scale = p_cov.amax();
    Ok(clamp_psd(&schur, scale, tol))
}

/// Conditional covariance `Σ_{I|J}` of the blocks in `target_blocks` given
/// the blocks in `given_blocks` (disjoint index sets). `J` may be empty, in
/// which case the marginal covariance is returned.
pub fn conditional_cov(
    joint: &GaussianJoint,
    target_blocks: &[usize],
    given_blocks: &[usize],
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    for &b in target_blocks.iter().chain(given_blocks) {
        if b >= joint.n_blocks() {
            return Err(Error::DimensionMismatch(format!(
                "block index {b} out of range (n = {})",
                joint.n_blocks()
            )));
        }
    }
    if target_blocks.iter().any(|b| given_blocks.contains(b)) {
        return Err(Error::DimensionMismatch(
            "target and given block sets must be disjoint".into(),
        ));
    }
    let p = joint.block_selector(target_blocks);
    let q = joint.block_selector(given_blocks);
    conditional_cov_maps(joint.sigma(), &p, &q, tol)
}

/// Canonical spectrum of a two-block joint: SVD of
/// `Σ_X^{-1/2} Σ_XY Σ_Y^{-1/2}` with pseudo-inverse square roots.
///
/// The factors are computed in the reduced coordinates spanned by each
/// marginal's range, so their columns always lie inside those ranges.
/// Singular values above `1 + one_tol` signal an invalid joint and raise
/// [`Error::SpectrumOutOfRange`]; values within `one_tol` of 1 are clamped
/// to 1.
pub fn canonical_spectrum(joint: &GaussianJoint, tol: &Tolerances) -> Result<CanonicalSpectrum> {
    let (d_x, _d_y) = joint.pair_dims()?;
    let sigma_x = joint.block_cov(0);
    let sigma_y = joint.block_cov(1);
    let cross = joint
        .sigma()
        .view((0, d_x), (d_x, joint.dim() - d_x))
        .into_owned();

    let (range_x, inv_sqrt_x) = range_and_inv_sqrt(&sigma_x, tol)?;
    let (range_y, inv_sqrt_y) = range_and_inv_sqrt(&sigma_y, tol)?;
    let r_x = range_x.ncols();
    let r_y = range_y.ncols();
    let d = r_x.min(r_y);

    let m_red = &inv_sqrt_x * range_x.transpose() * &cross * &range_y * &inv_sqrt_y;
    let (u_red, s, v_t_red) = svd_parts(&m_red);

    let mut sigma_vals = Vec::with_capacity(d);
    for &value in s.iter().take(d) {
        if value > 1.0 + tol.one_tol {
            return Err(Error::SpectrumOutOfRange { value });
        }
        sigma_vals.push(value.clamp(0.0, 1.0));
    }
    // Clamp near-1 values to exactly 1 for dimension counting.
    for v in &mut sigma_vals {
        if *v >= 1.0 - tol.one_tol {
            *v = 1.0;
        }
    }

    let left_factor = &range_x * u_red.columns(0, d.min(u_red.ncols()));
    let right_factor = &range_y * v_t_red.rows(0, d.min(v_t_red.nrows())).transpose();
    Ok(CanonicalSpectrum {
        sigma_vals,
        left_factor,
        right_factor,
        r_x,
        r_y,
    })
}

/// Orthonormal range basis (columns) of a PSD matrix together with
/// `diag(1/sqrt(λ))` over that range.
fn range_and_inv_sqrt(psd: &DMatrix<f64>, tol: &Tolerances) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let sym = check_symmetric_psd(psd, tol)?;
    let (values, vectors) = sorted_symmetric_eigen(&sym);
    let lambda_max = values.iter().cloned().fold(0.0_f64, f64::max);
    if let Some(&lambda_min) = values.last() {
        if lambda_min < -tol.rank_tol * lambda_max.max(1.0) {
            return Err(Error::NotPsd {
                min_eigenvalue: lambda_min,
            });
        }
    }
    let rank = values
        .iter()
        .filter(|&&l| l > tol.rank_tol * lambda_max)
        .count();
    let range = vectors.columns(0, rank).into_owned();
    let mut inv_sqrt = DMatrix::zeros(rank, rank);
    for i in 0..rank {
        inv_sqrt[(i, i)] = 1.0 / values[i].sqrt();
    }
    Ok((range, inv_sqrt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::validate_covariance;
    use crate::test_fixtures::{intro_joint, setup1_joint};
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn rank_of_setup1_is_five() {
        let joint = setup1_joint();
        assert_eq!(numeric_rank(joint.sigma(), &tol()), 5);
    }

    #[test]
    fn rank_of_zero_matrix_is_zero() {
        assert_eq!(numeric_rank(&DMatrix::zeros(3, 3), &tol()), 0);
    }

    #[test]
    fn rank_ignores_values_below_threshold() {
        let m = dmatrix![1.0, 0.0; 0.0, 1e-15];
        assert_eq!(numeric_rank(&m, &tol()), 1);
    }

    #[test]
    fn null_space_of_intro_example() {
        let joint = intro_joint();
        let basis = null_space_basis(joint.sigma(), &tol());
        assert_eq!(basis.nrows(), 1);
        // Proportional to [0, 1, 0, -1].
        let row = basis.row(0);
        let scale = row[1];
        assert!(scale.abs() > 0.1);
        assert_abs_diff_eq!(row[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(row[2], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(row[3], -scale, epsilon = 1e-10);
        let residual = (&basis * joint.sigma()).amax();
        assert!(residual < 1e-10);
    }

    #[test]
    fn null_space_of_identity_is_empty() {
        let basis = null_space_basis(&DMatrix::identity(3, 3), &tol());
        assert_eq!(basis.nrows(), 0);
    }

    #[test]
    fn null_space_of_rank_one_outer_product() {
        let v = dmatrix![1.0; 1.0];
        let m = &v * v.transpose();
        let basis = null_space_basis(&m, &tol());
        assert_eq!(basis.nrows(), 1);
        let row = basis.row(0);
        assert_abs_diff_eq!(row[0], -row[1], epsilon = 1e-12);
        assert_abs_diff_eq!(row.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn null_space_of_tall_matrix_covers_all_rows() {
        // 3x1 matrix: left null space has dimension 2, which a thin SVD
        // without padding would miss.
        let m = dmatrix![1.0; 2.0; 3.0];
        let basis = null_space_basis(&m, &tol());
        assert_eq!(basis.nrows(), 2);
        assert!((&basis * &m).amax() < 1e-12);
        let gram = &basis * basis.transpose();
        assert_abs_diff_eq!(gram[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gram[(1, 1)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gram[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn row_space_basics() {
        let m = dmatrix![1.0, 0.0; 0.0, 0.0];
        let basis = row_space_basis(&m, &tol());
        assert_eq!(basis.nrows(), 1);
        assert_abs_diff_eq!(basis[(0, 0)].abs(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(basis[(0, 1)], 0.0, epsilon = 1e-12);

        let joint = setup1_joint();
        let rows = row_space_basis(joint.sigma(), &tol());
        assert_eq!(rows.nrows(), 5);
        let gram = &rows * rows.transpose();
        assert!((gram - DMatrix::identity(5, 5)).amax() < 1e-10);

        assert_eq!(row_space_basis(&DMatrix::zeros(3, 3), &tol()).nrows(), 0);
    }

    #[test]
    fn pinv_sqrt_examples() {
        let id = DMatrix::identity(3, 3);
        assert!((pinv_sqrt(&id, &tol()).unwrap() - &id).amax() < 1e-12);

        let m = dmatrix![4.0, 0.0; 0.0, 0.0];
        let s = pinv_sqrt(&m, &tol()).unwrap();
        assert_abs_diff_eq!(s[(0, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s[(1, 1)], 0.0, epsilon = 1e-12);

        // S * Σ_X * S must be an orthogonal projector (eigenvalues in {0,1}).
        let sigma_x = setup1_joint().block_cov(0);
        let s = pinv_sqrt(&sigma_x, &tol()).unwrap();
        let proj = &s * &sigma_x * &s;
        let (values, _) = sorted_symmetric_eigen(&proj);
        for v in values {
            assert!(
                (v - 1.0).abs() < 1e-10 || v.abs() < 1e-10,
                "eigenvalue {v} not in {{0, 1}}"
            );
        }
        assert!((&proj * &proj - &proj).amax() < 1e-10);
    }

    #[test]
    fn pinv_sqrt_rejects_indefinite() {
        let m = dmatrix![1.0, 0.0; 0.0, -1.0];
        assert!(matches!(pinv_sqrt(&m, &tol()), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn conditional_cov_independent_blocks() {
        let sigma = dmatrix![
            2.0, 0.3, 0.0;
            0.3, 1.0, 0.0;
            0.0, 0.0, 5.0
        ];
        let joint = validate_covariance(&sigma, &[2, 1], &tol()).unwrap();
        let cond = conditional_cov(&joint, &[0], &[1], &tol()).unwrap();
        assert!((cond - dmatrix![2.0, 0.3; 0.3, 1.0]).amax() < 1e-12);
    }

    #[test]
    fn conditional_cov_perfect_correlation_is_zero() {
        let sigma = dmatrix![1.0, 1.0; 1.0, 1.0];
        let joint = validate_covariance(&sigma, &[1, 1], &tol()).unwrap();
        let cond = conditional_cov(&joint, &[0], &[1], &tol()).unwrap();
        assert!(cond.amax() < 1e-12);
    }

    #[test]
    fn conditional_cov_rejects_overlapping_sets() {
        let joint = validate_covariance(&DMatrix::identity(2, 2), &[1, 1], &tol()).unwrap();
        assert!(conditional_cov(&joint, &[0], &[0], &tol()).is_err());
    }

    #[test]
    fn canonical_spectrum_bivariate() {
        let sigma = dmatrix![1.0, 0.5; 0.5, 1.0];
        let joint = validate_covariance(&sigma, &[1, 1], &tol()).unwrap();
        let spec = canonical_spectrum(&joint, &tol()).unwrap();
        assert_eq!(spec.sigma_vals.len(), 1);
        assert_abs_diff_eq!(spec.sigma_vals[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn canonical_spectrum_setup1() {
        let joint = setup1_joint();
        let spec = canonical_spectrum(&joint, &tol()).unwrap();
        assert_eq!(spec.sigma_vals.len(), 4);
        assert_abs_diff_eq!(spec.sigma_vals[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(spec.sigma_vals[1], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(spec.sigma_vals[2], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(spec.sigma_vals[3], 0.3, epsilon = 1e-10);
        assert_eq!(spec.unit_count(&tol()), 3);
    }

    #[test]
    fn canonical_spectrum_zero_cross() {
        let sigma = DMatrix::identity(4, 4);
        let joint = validate_covariance(&sigma, &[2, 2], &tol()).unwrap();
        let spec = canonical_spectrum(&joint, &tol()).unwrap();
        assert!(spec.sigma_vals.iter().all(|&s| s.abs() < 1e-12));
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for trial in 0..60 {
            let rows = 1 + trial % 7;
            let cols = 1 + (trial / 7) % 7;
            let m = DMatrix::from_fn(rows, cols, |_, _| {
                rng.sample::<f64, _>(rand_distr::StandardNormal)
            });
            let (u, s, v_t) = svd_parts(&m);
            let mut sigma = DMatrix::zeros(rows, cols);
            for (i, &v) in s.iter().enumerate() {
                sigma[(i, i)] = v;
            }
            let recon = &u * &sigma * &v_t;
            assert!(
                (&recon - &m).amax() < 1e-12 * m.amax().max(1.0),
                "trial {trial}: residual {}",
                (&recon - &m).amax()
            );
            assert!((&u * u.transpose() - DMatrix::identity(rows, rows)).amax() < 1e-12);
            assert!((&v_t * v_t.transpose() - DMatrix::identity(cols, cols)).amax() < 1e-12);
            for w in s.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn svd_handles_singular_products_accurately() {
        // Regression: a normalized cross-covariance with one singular value
        // at exactly 1 and another near the rounding floor used to come back
        // from the library SVD with a 7e-6 error on the unit value.
        use crate::verify::make_structured_instance;
        let inst = make_structured_instance(&[5, 2], 1, 60_019, &tol()).unwrap();
        let spec = canonical_spectrum(&inst.joint, &tol()).unwrap();
        assert_eq!(spec.unit_count(&tol()), 1);
        assert!(spec.sigma_vals[0] <= 1.0);
    }
}
