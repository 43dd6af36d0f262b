//! Monte Carlo verification harness and ground-truth instance generator.
//!
//! Sampling goes through the eigendecomposition factor of the covariance, so
//! deliberately singular joints sample exactly on their support. Almost-sure
//! linear relations (`N_X X = N_Y Y` and friends) are exact, not statistical:
//! their sampled residuals scale with float rounding, never with the sample
//! count, and are checked against `as_tol`.
//!
//! [`make_structured_instance`] plants a shared source of known dimension
//! inside generic mixings, turning "almost surely generic" into a checked
//! property: rank-deficient draws are rejected and the realized dimension is
//! asserted against the plant.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cid::{cid_multi, SequentialTrace, CommonVariableSpec};
use crate::joint::{validate_covariance, GaussianJoint};
use crate::linalg::{conditional_cov_maps, numeric_rank, sorted_symmetric_eigen, stack_rows};
use crate::tol::Tolerances;
use crate::{Error, Result};

/// A batch of joint samples; rows are draws, columns the stacked coordinates.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub data: DMatrix<f64>,
    pub seed: u64,
    pub count: usize,
}

/// Draws `count` samples of the joint, deterministically in `seed`.
pub fn sample_joint(joint: &GaussianJoint, count: usize, seed: u64) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let d = joint.dim();
    let (values, vectors) = sorted_symmetric_eigen(joint.sigma());
    let mut factor = DMatrix::zeros(d, d);
    for (i, &l) in values.iter().enumerate() {
        if l > 0.0 {
            factor.set_column(i, &(vectors.column(i) * l.sqrt()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = DMatrix::zeros(count, d);
    let mut z = nalgebra::DVector::zeros(d);
    for row in 0..count {
        for i in 0..d {
            z[i] = rng.sample(StandardNormal);
        }
        let x = &factor * &z;
        data.row_mut(row).copy_from(&x.transpose());
    }
    Ok(SampleBatch {
        data,
        seed,
        count,
    })
}

/// Maximum scaled residual of the almost-sure relation
/// `left_map s = right_map s` over a sample batch. Both maps act on the full
/// stacked coordinates; the residual is divided by the relation's natural
/// scale (the largest value either side attains, floored at 1).
pub fn check_as_relation(
    batch: &SampleBatch,
    left_map: &DMatrix<f64>,
    right_map: &DMatrix<f64>,
) -> Result<f64> {
    let d = batch.data.ncols();
    if left_map.ncols() != d || right_map.ncols() != d || left_map.nrows() != right_map.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "maps {}x{} and {}x{} do not conform to {d} stacked coordinates",
            left_map.nrows(),
            left_map.ncols(),
            right_map.nrows(),
            right_map.ncols()
        )));
    }
    if left_map.nrows() == 0 {
        return Ok(0.0);
    }
    let left = &batch.data * left_map.transpose();
    let right = &batch.data * right_map.transpose();
    let scale = left.amax().max(right.amax()).max(1.0);
    Ok((left - right).amax() / scale)
}

/// Verifies that conditioned on `W = N_X X`, the stacked complements
/// `[N'_X X; N'_Y Y]` keep a full-rank covariance matrix (the precondition
/// for breaking the residual dependency with finite randomness).
pub fn check_conditional_full_rank(
    joint: &GaussianJoint,
    spec: &CommonVariableSpec,
    tol: &Tolerances,
) -> Result<bool> {
    let (d_x, d_y) = joint.pair_dims()?;
    let detail = spec.pair_detail.as_ref().ok_or_else(|| {
        Error::InvalidArgument("spec carries no pair construction detail".into())
    })?;
    let total = d_x + d_y;
    let embed = |m: &DMatrix<f64>, offset: usize| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(m.nrows(), total);
        out.view_mut((0, offset), (m.nrows(), m.ncols())).copy_from(m);
        out
    };
    let comp_x = embed(&detail.left_complement, 0);
    let comp_y = embed(&detail.right_complement, d_x);
    let stacked = stack_rows(&[&comp_x, &comp_y], total);
    let w_map = embed(&detail.left_map, 0);
    let cond = conditional_cov_maps(joint.sigma(), &stacked, &w_map, tol)?;
    Ok(numeric_rank(&cond, tol) == cond.nrows())
}

/// Outcome of the structural checks behind the sequential construction.
#[derive(Debug, Clone)]
pub struct SequentialReport {
    /// `Σ_Z` is numerically full rank.
    pub z_cov_full_rank: bool,
    /// `Σ_{T|Z}` is numerically full rank.
    pub t_given_z_full_rank: bool,
    /// Largest conditional variance of each `Z_i` given the other blocks,
    /// relative to its own scale; all must sit below `as_tol`.
    pub z_conditional_residuals: Vec<f64>,
}

impl SequentialReport {
    pub fn pass(&self, tol: &Tolerances) -> bool {
        self.z_cov_full_rank
            && self.t_given_z_full_rank
            && self
                .z_conditional_residuals
                .iter()
                .all(|&r| r < tol.as_tol)
    }
}

/// Runs the structural lemma checks on a sequential-construction trace:
/// full-rank `Σ_Z`, full-rank `Σ_{T|Z}`, and each `Z_i` being a linear
/// function of the other blocks (near-zero conditional variance).
pub fn check_sequential_lemmas(
    trace: &SequentialTrace,
    joint: &GaussianJoint,
    tol: &Tolerances,
) -> Result<SequentialReport> {
    let total = joint.dim();
    let z_refs: Vec<&DMatrix<f64>> = trace.steps.iter().map(|s| &s.z_map).collect();
    let w = stack_rows(&z_refs, total);
    let z_cov = &w * joint.sigma() * w.transpose();
    let z_cov_full_rank = numeric_rank(&z_cov, tol) == z_cov.nrows();

    let t = trace.t_matrix(total);
    let cond_t = conditional_cov_maps(joint.sigma(), &t, &w, tol)?;
    let t_given_z_full_rank = numeric_rank(&cond_t, tol) == cond_t.nrows();

    let mut z_conditional_residuals = Vec::with_capacity(trace.steps.len());
    for (i, step) in trace.steps.iter().enumerate() {
        if step.z_map.nrows() == 0 {
            z_conditional_residuals.push(0.0);
            continue;
        }
        let others: Vec<usize> = (0..joint.n_blocks()).filter(|&b| b != i).collect();
        let sel = joint.block_selector(&others);
        let cond = conditional_cov_maps(joint.sigma(), &step.z_map, &sel, tol)?;
        let scale = (&step.z_map * joint.sigma() * step.z_map.transpose())
            .amax()
            .max(1.0);
        z_conditional_residuals.push(cond.amax() / scale);
    }

    Ok(SequentialReport {
        z_cov_full_rank,
        t_given_z_full_rank,
        z_conditional_residuals,
    })
}

/// How a planted instance was assembled.
#[derive(Debug, Clone)]
pub struct Construction {
    /// Mixing applied to the shared source in each block.
    pub mixing: Vec<DMatrix<f64>>,
    /// Dimension of the shared source.
    pub shared_dim: usize,
    /// Covariance of the per-block noise (in block coordinates).
    pub noise_covs: Vec<DMatrix<f64>>,
}

/// A synthetic joint with known common-information dimension.
#[derive(Debug, Clone)]
pub struct StructuredInstance {
    pub joint: GaussianJoint,
    /// The planted (and verified) shared-source dimension.
    pub true_cid: usize,
    pub construction: Construction,
    pub seed: u64,
}

/// Plants a shared source of dimension `shared_dim` inside `n` blocks:
/// `X_i = M_i [S; E_i]` with generic invertible mixings `M_i`, an i.i.d.
/// shared source `S`, and independent per-block noise `E_i` on the remaining
/// coordinates. The realized dimension equals the plant; degenerate draws
/// are re-drawn, and the realized `cid_multi` is asserted before returning.
pub fn make_structured_instance(
    dims: &[usize],
    shared_dim: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<StructuredInstance> {
    let n = dims.len();
    if n < 2 {
        return Err(Error::InfeasibleDims("need at least two blocks".into()));
    }
    if dims.contains(&0) {
        return Err(Error::InfeasibleDims("block dimensions must be positive".into()));
    }
    if let Some(&min_dim) = dims.iter().min() {
        if shared_dim > min_dim {
            return Err(Error::InfeasibleDims(format!(
                "shared dimension {shared_dim} exceeds the smallest block ({min_dim})"
            )));
        }
    }

    let total: usize = dims.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'redraw: for _ in 0..64 {
        let mut mixings = Vec::with_capacity(n);
        for &d in dims {
            let m = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            // Reject near-degenerate draws outright: a condition number
            // beyond ~1e2 squares into the covariance and erodes the
            // exactness of the planted singular directions.
            let s = crate::linalg::singular_values(&m);
            let s_max = s.iter().cloned().fold(0.0_f64, f64::max);
            let s_min = s.iter().cloned().fold(f64::INFINITY, f64::min);
            if s_min < 1e-2 * s_max {
                continue 'redraw;
            }
            mixings.push(m);
        }

        let mut sigma = DMatrix::zeros(total, total);
        let mut noise_covs = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        let mut off = 0;
        for &d in dims {
            offsets.push(off);
            off += d;
        }
        for i in 0..n {
            let a_i = mixings[i].columns(0, shared_dim).into_owned();
            let b_i = mixings[i].columns(shared_dim, dims[i] - shared_dim).into_owned();
            let noise = &b_i * b_i.transpose();
            for j in 0..n {
                let a_j = mixings[j].columns(0, shared_dim).into_owned();
                let mut block = &a_i * a_j.transpose();
                if i == j {
                    block += &noise;
                }
                sigma
                    .view_mut((offsets[i], offsets[j]), (dims[i], dims[j]))
                    .copy_from(&block);
            }
            noise_covs.push(noise);
        }

        let joint = validate_covariance(&sigma, dims, tol)?;
        if cid_multi(&joint, tol)? != shared_dim {
            continue 'redraw;
        }
        return Ok(StructuredInstance {
            joint,
            true_cid: shared_dim,
            construction: Construction {
                mixing: mixings,
                shared_dim,
                noise_covs,
            },
            seed,
        });
    }
    Err(Error::InternalInconsistency(
        "could not draw a generic planted instance in 32 attempts".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cid::{cid_pair, construct_gk_w, construct_w_multi, construct_w_pair};
    use crate::test_fixtures::{intro_joint, setup1_joint};
    use nalgebra::dmatrix;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn zero_covariance_samples_are_zero() {
        let joint = validate_covariance(&DMatrix::zeros(3, 3), &[2, 1], &tol()).unwrap();
        let batch = sample_joint(&joint, 100, 1).unwrap();
        assert_eq!(batch.data.amax(), 0.0);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let joint = setup1_joint();
        let a = sample_joint(&joint, 50, 42).unwrap();
        let b = sample_joint(&joint, 50, 42).unwrap();
        assert_eq!(a.data, b.data);
        let c = sample_joint(&joint, 50, 43).unwrap();
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn empirical_covariance_converges() {
        let joint = setup1_joint();
        let n = 100_000;
        let batch = sample_joint(&joint, n, 3).unwrap();
        let emp = batch.data.transpose() * &batch.data / n as f64;
        let sigma = joint.sigma();
        for i in 0..sigma.nrows() {
            for j in 0..sigma.ncols() {
                // Std error of a covariance entry under Gaussian sampling.
                let se = ((sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2)) / n as f64)
                    .sqrt()
                    .max(1e-12);
                let dev = (emp[(i, j)] - sigma[(i, j)]).abs();
                assert!(
                    dev <= 5.0 * se,
                    "entry ({i},{j}) off by {dev:.3e} > 5 se {:.3e}",
                    5.0 * se
                );
            }
        }
    }

    #[test]
    fn pair_construction_relation_holds_on_samples() {
        let joint = setup1_joint();
        let spec = construct_w_pair(&joint, &tol()).unwrap();
        let detail = spec.pair_detail.as_ref().unwrap();
        let batch = sample_joint(&joint, 2000, 5).unwrap();
        let embed_left = {
            let mut m = DMatrix::zeros(detail.left_map.nrows(), 8);
            m.view_mut((0, 0), (detail.left_map.nrows(), 4))
                .copy_from(&detail.left_map);
            m
        };
        let embed_right = {
            let mut m = DMatrix::zeros(detail.right_map.nrows(), 8);
            m.view_mut((0, 4), (detail.right_map.nrows(), 4))
                .copy_from(&detail.right_map);
            m
        };
        // The relation is exact; the sampled residual sits at the
        // sqrt(machine-eps) scale because samples pass through the
        // eigendecomposition factor of an exactly singular matrix.
        let residual = check_as_relation(&batch, &embed_left, &embed_right).unwrap();
        assert!(residual < 1e-7, "residual {residual}");

        // Unrelated random maps fail by a wide margin.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let junk_left = DMatrix::from_fn(2, 8, |_, _| rng.sample::<f64, _>(StandardNormal));
        let junk_right = DMatrix::from_fn(2, 8, |_, _| rng.sample::<f64, _>(StandardNormal));
        let junk = check_as_relation(&batch, &junk_left, &junk_right).unwrap();
        assert!(junk > 1e-2, "junk residual {junk}");
    }

    #[test]
    fn gk_maps_agree_on_samples() {
        let joint = setup1_joint();
        let spec = construct_gk_w(&joint, &tol()).unwrap();
        let maps = spec.per_source_maps.as_ref().unwrap();
        let batch = sample_joint(&joint, 2000, 6).unwrap();
        let offsets = [0usize, 4];
        let widths = [4usize, 4];
        let embedded: Vec<DMatrix<f64>> = maps
            .iter()
            .zip(offsets.iter().zip(widths))
            .map(|(m, (&off, w))| {
                let mut out = DMatrix::zeros(m.nrows(), 8);
                out.view_mut((0, off), (m.nrows(), w)).copy_from(m);
                out
            })
            .collect();
        let residual = check_as_relation(&batch, &embedded[0], &embedded[1]).unwrap();
        assert!(residual < tol().as_tol, "residual {residual}");
    }

    #[test]
    fn lemma_cond_holds_and_detects_corruption() {
        for joint in [setup1_joint(), intro_joint()] {
            let spec = construct_w_pair(&joint, &tol()).unwrap();
            assert!(check_conditional_full_rank(&joint, &spec, &tol()).unwrap());

            // Replace the complement with the W rows themselves: the
            // conditional covariance of W given W is zero, hence singular.
            let mut corrupted = spec.clone();
            let detail = corrupted.pair_detail.as_mut().unwrap();
            detail.left_complement = detail.left_map.clone();
            assert!(!check_conditional_full_rank(&joint, &corrupted, &tol()).unwrap());
        }
    }

    #[test]
    fn sequential_lemmas_on_shared_scalar() {
        let sigma = dmatrix![
            1.0, 1.0, 0.0;
            1.0, 1.0, 0.0;
            0.0, 0.0, 1.0
        ];
        let joint = validate_covariance(&sigma, &[1, 1, 1], &tol()).unwrap();
        let spec = construct_w_multi(&joint, &tol()).unwrap();
        let report = check_sequential_lemmas(spec.trace.as_ref().unwrap(), &joint, &tol()).unwrap();
        assert!(report.pass(&tol()), "report {report:?}");
    }

    #[test]
    fn sequential_lemmas_reduce_to_pair_case() {
        let joint = setup1_joint();
        let spec = construct_w_multi(&joint, &tol()).unwrap();
        assert_eq!(spec.dimension, cid_pair(&joint, &tol()).unwrap());
        let report = check_sequential_lemmas(spec.trace.as_ref().unwrap(), &joint, &tol()).unwrap();
        assert!(report.pass(&tol()), "report {report:?}");
    }

    #[test]
    fn planted_instances_have_planted_dimension() {
        let zero = make_structured_instance(&[3, 3], 0, 11, &tol()).unwrap();
        assert_eq!(cid_multi(&zero.joint, &tol()).unwrap(), 0);

        let pair = make_structured_instance(&[4, 4], 3, 12, &tol()).unwrap();
        assert_eq!(cid_pair(&pair.joint, &tol()).unwrap(), 3);

        let four = make_structured_instance(&[3, 4, 3, 5], 2, 13, &tol()).unwrap();
        assert_eq!(cid_multi(&four.joint, &tol()).unwrap(), 2);
        let spec = construct_w_multi(&four.joint, &tol()).unwrap();
        assert_eq!(spec.dimension, 2);
        let report = check_sequential_lemmas(spec.trace.as_ref().unwrap(), &four.joint, &tol()).unwrap();
        assert!(report.pass(&tol()), "report {report:?}");
    }

    #[test]
    fn infeasible_dims_rejected() {
        assert!(matches!(
            make_structured_instance(&[2, 2], 3, 1, &tol()),
            Err(Error::InfeasibleDims(_))
        ));
        assert!(matches!(
            make_structured_instance(&[2], 1, 1, &tol()),
            Err(Error::InfeasibleDims(_))
        ));
    }
}
