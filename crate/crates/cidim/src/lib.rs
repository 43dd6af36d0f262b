//! Common-information dimension of jointly Gaussian random vectors.
//!
//! Given the joint covariance matrix of zero-mean Gaussian vectors
//! `X_1, ..., X_n`, this crate computes
//!
//! * the common information dimension (CID) — the minimum dimension of a
//!   real vector `W`, linear in the sources, that together with a
//!   finite-entropy variable renders the sources conditionally independent;
//! * its Rényi variant (RCID) and the Gács–Körner variant (GKCID), together
//!   with explicit constructions of a minimum-dimension `W`;
//! * Wyner's common information of a Gaussian pair in closed form, and its
//!   growth in three nearly-infinite regimes: nearly singular sequences,
//!   ε-approximate simulation, and uniform quantization.
//!
//! All computations run on dense covariance matrices and are tolerance-aware:
//! inputs are expected to be (nearly) singular, so every rank decision goes
//! through configurable thresholds ([`Tolerances`]) instead of exact
//! comparisons.
//!
//! Modules mirror the pipeline: [`linalg`] (rank/null-space/Schur machinery
//! over covariances), [`cid`] (dimensions and `W` constructions), [`wyner`]
//! (closed-form common information and nearly singular sequences), [`approx`]
//! (ε-approximation solver with bound certificates), [`quant`] (discretized
//! Gaussian entropies and quantized-CI bounds) and [`verify`] (Monte Carlo
//! checks and planted-instance generators).

pub mod approx;
pub mod cid;
pub mod joint;
pub mod linalg;
pub mod quant;
pub mod tol;
pub mod verify;
pub mod wyner;

pub use approx::{
    achievable_rho, approx_ci, approx_ratio, lower_bound_closed_form, solve_reduced, ApproxSolution,
};
pub use cid::{
    cid_multi, cid_pair, construct_gk_w, construct_w_multi, construct_w_pair, gk_structure, gkcid,
    rcid, SequentialTrace, CommonVariableSpec, GkStructure, PairDetail,
};
pub use joint::{validate_covariance, GaussianJoint};
pub use linalg::{
    canonical_spectrum, conditional_cov, conditional_cov_maps, null_space_basis, numeric_rank,
    pinv_sqrt, psd_sqrt, row_space_basis, CanonicalSpectrum,
};
pub use quant::{
    decompose_pairs, entropy_quantized_1d, entropy_quantized_2d, quant_bounds, PairDecomposition,
    QuantGrid, QuantReport,
};
pub use tol::Tolerances;
pub use verify::{
    check_sequential_lemmas, check_as_relation, check_conditional_full_rank, make_structured_instance, sample_joint,
    SequentialReport, SampleBatch, StructuredInstance,
};
pub use wyner::{
    make_sequence_member, seq_ratio, singularity_report, wyner_gaussian, CiValue, PerturbPattern,
    SequenceMember, WynerValue,
};

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {deviation:.3e} exceeds tolerance {allowed:.3e}")]
    NotSymmetric { deviation: f64, allowed: f64 },

    #[error("matrix is not positive semidefinite: most negative eigenvalue {min_eigenvalue:.6e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("canonical spectrum out of range: singular value {value} exceeds 1 + one_tol")]
    SpectrumOutOfRange { value: f64 },

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("cross-module consistency failure: {0}")]
    ConsistencyError(String),

    #[error("epsilon {epsilon} infeasible at index {index}: sigma_i - eps < 0 and sigma_i + eps > 1")]
    InfeasibleEpsilon { epsilon: f64, index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative variance {0} passed to a quantized entropy")]
    NegativeVariance(f64),

    #[error("2x2 block is singular (|rho| too close to 1) and cannot be quantized jointly")]
    SingularBlock,

    #[error("joint does not decompose into independent equal-groups and scalar pairs: {0}")]
    NotPairDecomposable(String),

    #[error("infeasible dimensions: {0}")]
    InfeasibleDims(String),
}

pub type Result<T> = std::result::Result<T, Error>;
