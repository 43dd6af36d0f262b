//! Closed-form Wyner common information of a Gaussian pair and the
//! nearly-singular sequence construction.
//!
//! The common information of two jointly Gaussian vectors is
//! `C(X, Y) = ½ Σ_i log2 (1 + σ_i) / (1 − σ_i)` bits, where the `σ_i` are
//! the canonical correlations. It is infinite exactly when some `σ_i = 1`,
//! i.e. when the pair is jointly singular; the number `k` of unit values
//! equals the common information dimension.
//!
//! [`make_sequence_member`] perturbs every canonical correlation by exactly
//! `ε` (keeping the marginals fixed), producing the non-singular
//! approximating pairs whose common information grows like
//! `d(X,Y) · ½ log(1/ε)`.

use nalgebra::DMatrix;

use crate::cid::cid_pair;
use crate::joint::{assemble_pair_sigma, GaussianJoint};
use crate::linalg::{canonical_spectrum, psd_sqrt, CanonicalSpectrum};
use crate::tol::Tolerances;
use crate::{Error, Result};

/// A common-information value in bits, with infinity kept as an explicit
/// flag so downstream serialization stays unambiguous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CiValue {
    Finite(f64),
    Infinite,
}

impl CiValue {
    pub fn is_infinite(&self) -> bool {
        matches!(self, CiValue::Infinite)
    }

    /// Finite value, or `None` when infinite.
    pub fn finite(&self) -> Option<f64> {
        match self {
            CiValue::Finite(v) => Some(*v),
            CiValue::Infinite => None,
        }
    }
}

/// Wyner common information of a Gaussian pair.
#[derive(Debug, Clone)]
pub struct WynerValue {
    /// The value in bits; infinite iff `unit_count >= 1`.
    pub bits: CiValue,
    /// Number of canonical correlations equal to 1 (within `one_tol`).
    pub unit_count: usize,
    /// The canonical spectrum the value was computed from.
    pub spectrum: CanonicalSpectrum,
}

/// Sign choice when perturbing the canonical correlations by `ε`.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbPattern {
    /// Take `σ_i − ε` wherever feasible (the minimum-CI sequence).
    MinCi,
    /// Take `σ_i + ε` wherever it stays `≤ 1` (the maximum-CI sequence).
    MaxCi,
    /// Explicit per-index signs; a sign is flipped where it would leave
    /// `[0, 1]`.
    Explicit(Vec<i8>),
}

/// One member of a nearly-singular sequence: same marginals as the target,
/// every canonical correlation moved by exactly `ε`.
#[derive(Debug, Clone)]
pub struct SequenceMember {
    /// Perturbation magnitude.
    pub epsilon: f64,
    /// Resolved per-index signs (`+1` or `-1`) after feasibility clamping.
    pub sign_pattern: Vec<i8>,
    /// The perturbed canonical correlations `ρ_i(ε)`.
    pub rho: Vec<f64>,
    /// The perturbed joint; marginal blocks are identical to the target's.
    pub perturbed_joint: GaussianJoint,
}

/// Evaluates `½ Σ log2 (1+σ)/(1−σ)` over a spectrum, in bits.
pub(crate) fn ci_bits_of_rho(rho: &[f64]) -> f64 {
    rho.iter()
        .map(|&r| 0.5 * ((1.0 + r) / (1.0 - r)).log2())
        .sum()
}

/// Wyner common information of a two-block joint, in bits. Canonical
/// correlations within `one_tol` of 1 make the value infinite; zero values
/// contribute nothing.
pub fn wyner_gaussian(joint: &GaussianJoint, tol: &Tolerances) -> Result<WynerValue> {
    let spectrum = canonical_spectrum(joint, tol)?;
    let unit_count = spectrum.unit_count(tol);
    let bits = if unit_count > 0 {
        CiValue::Infinite
    } else {
        CiValue::Finite(ci_bits_of_rho(&spectrum.sigma_vals))
    };
    Ok(WynerValue {
        bits,
        unit_count,
        spectrum,
    })
}

/// Joint-singularity report: `(is_jointly_singular, k)` with `k` the number
/// of unit canonical correlations. Cross-checks `k` against the rank formula
/// and fails with [`Error::ConsistencyError`] when the two disagree (a
/// tolerance-mismatch diagnostic, not a property of the input).
pub fn singularity_report(joint: &GaussianJoint, tol: &Tolerances) -> Result<(bool, usize)> {
    let spectrum = canonical_spectrum(joint, tol)?;
    let k = spectrum.unit_count(tol);
    let d = cid_pair(joint, tol)?;
    if k != d {
        return Err(Error::ConsistencyError(format!(
            "{k} unit canonical correlations but the rank formula gives dimension {d}"
        )));
    }
    Ok((k >= 1, k))
}

/// Builds the member of the nearly-singular sequence at perturbation `ε`.
///
/// Each `ρ_i(ε) = σ_i ± ε` per the pattern; marginals are kept, and the
/// cross-covariance is rebuilt as `Σ_X^{1/2} U diag(ρ) V^T Σ_Y^{1/2}` from
/// the target's singular factors. Fails with [`Error::InfeasibleEpsilon`]
/// when neither sign keeps some `ρ_i` inside `[0, 1]`.
pub fn make_sequence_member(
    joint: &GaussianJoint,
    epsilon: f64,
    pattern: &PerturbPattern,
    tol: &Tolerances,
) -> Result<SequenceMember> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie strictly inside (0, 1), got {epsilon}"
        )));
    }
    let spectrum = canonical_spectrum(joint, tol)?;
    if let PerturbPattern::Explicit(signs) = pattern {
        if signs.len() != spectrum.sigma_vals.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} signs provided for {} canonical correlations",
                signs.len(),
                spectrum.sigma_vals.len()
            )));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument("signs must be +1 or -1".into()));
        }
    }

    let mut sign_pattern = Vec::with_capacity(spectrum.sigma_vals.len());
    let mut rho = Vec::with_capacity(spectrum.sigma_vals.len());
    for (i, &sigma) in spectrum.sigma_vals.iter().enumerate() {
        let down_ok = sigma - epsilon >= 0.0;
        let up_ok = sigma + epsilon <= 1.0;
        let preferred: i8 = match pattern {
            PerturbPattern::MinCi => -1,
            PerturbPattern::MaxCi => 1,
            PerturbPattern::Explicit(signs) => signs[i],
        };
        let sign = match (preferred, down_ok, up_ok) {
            (-1, true, _) => -1,
            (-1, false, true) => 1,
            (1, _, true) => 1,
            (1, true, false) => -1,
            _ => {
                return Err(Error::InfeasibleEpsilon {
                    epsilon,
                    index: i,
                })
            }
        };
        sign_pattern.push(sign);
        rho.push(sigma + f64::from(sign) * epsilon);
    }

    let perturbed_joint = rebuild_with_rho(joint, &spectrum, &rho, tol)?;
    Ok(SequenceMember {
        epsilon,
        sign_pattern,
        rho,
        perturbed_joint,
    })
}

/// Rebuilds a pair joint with the target's marginals and singular factors
/// but the given singular values.
pub(crate) fn rebuild_with_rho(
    joint: &GaussianJoint,
    spectrum: &CanonicalSpectrum,
    rho: &[f64],
    tol: &Tolerances,
) -> Result<GaussianJoint> {
    let sigma_x = joint.block_cov(0);
    let sigma_y = joint.block_cov(1);
    let sqrt_x = psd_sqrt(&sigma_x, tol)?;
    let sqrt_y = psd_sqrt(&sigma_y, tol)?;
    let mut lambda = DMatrix::zeros(rho.len(), rho.len());
    for (i, &r) in rho.iter().enumerate() {
        lambda[(i, i)] = r;
    }
    let cross =
        &sqrt_x * &spectrum.left_factor * lambda * spectrum.right_factor.transpose() * &sqrt_y;
    let sigma = assemble_pair_sigma(&sigma_x, &sigma_y, &cross);
    joint.with_sigma(sigma, tol)
}

/// Normalized common information of the sequence member at `ε`:
/// `C(X_ε, Y_ε) / (½ log2(1/ε))`. Finite for every `ε > 0`.
pub fn seq_ratio(
    joint: &GaussianJoint,
    epsilon: f64,
    pattern: &PerturbPattern,
    tol: &Tolerances,
) -> Result<f64> {
    let member = make_sequence_member(joint, epsilon, pattern, tol)?;
    let value = wyner_gaussian(&member.perturbed_joint, tol)?;
    let bits = match value.bits {
        CiValue::Finite(b) => b,
        // A max-CI pattern can push a correlation to exactly 1 when
        // sigma_i + eps == 1; the normalized ratio is then infinite.
        CiValue::Infinite => f64::INFINITY,
    };
    Ok(bits / (0.5 * (1.0 / epsilon).log2()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::validate_covariance;
    use crate::test_fixtures::{build_pair, setup1_joint};
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, DMatrix};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn bivariate_half_correlation() {
        let sigma = dmatrix![1.0, 0.5; 0.5, 1.0];
        let joint = validate_covariance(&sigma, &[1, 1], &tol()).unwrap();
        let value = wyner_gaussian(&joint, &tol()).unwrap();
        // ½ log2 3
        assert_abs_diff_eq!(
            value.bits.finite().unwrap(),
            0.7924812503605781,
            epsilon = 1e-12
        );
        assert_eq!(value.unit_count, 0);
    }

    #[test]
    fn independent_pair_has_zero_bits() {
        let joint =
            validate_covariance(&DMatrix::identity(4, 4), &[2, 2], &tol()).unwrap();
        let value = wyner_gaussian(&joint, &tol()).unwrap();
        assert_eq!(value.bits, CiValue::Finite(0.0));
    }

    #[test]
    fn setup1_is_infinite() {
        let value = wyner_gaussian(&setup1_joint(), &tol()).unwrap();
        assert!(value.bits.is_infinite());
        assert_eq!(value.unit_count, 3);
    }

    #[test]
    fn singularity_report_examples() {
        assert_eq!(
            singularity_report(&setup1_joint(), &tol()).unwrap(),
            (true, 3)
        );
        let independent =
            validate_covariance(&DMatrix::identity(4, 4), &[2, 2], &tol()).unwrap();
        assert_eq!(singularity_report(&independent, &tol()).unwrap(), (false, 0));

        // Full-rank pair with known spectrum (max sigma 0.9).
        let cross = dmatrix![0.9, 0.0; 0.0, 0.4];
        let joint = build_pair(&DMatrix::identity(2, 2), &DMatrix::identity(2, 2), &cross);
        assert_eq!(singularity_report(&joint, &tol()).unwrap(), (false, 0));
    }

    #[test]
    fn sequence_member_min_ci_values() {
        let member =
            make_sequence_member(&setup1_joint(), 0.01, &PerturbPattern::MinCi, &tol()).unwrap();
        let expected = [0.99, 0.99, 0.99, 0.29];
        for (got, want) in member.rho.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-9);
        }
        assert_eq!(member.sign_pattern, vec![-1, -1, -1, -1]);
    }

    #[test]
    fn unit_values_are_forced_downward() {
        for pattern in [PerturbPattern::MinCi, PerturbPattern::MaxCi] {
            let member =
                make_sequence_member(&setup1_joint(), 0.01, &pattern, &tol()).unwrap();
            for i in 0..3 {
                assert_abs_diff_eq!(member.rho[i], 0.99, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn zero_epsilon_rejected() {
        assert!(matches!(
            make_sequence_member(&setup1_joint(), 0.0, &PerturbPattern::MinCi, &tol()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn member_marginals_match_target_and_spectrum_round_trips() {
        let joint = setup1_joint();
        let member =
            make_sequence_member(&joint, 1e-3, &PerturbPattern::MinCi, &tol()).unwrap();
        for b in 0..2 {
            assert!((member.perturbed_joint.block_cov(b) - joint.block_cov(b)).amax() < 1e-12);
        }
        let spec = canonical_spectrum(&member.perturbed_joint, &tol()).unwrap();
        for (got, want) in spec.sigma_vals.iter().zip(&member.rho) {
            assert_abs_diff_eq!(*got, *want, epsilon = 1e-9);
        }
    }

    #[test]
    fn seq_ratio_setup1_bands() {
        let joint = setup1_joint();
        let min = seq_ratio(&joint, 1e-6, &PerturbPattern::MinCi, &tol()).unwrap();
        let max = seq_ratio(&joint, 1e-6, &PerturbPattern::MaxCi, &tol()).unwrap();
        assert!((3.0..=3.25).contains(&min), "min ratio {min}");
        assert!((3.0..=3.3).contains(&max), "max ratio {max}");
        assert!(max >= min);
    }

    #[test]
    fn seq_ratio_converges_to_dimension() {
        let joint = setup1_joint();
        let mut last = f64::INFINITY;
        for eps in [1e-3, 1e-4, 1e-6] {
            let ratio = seq_ratio(&joint, eps, &PerturbPattern::MinCi, &tol()).unwrap();
            let gap = (ratio - 3.0).abs();
            assert!(gap < last, "gap did not shrink at eps {eps}");
            last = gap;
        }
    }

    #[test]
    fn seq_ratio_nonsingular_target_vanishes() {
        let sigma = dmatrix![1.0, 0.5; 0.5, 1.0];
        let joint = validate_covariance(&sigma, &[1, 1], &tol()).unwrap();
        let r1 = seq_ratio(&joint, 1e-3, &PerturbPattern::MinCi, &tol()).unwrap();
        let r2 = seq_ratio(&joint, 1e-8, &PerturbPattern::MinCi, &tol()).unwrap();
        assert!(r2 < r1);
        assert!(r2 < 0.1);
    }

    #[test]
    fn wyner_is_monotone_in_each_sigma() {
        let base = dmatrix![0.6, 0.0; 0.0, 0.3];
        let bumped = dmatrix![0.65, 0.0; 0.0, 0.3];
        let id = DMatrix::identity(2, 2);
        let low = wyner_gaussian(&build_pair(&id, &id, &base), &tol()).unwrap();
        let high = wyner_gaussian(&build_pair(&id, &id, &bumped), &tol()).unwrap();
        assert!(high.bits.finite().unwrap() > low.bits.finite().unwrap());
    }
}
