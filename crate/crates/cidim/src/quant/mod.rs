//! Common information between uniformly quantized Gaussian vectors.
//!
//! For pairs whose coordinates split into almost-surely-equal groups and
//! independent correlated scalar pairs (the structure of both evaluation
//! setups), the common information of the quantized pair is bracketed by
//!
//! ```text
//!   I(<X>_m ; <Y>_m)  <=  C(<X>_m, <Y>_m)  <=  Σ_{X=Y} H(<X_i>_m) + Σ_{X≠Y} C(X_i, Y_i)
//! ```
//!
//! Both sides are computed here from discretized-Gaussian entropies; their
//! ratios to `log2 m` converge to the common information dimension as the
//! quantizer gets finer.

mod entropy;
mod normal;

pub use entropy::{entropy_quantized_1d, entropy_quantized_2d};
pub use normal::{bivariate_cdf, std_normal_cdf};

use nalgebra::DMatrix;

use crate::joint::GaussianJoint;
use crate::tol::Tolerances;
use crate::wyner::ci_bits_of_rho;
use crate::{Error, Result};

/// Uniform quantization grid: cells `[k/m, (k+1)/m)`, truncated at
/// `truncation_std` standard deviations and renormalized. At the default
/// truncation of 8 the discarded tail mass is below 1e-15, so the captured
/// probability exceeds 1 − 1e-12 by a wide margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantGrid {
    /// Quantization denominator (cell width `1/m`), typically a power of 2.
    pub m: f64,
    /// Truncation half-width in standard deviations.
    pub truncation_std: f64,
}

impl QuantGrid {
    pub fn new(m: f64) -> Result<Self> {
        Self::with_truncation(m, 8.0)
    }

    pub fn with_truncation(m: f64, truncation_std: f64) -> Result<Self> {
        if m <= 0.0 || !m.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "quantization denominator must be positive and finite, got {m}"
            )));
        }
        if !truncation_std.is_finite() || truncation_std < 4.0 {
            return Err(Error::InvalidArgument(format!(
                "truncation below 4 standard deviations discards visible mass, got {truncation_std}"
            )));
        }
        Ok(Self { m, truncation_std })
    }
}

/// A maximal set of coordinates where `X_g = Y_g` almost surely, with its
/// internal covariance. Groups are mutually independent of everything else.
#[derive(Debug, Clone)]
pub struct EqualGroup {
    /// Coordinate indices within the X block (the Y side matches).
    pub coords: Vec<usize>,
    /// Covariance of the group.
    pub cov: DMatrix<f64>,
}

/// A scalar pair `(X_i, Y_i)` with `|rho| < 1`, independent of everything
/// else.
#[derive(Debug, Clone, Copy)]
pub struct CorrelatedPair {
    /// Coordinate index within each block.
    pub index: usize,
    pub var_x: f64,
    pub var_y: f64,
    pub cov: f64,
}

impl CorrelatedPair {
    pub fn correlation(&self) -> f64 {
        if self.var_x <= 0.0 || self.var_y <= 0.0 {
            0.0
        } else {
            self.cov / (self.var_x.sqrt() * self.var_y.sqrt())
        }
    }
}

/// Decomposition of a pair joint into independent equal-groups and
/// correlated scalar pairs.
#[derive(Debug, Clone)]
pub struct PairDecomposition {
    pub equal_groups: Vec<EqualGroup>,
    pub correlated_pairs: Vec<CorrelatedPair>,
}

/// Quantized-CI bracket at one grid level.
#[derive(Debug, Clone, Copy)]
pub struct QuantReport {
    pub m: f64,
    /// Mutual information `I(<X>_m ; <Y>_m)` in bits.
    pub lower_bits: f64,
    /// Entropy/CI upper bound in bits.
    pub upper_bits: f64,
    /// `lower_bits / log2 m`.
    pub ratio_lower: f64,
    /// `upper_bits / log2 m`.
    pub ratio_upper: f64,
}

/// Detects the equal-group / correlated-pair structure of a two-block joint.
///
/// Almost-sure equality of `X_i` and `Y_i` is read off the covariance rows
/// (`a^T X = b^T Y` a.s. iff `a^T Σ = b^T Σ` applied to coordinate
/// selectors); equal coordinates are then grouped into connected components
/// of the marginal covariance, and everything else must pair up same-index
/// with cross-part covariances at zero. Joints without this structure fail
/// with [`Error::NotPairDecomposable`]: the quantized bounds are then
/// unavailable, which is a documented limitation rather than a defect of the
/// input.
pub fn decompose_pairs(joint: &GaussianJoint, tol: &Tolerances) -> Result<PairDecomposition> {
    let (d_x, d_y) = joint.pair_dims()?;
    if d_x != d_y {
        return Err(Error::NotPairDecomposable(format!(
            "blocks have different dimensions {d_x} and {d_y}"
        )));
    }
    let d = d_x;
    let sigma = joint.sigma();
    let scale = sigma.amax().max(1.0);
    let near_zero = |v: f64| v.abs() <= tol.rank_tol * scale;

    // Coordinate i is equal iff rows i and d+i of Σ coincide.
    let equal: Vec<bool> = (0..d)
        .map(|i| (sigma.row(i) - sigma.row(d + i)).amax() <= tol.rank_tol * scale)
        .collect();

    // Connected components of the equal coordinates under the X-marginal.
    let mut group_of: Vec<Option<usize>> = vec![None; d];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..d {
        if !equal[i] || group_of[i].is_some() {
            continue;
        }
        let id = groups.len();
        let mut stack = vec![i];
        let mut members = Vec::new();
        group_of[i] = Some(id);
        while let Some(c) = stack.pop() {
            members.push(c);
            for j in 0..d {
                if equal[j] && group_of[j].is_none() && !near_zero(sigma[(c, j)]) {
                    group_of[j] = Some(id);
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }

    let mut correlated_pairs = Vec::new();
    for i in 0..d {
        if equal[i] {
            continue;
        }
        let var_x = sigma[(i, i)];
        let var_y = sigma[(d + i, d + i)];
        let cov = sigma[(i, d + i)];
        if var_x > tol.rank_tol * scale && var_y > tol.rank_tol * scale {
            let rho = cov / (var_x.sqrt() * var_y.sqrt());
            if rho.abs() > 1.0 - tol.one_tol {
                return Err(Error::NotPairDecomposable(format!(
                    "coordinates {i} are proportional but not equal (correlation {rho:.6})"
                )));
            }
        }
        correlated_pairs.push(CorrelatedPair {
            index: i,
            var_x,
            var_y,
            cov,
        });
    }

    // Part id per stacked coordinate: equal coords share one id on both
    // sides, pairs get their own.
    let n_groups = groups.len();
    let part_of = |coord: usize| -> usize {
        let i = coord % d;
        match group_of[i] {
            Some(g) => g,
            None => n_groups + i,
        }
    };
    for a in 0..2 * d {
        for b in (a + 1)..2 * d {
            if part_of(a) != part_of(b) && !near_zero(sigma[(a, b)]) {
                return Err(Error::NotPairDecomposable(format!(
                    "coordinates {a} and {b} of the stacked vector are correlated across parts \
                     (covariance {:.3e})",
                    sigma[(a, b)]
                )));
            }
        }
    }
    // Within an equal group the X, Y and cross blocks must all agree.
    for members in &groups {
        for &a in members {
            for &b in members {
                let xx = sigma[(a, b)];
                if !near_zero(sigma[(d + a, d + b)] - xx) || !near_zero(sigma[(a, d + b)] - xx) {
                    return Err(Error::NotPairDecomposable(format!(
                        "coordinates {a}, {b} marked equal but their covariance blocks differ"
                    )));
                }
            }
        }
    }

    let equal_groups = groups
        .into_iter()
        .map(|coords| {
            let mut cov = DMatrix::zeros(coords.len(), coords.len());
            for (r, &i) in coords.iter().enumerate() {
                for (c, &j) in coords.iter().enumerate() {
                    cov[(r, c)] = sigma[(i, j)];
                }
            }
            EqualGroup { coords, cov }
        })
        .collect();

    Ok(PairDecomposition {
        equal_groups,
        correlated_pairs,
    })
}

/// Entropy of one quantized equal group, factored over nothing further
/// (groups are already independence components). Dimensions above 2 are
/// rejected, not approximated.
fn group_entropy(group: &EqualGroup, grid: &QuantGrid, tol: &Tolerances) -> Result<f64> {
    match group.coords.len() {
        1 => entropy_quantized_1d(group.cov[(0, 0)], grid, tol),
        2 => entropy_quantized_2d(&group.cov, grid, tol),
        n => Err(Error::InvalidArgument(format!(
            "equal group of dimension {n} exceeds the supported joint-entropy dimension of 2"
        ))),
    }
}

/// Computes the quantized-CI bracket at grid level `grid.m`.
///
/// Lower bound: the mutual information, summed over independent parts — an
/// equal group contributes its own quantized entropy, a scalar pair
/// contributes `H(<X>) + H(<Y>) − H(<X>, <Y>)`. Upper bound: equal-group
/// entropies plus the continuous scalar Wyner common information of each
/// pair.
pub fn quant_bounds(
    joint: &GaussianJoint,
    grid: &QuantGrid,
    tol: &Tolerances,
) -> Result<QuantReport> {
    let decomp = decompose_pairs(joint, tol)?;
    let mut lower = 0.0;
    let mut upper = 0.0;
    for group in &decomp.equal_groups {
        let h = group_entropy(group, grid, tol)?;
        lower += h;
        upper += h;
    }
    for pair in &decomp.correlated_pairs {
        let degenerate =
            pair.var_x <= tol.rank_tol || pair.var_y <= tol.rank_tol;
        if degenerate {
            continue;
        }
        let hx = entropy_quantized_1d(pair.var_x, grid, tol)?;
        let hy = entropy_quantized_1d(pair.var_y, grid, tol)?;
        let cov = nalgebra::dmatrix![pair.var_x, pair.cov; pair.cov, pair.var_y];
        let hxy = entropy_quantized_2d(&cov, grid, tol)?;
        // Joint entropy never exceeds the sum of marginals; guard against
        // rounding pushing the MI microscopically negative.
        lower += (hx + hy - hxy).max(0.0);
        upper += ci_bits_of_rho(&[pair.correlation().abs()]);
    }
    if lower > upper + 1e-9 {
        return Err(Error::InternalInconsistency(format!(
            "quantized lower bound {lower} exceeds upper bound {upper}"
        )));
    }
    let log_m = grid.m.log2();
    Ok(QuantReport {
        m: grid.m,
        lower_bits: lower,
        upper_bits: upper,
        ratio_lower: lower / log_m,
        ratio_upper: upper / log_m,
    })
}
