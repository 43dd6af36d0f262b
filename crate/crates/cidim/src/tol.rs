//! Numerical tolerances used by every rank and singularity decision.

use crate::{Error, Result};

/// Thresholds controlling how floating-point covariances are classified.
///
/// The semantics of the whole crate hinge on two decisions that exact
/// arithmetic would make for free: whether a singular value is zero
/// (`rank_tol`, relative to the largest singular value) and whether a
/// canonical correlation equals one (`one_tol`). They are deliberately
/// separate knobs: joint-singularity detection is the core semantic decision
/// and usually wants a looser threshold than plain rank determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative singular-value threshold for numeric rank decisions.
    pub rank_tol: f64,
    /// Threshold for declaring a canonical correlation equal to 1.
    pub one_tol: f64,
    /// Residual threshold for sampled almost-sure-relation checks.
    pub as_tol: f64,
    /// Convergence tolerance for iterative solvers.
    pub solver_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            one_tol: 1e-8,
            as_tol: 1e-6,
            solver_tol: 1e-10,
        }
    }
}

impl Tolerances {
    /// Builds a tolerance set, rejecting values outside (0, 1).
    pub fn new(rank_tol: f64, one_tol: f64, as_tol: f64, solver_tol: f64) -> Result<Self> {
        let tol = Self {
            rank_tol,
            one_tol,
            as_tol,
            solver_tol,
        };
        tol.validate()?;
        Ok(tol)
    }

    /// Checks that all tolerances are strictly positive and below 1.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("rank_tol", self.rank_tol),
            ("one_tol", self.one_tol),
            ("as_tol", self.as_tol),
            ("solver_tol", self.solver_tol),
        ] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidTolerance(format!(
                    "{name} = {value} must lie strictly inside (0, 1)"
                )));
            }
        }
        Ok(())
    }
}
