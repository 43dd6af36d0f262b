//! Figure-reproduction datasets, emitted as CSV with a documented header row.

use cidim::{
    approx_ci, quant_bounds, seq_ratio, PerturbPattern, QuantGrid, Tolerances,
};

use crate::input::{preset_joint, setup2_joint};
use crate::CliError;

/// Renders the dataset for one of the four figures.
pub fn reproduce(figure: &str, tol: &Tolerances) -> Result<String, CliError> {
    match figure {
        "fig2a" => fig2a(tol),
        "fig2b" => fig2b(tol),
        "fig3a" => fig3a(tol),
        "fig3b" => fig3b(tol),
        other => Err(CliError::Input(format!(
            "unknown figure {other:?}; available: fig2a, fig2b, fig3a, fig3b"
        ))),
    }
}

/// Normalized approximate common information of the first evaluation setup
/// against the approximation error: the restricted-solver value and the
/// min-/max-CI nearly singular sequences.
fn fig2a(tol: &Tolerances) -> Result<String, CliError> {
    let joint = preset_joint("setup1")?;
    let mut out = String::from("epsilon,approx_ratio,seq_ratio_min,seq_ratio_max\n");
    for k in 1..=13 {
        let epsilon = 10f64.powf(-(k as f64) / 2.0);
        let approx = approx_ci(&joint, epsilon, tol).map_err(CliError::Compute)?;
        let min = seq_ratio(&joint, epsilon, &PerturbPattern::MinCi, tol)
            .map_err(CliError::Compute)?;
        let max = seq_ratio(&joint, epsilon, &PerturbPattern::MaxCi, tol)
            .map_err(CliError::Compute)?;
        out.push_str(&format!("{epsilon},{},{min},{max}\n", approx.ratio));
    }
    Ok(out)
}

/// Quantized-CI bracket of the first setup against the quantizer level.
fn fig2b(tol: &Tolerances) -> Result<String, CliError> {
    let joint = preset_joint("setup1")?;
    let mut out = String::from("m,lower_bits,upper_bits,ratio_lower,ratio_upper\n");
    for k in 1..=8u32 {
        let m = f64::from(2u32.pow(k));
        let grid = QuantGrid::new(m).map_err(CliError::Compute)?;
        let report = quant_bounds(&joint, &grid, tol).map_err(CliError::Compute)?;
        out.push_str(&format!(
            "{m},{},{},{},{}\n",
            report.lower_bits, report.upper_bits, report.ratio_lower, report.ratio_upper
        ));
    }
    Ok(out)
}

/// Approximate common information against the dimension of the second
/// evaluation family, at a coarse and a fine accuracy.
fn fig3a(tol: &Tolerances) -> Result<String, CliError> {
    let mut out =
        String::from("d,epsilon,ci_bits,lower_bound_bits,achievable_bits,ratio\n");
    for &epsilon in &[2f64.powi(-5), 2f64.powi(-20)] {
        for d in 1..=7usize {
            let joint = setup2_joint(d, tol);
            let sol = approx_ci(&joint, epsilon, tol).map_err(CliError::Compute)?;
            out.push_str(&format!(
                "{d},{epsilon},{},{},{},{}\n",
                sol.ci_bits, sol.lower_bound_bits, sol.achievable_bits, sol.ratio
            ));
        }
    }
    Ok(out)
}

/// Quantized-CI bracket against the dimension of the second evaluation
/// family, at four quantizer levels.
fn fig3b(tol: &Tolerances) -> Result<String, CliError> {
    let mut out = String::from("d,m,lower_bits,upper_bits,ratio_lower,ratio_upper\n");
    for &m in &[2.0, 4.0, 16.0, 256.0] {
        let grid = QuantGrid::new(m).map_err(CliError::Compute)?;
        for d in 1..=7usize {
            let joint = setup2_joint(d, tol);
            let report = quant_bounds(&joint, &grid, tol).map_err(CliError::Compute)?;
            out.push_str(&format!(
                "{d},{m},{},{},{},{}\n",
                report.lower_bits, report.upper_bits, report.ratio_lower, report.ratio_upper
            ));
        }
    }
    Ok(out)
}
