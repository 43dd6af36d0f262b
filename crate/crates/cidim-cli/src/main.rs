//! Command-line front end: reads covariance specifications, dispatches the
//! analyses and emits machine-readable records (JSON) or figure datasets
//! (CSV).
//!
//! Exit codes: 0 on success, 1 on computation errors (with a structured
//! error record on stdout), 2 on input errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cidim::{
    approx_ci, cid_multi, construct_gk_w, construct_w_multi, construct_w_pair, gkcid, quant_bounds,
    rcid, seq_ratio, singularity_report, wyner_gaussian, PerturbPattern, QuantGrid,
};
use cidim_cli::input::{self, load_problem, ProblemInput};
use cidim_cli::record::{bits_json, ResultRecord};
use cidim_cli::{figures, CliError};

#[derive(Parser)]
#[command(
    name = "cidim",
    version,
    about = "Common-information dimension and approximate common information of Gaussian vectors",
    after_help = "Tolerances can be overridden globally via the CIDIM_TOLERANCES environment \
                  variable, e.g. CIDIM_TOLERANCES=rank_tol=1e-9,one_tol=1e-7."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArgs {
    /// Path to a TOML problem specification.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Named preset: setup1, setup2:d=<1..7>, intro.
    #[arg(long)]
    preset: Option<String>,
    /// Seed recorded in the output (reserved for sampled diagnostics).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SpecArgs {
    fn load(&self) -> Result<ProblemInput, CliError> {
        load_problem(self.spec.as_deref(), self.preset.as_deref())
    }
}

#[derive(Subcommand)]
enum Command {
    /// CID, RCID and GKCID, optionally with the shared-variable matrices.
    Cid {
        #[command(flatten)]
        spec: SpecArgs,
        /// Include the W construction matrices in the record.
        #[arg(long)]
        with_w: bool,
    },
    /// Wyner common information (closed form) and the singularity report.
    Wyner {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Normalized common information of nearly singular sequences over an
    /// epsilon grid.
    Seq {
        #[command(flatten)]
        spec: SpecArgs,
        /// Comma-separated perturbation magnitudes.
        #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-4,1e-6")]
        eps_grid: Vec<f64>,
        /// Sign pattern: min, max, or explicit:+1,-1,...
        #[arg(long, default_value = "min")]
        pattern: String,
    },
    /// Epsilon-approximation common information with bound certificates.
    Approx {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_delimiter = ',', default_value = "3.125e-2,9.5367431640625e-7")]
        eps_grid: Vec<f64>,
    },
    /// Quantized-CI bounds over a grid of quantizer levels.
    Quant {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_delimiter = ',', default_value = "2,4,16,256")]
        m_grid: Vec<f64>,
    },
    /// Figure-reproduction dataset as CSV (fig2a, fig2b, fig3a, fig3b).
    Reproduce {
        figure: String,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(message)) => {
            eprintln!("input error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Compute(error)) => {
            let record = json!({
                "error": error.to_string(),
                "kind": "computation",
            });
            println!("{}", serde_json::to_string_pretty(&record).unwrap());
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Cid { spec, with_w } => cmd_cid(&spec, with_w),
        Command::Wyner { spec } => cmd_wyner(&spec),
        Command::Seq {
            spec,
            eps_grid,
            pattern,
        } => cmd_seq(&spec, &eps_grid, &pattern),
        Command::Approx { spec, eps_grid } => cmd_approx(&spec, &eps_grid),
        Command::Quant { spec, m_grid } => cmd_quant(&spec, &m_grid),
        Command::Reproduce { figure, out } => cmd_reproduce(&figure, out.as_deref()),
    }
}

fn matrix_json(m: &nalgebra::DMatrix<f64>) -> serde_json::Value {
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect();
    json!(rows)
}

fn cmd_cid(spec: &SpecArgs, with_w: bool) -> Result<(), CliError> {
    let problem = spec.load()?;
    let (joint, tol) = (&problem.joint, &problem.tolerances);
    let cid = cid_multi(joint, tol).map_err(CliError::Compute)?;
    let rcid_value = rcid(joint, tol).map_err(CliError::Compute)?;
    let gk = gkcid(joint, tol).map_err(CliError::Compute)?;

    let mut outputs = json!({
        "cid": cid,
        "rcid": rcid_value,
        "gkcid": gk,
    });
    if with_w {
        let multi = construct_w_multi(joint, tol).map_err(CliError::Compute)?;
        outputs["w_matrix"] = matrix_json(&multi.w_matrix);
        outputs["w_dimension"] = json!(multi.dimension);
        if joint.n_blocks() == 2 {
            let pair = construct_w_pair(joint, tol).map_err(CliError::Compute)?;
            let detail = pair.pair_detail.expect("pair construction carries detail");
            outputs["pair_left_map"] = matrix_json(&detail.left_map);
            outputs["pair_right_map"] = matrix_json(&detail.right_map);
        }
        let gk_spec = construct_gk_w(joint, tol).map_err(CliError::Compute)?;
        let maps: Vec<serde_json::Value> = gk_spec
            .per_source_maps
            .expect("GK construction carries per-source maps")
            .iter()
            .map(matrix_json)
            .collect();
        outputs["gk_per_source_maps"] = json!(maps);
    }

    ResultRecord::new(
        "cid",
        &problem.label,
        &problem.digest_source,
        spec.seed,
        tol,
        outputs,
    )
    .print();
    Ok(())
}

fn cmd_wyner(spec: &SpecArgs) -> Result<(), CliError> {
    let problem = spec.load()?;
    let (joint, tol) = (&problem.joint, &problem.tolerances);
    let value = wyner_gaussian(joint, tol).map_err(CliError::Compute)?;
    let (singular, k) = singularity_report(joint, tol).map_err(CliError::Compute)?;
    let outputs = json!({
        "bits": bits_json(&value.bits),
        "k": k,
        "jointly_singular": singular,
        "sigma_vals": value.spectrum.sigma_vals,
    });
    ResultRecord::new(
        "wyner",
        &problem.label,
        &problem.digest_source,
        spec.seed,
        tol,
        outputs,
    )
    .print();
    Ok(())
}

fn parse_pattern(raw: &str) -> Result<PerturbPattern, CliError> {
    match raw {
        "min" => Ok(PerturbPattern::MinCi),
        "max" => Ok(PerturbPattern::MaxCi),
        other => {
            if let Some(signs) = other.strip_prefix("explicit:") {
                let parsed: Result<Vec<i8>, _> =
                    signs.split(',').map(|s| s.trim().parse::<i8>()).collect();
                match parsed {
                    Ok(signs) => Ok(PerturbPattern::Explicit(signs)),
                    Err(_) => Err(CliError::Input(format!(
                        "bad sign list in pattern {other:?}"
                    ))),
                }
            } else {
                Err(CliError::Input(format!(
                    "unknown pattern {other:?}; use min, max or explicit:+1,-1,..."
                )))
            }
        }
    }
}

fn cmd_seq(spec: &SpecArgs, eps_grid: &[f64], pattern: &str) -> Result<(), CliError> {
    let problem = spec.load()?;
    let (joint, tol) = (&problem.joint, &problem.tolerances);
    let pattern = parse_pattern(pattern)?;
    let mut rows = Vec::new();
    for &epsilon in eps_grid {
        let ratio = seq_ratio(joint, epsilon, &pattern, tol).map_err(CliError::Compute)?;
        rows.push(json!({ "epsilon": epsilon, "ratio": ratio }));
    }
    ResultRecord::new(
        "seq",
        &problem.label,
        &problem.digest_source,
        spec.seed,
        tol,
        json!({ "pattern": format!("{pattern:?}"), "table": rows }),
    )
    .print();
    Ok(())
}

fn cmd_approx(spec: &SpecArgs, eps_grid: &[f64]) -> Result<(), CliError> {
    let problem = spec.load()?;
    let (joint, tol) = (&problem.joint, &problem.tolerances);
    let mut rows = Vec::new();
    for &epsilon in eps_grid {
        let sol = approx_ci(joint, epsilon, tol).map_err(CliError::Compute)?;
        rows.push(json!({
            "epsilon": epsilon,
            "ci_bits": sol.ci_bits,
            "lower_bound_bits": sol.lower_bound_bits,
            "achievable_bits": sol.achievable_bits,
            "ratio": sol.ratio,
            "sv_budget": sol.sv_budget,
            "converged": sol.converged,
        }));
    }
    ResultRecord::new(
        "approx",
        &problem.label,
        &problem.digest_source,
        spec.seed,
        tol,
        json!({ "table": rows }),
    )
    .print();
    Ok(())
}

fn cmd_quant(spec: &SpecArgs, m_grid: &[f64]) -> Result<(), CliError> {
    let problem = spec.load()?;
    let (joint, tol) = (&problem.joint, &problem.tolerances);
    let mut rows = Vec::new();
    for &m in m_grid {
        let grid = QuantGrid::new(m).map_err(CliError::Compute)?;
        let report = quant_bounds(joint, &grid, tol).map_err(CliError::Compute)?;
        rows.push(json!({
            "m": m,
            "lower_bits": report.lower_bits,
            "upper_bits": report.upper_bits,
            "ratio_lower": report.ratio_lower,
            "ratio_upper": report.ratio_upper,
        }));
    }
    ResultRecord::new(
        "quant",
        &problem.label,
        &problem.digest_source,
        spec.seed,
        tol,
        json!({ "table": rows }),
    )
    .print();
    Ok(())
}

fn cmd_reproduce(figure: &str, out: Option<&std::path::Path>) -> Result<(), CliError> {
    let tol = input::env_tolerances()?;
    let csv = figures::reproduce(figure, &tol)?;
    match out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
