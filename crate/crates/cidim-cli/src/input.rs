//! Problem-specification input: TOML files, named presets, and tolerance
//! overrides (file section or the `CIDIM_TOLERANCES` environment variable).

use cidim::{validate_covariance, GaussianJoint, Tolerances};
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk problem specification.
///
/// ```toml
/// schema_version = 1
/// block_dims = [4, 4]
/// sigma = [
///   [1.0, 0.5, 0.0, 0.0, ...],
///   ...
/// ]
///
/// [tolerances]        # optional overrides
/// rank_tol = 1e-10
/// ```
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemSpecFile {
    schema_version: u32,
    block_dims: Vec<usize>,
    sigma: Vec<Vec<f64>>,
    #[serde(default)]
    tolerances: ToleranceOverrides,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub rank_tol: Option<f64>,
    pub one_tol: Option<f64>,
    pub as_tol: Option<f64>,
    pub solver_tol: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base: Tolerances) -> Result<Tolerances, CliError> {
        Tolerances::new(
            self.rank_tol.unwrap_or(base.rank_tol),
            self.one_tol.unwrap_or(base.one_tol),
            self.as_tol.unwrap_or(base.as_tol),
            self.solver_tol.unwrap_or(base.solver_tol),
        )
        .map_err(|e| CliError::Input(format!("invalid tolerances: {e}")))
    }
}

/// A parsed problem: the validated joint plus the raw bytes that produced it
/// (for digesting) and the tolerances in effect.
pub struct ProblemInput {
    pub joint: GaussianJoint,
    pub tolerances: Tolerances,
    pub digest_source: Vec<u8>,
    pub label: String,
}

/// Environment variable holding default tolerance overrides, e.g.
/// `CIDIM_TOLERANCES=rank_tol=1e-9,one_tol=1e-7`.
pub const TOLERANCE_ENV_VAR: &str = "CIDIM_TOLERANCES";

pub fn env_tolerances() -> Result<Tolerances, CliError> {
    let mut overrides = ToleranceOverrides::default();
    if let Ok(raw) = std::env::var(TOLERANCE_ENV_VAR) {
        for item in raw.split(',').filter(|s| !s.trim().is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                CliError::Input(format!(
                    "{TOLERANCE_ENV_VAR}: expected key=value entries, got {item:?}"
                ))
            })?;
            let parsed: f64 = value.trim().parse().map_err(|_| {
                CliError::Input(format!("{TOLERANCE_ENV_VAR}: bad value in {item:?}"))
            })?;
            match key.trim() {
                "rank_tol" => overrides.rank_tol = Some(parsed),
                "one_tol" => overrides.one_tol = Some(parsed),
                "as_tol" => overrides.as_tol = Some(parsed),
                "solver_tol" => overrides.solver_tol = Some(parsed),
                other => {
                    return Err(CliError::Input(format!(
                        "{TOLERANCE_ENV_VAR}: unknown tolerance {other:?}"
                    )))
                }
            }
        }
    }
    overrides.apply(Tolerances::default())
}

/// Loads a spec file or a named preset (exactly one must be given).
pub fn load_problem(
    spec_path: Option<&std::path::Path>,
    preset: Option<&str>,
) -> Result<ProblemInput, CliError> {
    match (spec_path, preset) {
        (Some(path), None) => load_file(path),
        (None, Some(name)) => load_preset(name),
        (None, None) => Err(CliError::Input(
            "provide either --spec <file> or --preset <name>".into(),
        )),
        (Some(_), Some(_)) => Err(CliError::Input(
            "--spec and --preset are mutually exclusive".into(),
        )),
    }
}

fn load_file(path: &std::path::Path) -> Result<ProblemInput, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Input(format!("{} is not UTF-8: {e}", path.display())))?;
    let parsed: ProblemSpecFile = toml::from_str(text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if parsed.schema_version != SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "{}: schema_version {} unsupported (expected {SCHEMA_VERSION})",
            path.display(),
            parsed.schema_version
        )));
    }

    let rows = parsed.sigma.len();
    let mut matrix = DMatrix::zeros(rows, rows);
    for (i, row) in parsed.sigma.iter().enumerate() {
        if row.len() != rows {
            return Err(CliError::Input(format!(
                "{}: sigma row {i} has {} entries but the matrix has {rows} rows \
                 (field sigma[{i}])",
                path.display(),
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "{}: sigma[{i}][{j}] is not finite",
                    path.display()
                )));
            }
            matrix[(i, j)] = v;
        }
    }

    let tolerances = parsed.tolerances.apply(env_tolerances()?)?;
    let joint = validate_covariance(&matrix, &parsed.block_dims, &tolerances)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(ProblemInput {
        joint,
        tolerances,
        digest_source: bytes,
        label: path.display().to_string(),
    })
}

fn load_preset(name: &str) -> Result<ProblemInput, CliError> {
    let joint = preset_joint(name)?;
    Ok(ProblemInput {
        joint,
        tolerances: env_tolerances()?,
        digest_source: format!("preset:{name}").into_bytes(),
        label: format!("preset:{name}"),
    })
}

/// Builds one of the named evaluation joints: `setup1`, `setup2:d=<k>`
/// (k in 1..=7) or `intro`.
pub fn preset_joint(name: &str) -> Result<GaussianJoint, CliError> {
    let tol = Tolerances::default();
    match name {
        "setup1" => {
            let marginal = [
                [1.0, 0.5, 0.0, 0.0],
                [0.5, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ];
            let mut cross = marginal;
            cross[3][3] = 0.3;
            Ok(pair_joint(&marginal, &marginal, &cross, &tol))
        }
        "intro" => {
            let marginal = [[1.0, 0.0], [0.0, 1.0]];
            let cross = [[0.0, 0.0], [0.0, 1.0]];
            Ok(pair_joint(&marginal, &marginal, &cross, &tol))
        }
        other => {
            if let Some(d_str) = other.strip_prefix("setup2:d=") {
                let d: usize = d_str.parse().map_err(|_| {
                    CliError::Input(format!("bad preset {other:?}: d must be an integer"))
                })?;
                if !(1..=7).contains(&d) {
                    return Err(CliError::Input(format!(
                        "bad preset {other:?}: d must lie in 1..=7"
                    )));
                }
                Ok(setup2_joint(d, &tol))
            } else {
                Err(CliError::Input(format!(
                    "unknown preset {other:?}; available: setup1, setup2:d=<1..7>, intro"
                )))
            }
        }
    }
}

pub fn setup2_joint(d: usize, tol: &Tolerances) -> GaussianJoint {
    let mut sigma = DMatrix::identity(14, 14);
    for i in 0..7 {
        let v = if i < d { 1.0 } else { 0.5 };
        sigma[(i, 7 + i)] = v;
        sigma[(7 + i, i)] = v;
    }
    validate_covariance(&sigma, &[7, 7], tol).expect("setup2 preset is valid")
}

fn pair_joint<const N: usize>(
    sigma_x: &[[f64; N]; N],
    sigma_y: &[[f64; N]; N],
    cross: &[[f64; N]; N],
    tol: &Tolerances,
) -> GaussianJoint {
    let mut sigma = DMatrix::zeros(2 * N, 2 * N);
    for i in 0..N {
        for j in 0..N {
            sigma[(i, j)] = sigma_x[i][j];
            sigma[(N + i, N + j)] = sigma_y[i][j];
            sigma[(i, N + j)] = cross[i][j];
            sigma[(N + j, i)] = cross[i][j];
        }
    }
    validate_covariance(&sigma, &[N, N], tol).expect("preset is valid")
}
