//! CLI surface tests: exit codes, deterministic output, preset golden files
//! and the input format.

use std::io::Write;
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cidim"))
}

fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
    let path = std::env::temp_dir().join(format!("cidim-test-{name}-{}", std::process::id()));
    let mut file = std::fs::File::create(&path).unwrap();
    file.write_all(contents.as_bytes()).unwrap();
    path
}

#[test]
fn exit_code_zero_on_success() {
    let output = binary().args(["wyner", "--preset", "setup1"]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn exit_code_two_on_malformed_sigma() {
    // Non-square sigma: row 1 is short.
    let spec = r#"
schema_version = 1
block_dims = [1, 1]
sigma = [[1.0, 0.0], [0.5]]
"#;
    let path = write_temp("nonsquare", spec);
    let output = binary()
        .args(["cid", "--spec", path.to_str().unwrap()])
        .output()
        .unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("sigma") && stderr.contains("row 1"),
        "error is not field-anchored: {stderr}"
    );
}

#[test]
fn exit_code_two_on_unknown_preset() {
    let output = binary().args(["cid", "--preset", "nope"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn exit_code_one_on_computation_error() {
    // A joint that does not decompose into equal groups and pairs: the
    // quantized bounds are unavailable.
    let spec = r#"
schema_version = 1
block_dims = [2, 2]
sigma = [
  [1.0, 0.0, 0.0, 0.6],
  [0.0, 1.0, 0.0, 0.0],
  [0.0, 0.0, 1.0, 0.0],
  [0.6, 0.0, 0.0, 1.0],
]
"#;
    let path = write_temp("nondecomposable", spec);
    let output = binary()
        .args(["quant", "--spec", path.to_str().unwrap(), "--m-grid", "4"])
        .output()
        .unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(output.status.code(), Some(1));
    let record: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(record["kind"], "computation");
}

#[test]
fn identical_invocations_are_byte_identical() {
    let run = || {
        binary()
            .args(["approx", "--preset", "setup1", "--eps-grid", "1e-2,1e-4", "--seed", "7"])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn spec_file_round_trips_against_preset() {
    let spec = r#"
schema_version = 1
block_dims = [4, 4]
sigma = [
  [1.0, 0.5, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0],
  [0.5, 1.0, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0],
  [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
  [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.3],
  [1.0, 0.5, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0],
  [0.5, 1.0, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0],
  [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
  [0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 1.0],
]
"#;
    let path = write_temp("setup1-file", spec);
    let from_file = binary()
        .args(["cid", "--spec", path.to_str().unwrap()])
        .output()
        .unwrap();
    std::fs::remove_file(&path).ok();
    let from_preset = binary().args(["cid", "--preset", "setup1"]).output().unwrap();
    let file_json: serde_json::Value = serde_json::from_slice(&from_file.stdout).unwrap();
    let preset_json: serde_json::Value = serde_json::from_slice(&from_preset.stdout).unwrap();
    assert_eq!(file_json["outputs"], preset_json["outputs"]);
}

#[test]
fn wyner_serializes_infinity_as_token_with_unit_count() {
    let output = binary().args(["wyner", "--preset", "setup1"]).output().unwrap();
    let record: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(record["outputs"]["bits"], "inf");
    assert_eq!(record["outputs"]["k"], 3);
}

#[test]
fn tolerance_env_var_is_honored() {
    let output = binary()
        .env("CIDIM_TOLERANCES", "rank_tol=1e-6")
        .args(["cid", "--preset", "setup1"])
        .output()
        .unwrap();
    let record: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(record["tolerances"]["rank_tol"], 1e-6);

    let bad = binary()
        .env("CIDIM_TOLERANCES", "rank_tol=banana")
        .args(["cid", "--preset", "setup1"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn reproduce_rejects_unknown_figure() {
    let output = binary().args(["reproduce", "fig9z"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn reproduce_fig2a_has_documented_columns() {
    let output = binary().args(["reproduce", "fig2a"]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = String::from_utf8(output.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "epsilon,approx_ratio,seq_ratio_min,seq_ratio_max"
    );
    assert_eq!(lines.count(), 13);
}

#[test]
fn reproduce_fig3a_table_shape_and_values() {
    let output = binary().args(["reproduce", "fig3a"]).output().unwrap();
    let text = String::from_utf8(output.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 14, "7 dimensions x 2 accuracies");
    // d = 5 at the coarse accuracy sits within ±15% of 19 bits.
    let coarse_d5: Vec<&str> = rows
        .iter()
        .copied()
        .filter(|r| r.starts_with("5,0.03125,"))
        .collect();
    assert_eq!(coarse_d5.len(), 1);
    let ci: f64 = coarse_d5[0].split(',').nth(2).unwrap().parse().unwrap();
    assert!((19.0 * 0.85..=19.0 * 1.15).contains(&ci), "ci {ci}");
}

#[test]
fn explicit_sign_pattern_is_accepted() {
    let output = binary()
        .args([
            "seq",
            "--preset",
            "setup1",
            "--eps-grid",
            "1e-3",
            "--pattern",
            "explicit:-1,-1,-1,1",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let record: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let ratio = record["outputs"]["table"][0]["ratio"].as_f64().unwrap();
    assert!(ratio > 3.0 && ratio < 4.0);
}

/// The preset matrices are the evaluation setups verbatim.
#[test]
fn preset_matrices_golden() {
    let setup1_rows = [
        [1.0, 0.5, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0],
        [0.5, 1.0, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.3],
        [1.0, 0.5, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0],
        [0.5, 1.0, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 1.0],
    ];
    let joint = cidim_cli::input::preset_joint("setup1").unwrap();
    assert_eq!(joint.block_dims(), &[4, 4]);
    for (i, row) in setup1_rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            assert_eq!(joint.sigma()[(i, j)], v, "setup1 sigma[{i}][{j}]");
        }
    }

    let joint2 = cidim_cli::input::preset_joint("setup2:d=3").unwrap();
    assert_eq!(joint2.block_dims(), &[7, 7]);
    for i in 0..7 {
        for j in 0..7 {
            let eye = if i == j { 1.0 } else { 0.0 };
            assert_eq!(joint2.sigma()[(i, j)], eye);
            assert_eq!(joint2.sigma()[(7 + i, 7 + j)], eye);
            let cross = if i != j {
                0.0
            } else if i < 3 {
                1.0
            } else {
                0.5
            };
            assert_eq!(joint2.sigma()[(i, 7 + j)], cross, "cross[{i}][{j}]");
        }
    }

    let intro = cidim_cli::input::preset_joint("intro").unwrap();
    assert_eq!(intro.block_dims(), &[2, 2]);
    assert_eq!(intro.sigma()[(1, 3)], 1.0);
    assert_eq!(intro.sigma()[(0, 2)], 0.0);
}
