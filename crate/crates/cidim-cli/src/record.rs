//! Machine-readable result records.
//!
//! One JSON object per invocation on standard output. Serialization is
//! deterministic: object keys come out sorted, floats use the shortest
//! round-trip form, and infinite common-information values are encoded as
//! the token `"inf"` next to the unit count so downstream scripts can tell
//! the degree of singularity apart.

use cidim::{CiValue, Tolerances};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub input: String,
    pub input_digest: String,
    pub seed: u64,
    pub tolerances: ToleranceView,
    pub outputs: serde_json::Value,
}

#[derive(Debug, Serialize)]
pub struct ToleranceView {
    pub rank_tol: f64,
    pub one_tol: f64,
    pub as_tol: f64,
    pub solver_tol: f64,
}

impl From<&Tolerances> for ToleranceView {
    fn from(tol: &Tolerances) -> Self {
        Self {
            rank_tol: tol.rank_tol,
            one_tol: tol.one_tol,
            as_tol: tol.as_tol,
            solver_tol: tol.solver_tol,
        }
    }
}

impl ResultRecord {
    pub fn new(
        command: &str,
        label: &str,
        digest_source: &[u8],
        seed: u64,
        tol: &Tolerances,
        outputs: serde_json::Value,
    ) -> Self {
        Self {
            schema_version: crate::input::SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            input: label.to_string(),
            input_digest: hex_digest(digest_source),
            seed,
            tolerances: tol.into(),
            outputs,
        }
    }

    pub fn print(&self) {
        println!(
            "{}",
            serde_json::to_string_pretty(self).expect("record serializes")
        );
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Bits value as JSON: a number when finite, the token `"inf"` otherwise.
pub fn bits_json(value: &CiValue) -> serde_json::Value {
    match value.finite() {
        Some(v) => serde_json::json!(v),
        None => serde_json::json!("inf"),
    }
}
