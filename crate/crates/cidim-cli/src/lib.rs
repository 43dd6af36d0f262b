//! Library half of the command-line front end: input parsing, result
//! records and figure datasets. The binary in `main.rs` is a thin dispatcher
//! over these.

pub mod figures;
pub mod input;
pub mod record;

#[derive(Debug)]
pub enum CliError {
    /// Bad input: malformed file, unknown preset or flag combination.
    Input(String),
    /// The computation itself failed.
    Compute(cidim::Error),
}
