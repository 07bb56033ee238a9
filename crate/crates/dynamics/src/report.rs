use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A single measured-versus-bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub inputs: Value,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// Passes when `measured < bound`.
    pub fn below(name: impl Into<String>, inputs: Value, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), inputs, measured, bound, pass: measured < bound }
    }

    /// Passes when `measured >= bound`.
    pub fn at_least(name: impl Into<String>, inputs: Value, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), inputs, measured, bound, pass: measured >= bound }
    }
}
