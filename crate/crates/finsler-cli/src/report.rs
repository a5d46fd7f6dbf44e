//! Machine-readable verification reports.

use serde::Serialize;

/// Engine/environment facts recorded with every report.
#[derive(Debug, Clone, Serialize)]
pub struct EngineInfo {
    pub version: String,
    /// Jet truncation order in effect (FINSLER_MAX_JET_ORDER or default).
    pub jet_order: usize,
    /// Sign-convention probe result, when a conformal factor is present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelEcho {
    pub family: String,
    pub dim: usize,
}

/// One verified statement: residual statistics against its tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    /// Which configured check produced this row.
    pub check: String,
    /// Behavior-derived identifier of the individual statement.
    pub id: String,
    pub description: String,
    pub samples: usize,
    pub max_abs: f64,
    pub max_rel: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Full scenario outcome; `pass` is the conjunction of all rows.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub engine: EngineInfo,
    pub model: ModelEcho,
    pub seed: u64,
    pub checks: Vec<CheckRow>,
    pub pass: bool,
}
