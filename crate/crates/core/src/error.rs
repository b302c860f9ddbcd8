//! Error types for each subsystem.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid orbit: {0}")]
    InvalidOrbit(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkBudgetError {
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("no satellite above {min_elevation_deg} deg elevation")]
    NotReachable { min_elevation_deg: f64 },
    #[error("residual {residual_us:.3} us outside bipolar TA range +/-{range_us:.3} us")]
    TaOutOfRange { residual_us: f64, range_us: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MobilityError {
    #[error("no candidate cells")]
    NoCell,
    #[error("domain error: {0}")]
    Domain(String),
}

/// Scenario validation failure listing every offending field.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid scenario config: {}", .0.join("; "))]
pub struct ValidationError(pub Vec<String>);

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("event causality violated: {0}")]
    Causality(String),
    #[error("trace output failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace output failed: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    LinkBudget(#[from] LinkBudgetError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("{0}")]
    Unsupported(String),
}
