use thiserror::Error;

use crate::curves::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input {value} is outside the domain: lower bound is 0")]
    BelowZero { value: f64 },
    #[error("input {value} is outside the domain: upper bound p_max = {p_max}")]
    AboveCapacity { value: f64, p_max: f64 },
    #[error("input is not a finite number")]
    NotFinite,
    #[error("invalid efficiency curve: {0}")]
    InvalidCurve(ValidationReport),
    #[error("efficiency level {level} exceeds the peak efficiency {peak}")]
    LevelAbovePeak { level: f64, peak: f64 },
    #[error("efficiency level {0} must be positive")]
    LevelNotPositive(f64),
    #[error("root {root} of the efficiency equation exceeds p_max = {p_max}")]
    RootAboveCapacity { root: f64, p_max: f64 },
    #[error("a fleet needs at least one unit")]
    EmptyFleet,
    #[error("fleet has {0} units, at most {max} are supported", max = crate::curves::MAX_FLEET_SIZE)]
    FleetTooLarge(usize),
    #[error("unit ids must be non-empty")]
    EmptyUnitId,
    #[error("duplicate unit id {0:?}")]
    DuplicateUnitId(String),
    #[error("unknown unit id {0:?}")]
    UnknownUnit(String),
    #[error("total input must be non-negative, got {0}")]
    NegativeInput(f64),
    #[error("total input {requested} exceeds the available capacity {capacity}")]
    Infeasible { requested: f64, capacity: f64 },
    #[error("target output {requested} exceeds the maximum achievable output {maximum}")]
    OutputUnreachable { requested: f64, maximum: f64 },
    #[error("oracle supports at most 3 units, got {0}")]
    OracleUnsupported(usize),
    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("invalid step {step} for a range of width {width}")]
    InvalidStep { step: f64, width: f64 },
}
