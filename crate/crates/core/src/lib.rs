//! Efficiency-optimal load distribution and unit switching for multi-unit
//! systems whose devices have concave, quadratic efficiency curves.
//!
//! - [`curves`]: efficiency curves, fleets and similar-efficiency families.
//! - [`allocator`]: the best split of a total input over a fixed set of units,
//!   and the dual minimum-input problem.
//! - [`commitment`]: which units to run, switching schedules and sweeps.
//! - [`oracle`]: a brute-force reference optimizer for small fleets.
//!
//! Grid-shaped work (sweeps, scans, oracle grids) runs on rayon when the
//! `parallel` feature is enabled and [`Execution::Parallel`] is selected.

pub mod allocator;
pub mod commitment;
pub mod curves;
pub mod error;
pub mod options;
pub mod oracle;
pub mod par;

pub use allocator::{
    allocate_best, allocate_similar, envelope_peak_input, marginal_value, min_input_for_output,
    stationary_candidates, Allocation, LoadBranch, MinInput, StationaryCandidate,
};
pub use commitment::{
    best_commitment, feasible_subsets, sweep, switching_schedule, verify_switching_points,
    AllocationRule, BreakpointCheck, Commitment, Regime, Subset, SweepRow, SwitchKind,
    SwitchingSchedule,
};
pub use curves::{
    detect_family, similarity_factor, validate, Branch, CurveViolation, EfficiencyCurve, Fleet,
    SimilarFamily, Unit, ValidationReport,
};
pub use error::{Error, Result};
pub use options::SolverOptions;
pub use oracle::{oracle_allocate, oracle_commitment, OracleResult};
pub use par::Execution;
