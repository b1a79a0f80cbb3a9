//! Closed-loop scenario execution and everything computed from its trace.

mod diagnostics;
mod runner;
mod scenario;
mod summary;
pub mod trace;

pub use diagnostics::{
    excitation_bounds, p12_series, persistent_excitation, PeReport, PeWindow, PE_FLOOR,
};
pub use runner::{run, RunAbort, RunOutput, StepRecord};
pub use scenario::{Mode, RunConfig, Scenario, WorldInit, REFERENCE_JSON};
pub use summary::{summarize, Convergence, ErrorStats, Summary, Thresholds};
