//! Headless experiment runner: single trials, grid sweeps with a CSV result
//! store, and the regression summary over a sweep.

pub mod stats;
pub mod summary;
pub mod sweep;
pub mod trajectory;
pub mod trial;

pub use summary::{fit_performance_model, SweepSummary};
pub use sweep::{run_sweep, run_sweep_to_csv, SweepSpec};
pub use trial::{run_trial, TrialResult};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sim(#[from] swarm_core::SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
    #[error("{0}")]
    Invalid(String),
}
