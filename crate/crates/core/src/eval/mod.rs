//! Episode execution, coverage, metrics, logging, and batch evaluation.

mod batch;
mod coverage;
mod env;
mod episode;
mod log;
mod metrics;

pub use batch::{attach_optimal_lengths, evaluate, run_batch, EpisodeSpec};
pub use coverage::CoverageState;
pub use env::SimRolloutEnv;
pub use episode::{
    run_episode, EpisodeCore, EpisodeRecord, EpisodeStatus, Observation, ReplayPolicy,
    StepOutcome, StepRecord,
};
pub use log::{read_log, write_log, LoggedEpisode, LOG_FORMAT, LOG_VERSION};
pub use metrics::{
    compute_metrics, success_region, MetricSet, MetricsReport, CR_DEFINITION,
};
