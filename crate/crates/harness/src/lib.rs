//! Monte Carlo experiments around [`pirec_core`]: end-to-end recovery trials with and
//! without early stopping, the correct-probability and wasted-iteration metrics,
//! parameter sweeps, the return-to-correct-state experiment, configuration files and
//! CSV output.

pub mod config;
mod error;
pub mod metrics;
pub mod output;
pub mod returns;
pub mod sweep;
pub mod trial;

pub use config::{ExperimentConfig, ThresholdSetting};
pub use error::{Error, Result};
pub use metrics::{correct_probability, wasted_iterations, MeanEstimate};
pub use sweep::{run_point, sweep, PointResult, PointSpec, SweepResult};
pub use trial::{failure_onset, run_paired_trial, run_trial, PairedTrial, TrialRecord, TrialSpec};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "PIREC_THREADS";

/// Runs `f` on a dedicated pool with `threads` workers (`None`: [`THREADS_ENV`], then
/// all cores).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let threads = threads
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}
