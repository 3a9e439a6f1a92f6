//! Experiment orchestration: configuration, the batch commands and the
//! end-to-end pipeline they share.

pub mod commands;
pub mod config;
pub mod pipeline;

pub use commands::{
    cmd_beamform, cmd_metrics, cmd_reconstruct, cmd_simulate, cmd_sweep, cmd_train, BeamformMode,
    MetricsRow,
};
pub use config::{ExperimentConfig, SamplerSettings, ScheduleKind};
pub use pipeline::Method;

/// Runs `f` on a rayon pool with `threads` workers (0 = all cores).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> crate::Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
