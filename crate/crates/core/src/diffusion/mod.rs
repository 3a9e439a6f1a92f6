//! Noise schedule, Heun reverse sampler, data consistency and the shortcut
//! sampler that starts from a noise-injected single plane-wave image.

mod consistency;
mod sampler;
mod schedule;

pub use consistency::{
    data_consistency, ConsistencyStep, DataConsistency, LinearModel, Measurement,
    RELATIVE_RESIDUAL_FLOOR,
};
pub use sampler::{
    count_denoiser_calls, heun_step, sample_full, sample_shortcut, write_run_log, SampleRun,
    ScheduleMode, ShortcutConfig, StepRecord,
};
pub use schedule::{forward_diffuse, karras_schedule, NoiseSchedule};
