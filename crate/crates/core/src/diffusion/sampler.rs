use std::io::Write;

use serde::{Deserialize, Serialize};

use super::consistency::DataConsistency;
use super::schedule::{forward_diffuse, from_sigmas, karras_schedule, NoiseSchedule};
use crate::denoiser::Denoiser;
use crate::{Error, Image, Result};

/// One deterministic Heun step of the probability-flow ODE from `sigma_cur`
/// down to `sigma_next`. Returns the new state and the number of denoiser
/// evaluations (2, or 1 when stepping to σ = 0).
pub fn heun_step<D: Denoiser + ?Sized>(
    denoiser: &D,
    x: &Image,
    sigma_cur: f64,
    sigma_next: f64,
) -> Result<(Image, usize)> {
    if !(sigma_cur > sigma_next) || !(sigma_next >= 0.0) {
        return Err(Error::param(format!(
            "Heun step needs sigma_cur > sigma_next >= 0, got {sigma_cur} -> {sigma_next}"
        )));
    }
    let h = sigma_next - sigma_cur;
    let denoised = denoiser.denoise(x, sigma_cur)?;
    x.check_same_shape(&denoised, "denoiser output")?;
    if sigma_next == 0.0 {
        // The Euler step x + (0 − σ)(x − D)/σ collapses onto D.
        return Ok((denoised, 1));
    }
    let d_cur = slope(x, &denoised, sigma_cur)?;
    let euler = x.axpy(h, &d_cur)?;
    let denoised_next = denoiser.denoise(&euler, sigma_next)?;
    let slope_next = slope(&euler, &denoised_next, sigma_next)?;
    let avg = d_cur.axpy(1.0, &slope_next)?;
    Ok((x.axpy(0.5 * h, &avg)?, 2))
}

/// `(x − D)/σ`.
fn slope(x: &Image, denoised: &Image, sigma: f64) -> Result<Image> {
    x.check_same_shape(denoised, "denoiser output")?;
    let inv = 1.0 / sigma;
    let data = x
        .data()
        .iter()
        .zip(denoised.data())
        .map(|(a, b)| (a - b) * inv)
        .collect();
    Image::from_vec(x.n_z(), x.n_x(), data)
}

/// One row of the sampler run log.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub sigma_cur: f64,
    pub sigma_next: f64,
    /// `‖Hx − y‖₂` before and after the data-consistency update, when
    /// measurements are attached.
    pub residual_before: Option<f64>,
    pub residual_after: Option<f64>,
    pub denoiser_calls: usize,
}

#[derive(Debug, Clone)]
pub struct SampleRun {
    pub image: Image,
    /// Standard deviation of the noise the walk started from.
    pub initial_sigma: f64,
    pub log: Vec<StepRecord>,
}

impl SampleRun {
    pub fn denoiser_calls(&self) -> usize {
        count_denoiser_calls(&self.log)
    }

    pub fn steps(&self) -> usize {
        self.log.len()
    }
}

/// Total denoiser evaluations recorded in a run log.
pub fn count_denoiser_calls(log: &[StepRecord]) -> usize {
    log.iter().map(|r| r.denoiser_calls).sum()
}

/// Writes the run log as CSV with a header row.
pub fn write_run_log(w: &mut impl Write, log: &[StepRecord]) -> Result<()> {
    writeln!(
        w,
        "step,sigma_cur,sigma_next,residual_before,residual_after,denoiser_calls"
    )?;
    let opt = |v: Option<f64>| v.map(|r| format!("{r:.9e}")).unwrap_or_default();
    for r in log {
        writeln!(
            w,
            "{},{:.9e},{:.9e},{},{},{}",
            r.step,
            r.sigma_cur,
            r.sigma_next,
            opt(r.residual_before),
            opt(r.residual_after),
            r.denoiser_calls
        )?;
    }
    Ok(())
}

/// Alternates Heun steps and data consistency along `schedule`.
fn reverse<D: Denoiser + ?Sized>(
    denoiser: &D,
    mut x: Image,
    schedule: &NoiseSchedule,
    dc: &DataConsistency<'_>,
) -> Result<(Image, Vec<StepRecord>)> {
    let sigmas = schedule.sigmas();
    let mut log = Vec::with_capacity(sigmas.len() - 1);
    for (step, pair) in sigmas.windows(2).enumerate() {
        let (next, calls) = heun_step(denoiser, &x, pair[0], pair[1])?;
        let (next, dc_step) = dc.apply(&next)?;
        let residual_after = if dc_step.is_some() {
            Some(dc.residual_norm(&next)?)
        } else {
            None
        };
        log.push(StepRecord {
            step,
            sigma_cur: pair[0],
            sigma_next: pair[1],
            residual_before: dc_step.map(|s| s.residual_before),
            residual_after,
            denoiser_calls: calls,
        });
        x = next;
    }
    Ok((x, log))
}

/// Reverse diffusion from pure noise `σ_0·z` over the full schedule.
pub fn sample_full<D: Denoiser + ?Sized>(
    denoiser: &D,
    schedule: &NoiseSchedule,
    shape: (usize, usize),
    dc: &DataConsistency<'_>,
    seed: u64,
) -> Result<SampleRun> {
    let sigma0 = schedule.sigmas()[0];
    let x = forward_diffuse(&Image::zeros(shape.0, shape.1), sigma0, seed)?;
    let (image, log) = reverse(denoiser, x, schedule, dc)?;
    Ok(SampleRun {
        image,
        initial_sigma: sigma0,
        log,
    })
}

/// How the shortened reverse schedule is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum ScheduleMode {
    /// Fresh Karras schedule of `steps` levels from `σ_k` down to `σ_min`.
    Rebuild { steps: usize },
    /// Last `steps` steps of the `n_full`-level Karras schedule from `σ_max`,
    /// i.e. the walk skips the first `k = n_full − steps` levels.
    Truncate {
        n_full: usize,
        steps: usize,
        sigma_max: f64,
    },
}

impl ScheduleMode {
    pub fn name(&self) -> &'static str {
        match self {
            ScheduleMode::Rebuild { .. } => "rebuild",
            ScheduleMode::Truncate { .. } => "truncate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortcutConfig {
    /// Standard deviation of the noise injected into the single-PW image.
    pub sigma_k: f64,
    pub sigma_min: f64,
    pub rho: f64,
    pub mode: ScheduleMode,
}

impl ShortcutConfig {
    pub fn rebuild(sigma_k: f64, steps: usize) -> Self {
        Self {
            sigma_k,
            sigma_min: 0.002,
            rho: 7.0,
            mode: ScheduleMode::Rebuild { steps },
        }
    }

    pub fn truncate(sigma_k: f64, sigma_max: f64, n_full: usize, steps: usize) -> Self {
        Self {
            sigma_k,
            sigma_min: 0.002,
            rho: 7.0,
            mode: ScheduleMode::Truncate {
                n_full,
                steps,
                sigma_max,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_k > self.sigma_min) {
            return Err(Error::param(format!(
                "sigma_k ({}) must exceed sigma_min ({})",
                self.sigma_k, self.sigma_min
            )));
        }
        match self.mode {
            ScheduleMode::Rebuild { steps: 0 } => {
                Err(Error::param("shortcut needs at least one step"))
            }
            ScheduleMode::Truncate {
                n_full,
                steps,
                sigma_max,
            } => {
                if steps == 0 || steps > n_full {
                    return Err(Error::param(format!(
                        "truncate mode needs 1 <= steps <= n_full, got steps={steps}, n_full={n_full}"
                    )));
                }
                if self.sigma_k > sigma_max {
                    return Err(Error::param(format!(
                        "truncate mode: sigma_k ({}) exceeds sigma_max ({sigma_max})",
                        self.sigma_k
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The reverse sub-schedule this configuration walks.
    pub fn sub_schedule(&self) -> Result<NoiseSchedule> {
        self.validate()?;
        match self.mode {
            ScheduleMode::Rebuild { steps } => {
                karras_schedule(steps, self.sigma_min, self.sigma_k, self.rho)
            }
            ScheduleMode::Truncate {
                n_full,
                steps,
                sigma_max,
            } => {
                let full = karras_schedule(n_full, self.sigma_min, sigma_max, self.rho)?;
                from_sigmas(full.sigmas()[n_full - steps..].to_vec(), self.rho)
            }
        }
    }
}

/// Reverse diffusion started from the noise-injected single-PW image
/// `x_s + σ·z`, where `σ` is the first level of the sub-schedule (`σ_k` in
/// rebuild mode, the scheduled level at index `k` in truncate mode; the run
/// reports it as `initial_sigma`).
pub fn sample_shortcut<D: Denoiser + ?Sized>(
    denoiser: &D,
    x_s: &Image,
    cfg: &ShortcutConfig,
    dc: &DataConsistency<'_>,
    seed: u64,
) -> Result<SampleRun> {
    let schedule = cfg.sub_schedule()?;
    let start = schedule.sigmas()[0];
    let x = forward_diffuse(x_s, start, seed)?;
    let (image, log) = reverse(denoiser, x, &schedule, dc)?;
    Ok(SampleRun {
        image,
        initial_sigma: start,
        log,
    })
}
