//! The batch commands behind the CLI.
//!
//! Output directory layout:
//!
//! ```text
//! config.toml                      effective configuration
//! frames/fNNN/truth.pwimg          scatterer map
//! frames/fNNN/rf_AAA.pwrf          channel data per steering angle
//! beamformed/fNNN_{single,compound}.{pwimg,pgm}
//! denoiser.pwdn, train_report.csv
//! recon/fNNN_<method>.{pwimg,pgm}, recon/fNNN_<method>_log.csv
//! metrics.csv, timings.csv
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;

use crate::acoustics::bmode;
use crate::denoiser::{Denoiser, LinearPatchDenoiser, TrainReport};
use crate::diffusion::write_run_log;
use crate::harness::config::{ExperimentConfig, SamplerSettings, ScheduleKind};
use crate::harness::pipeline::{acquire, reconstruct, train, Acquisition, Method, Reconstruction, Scene};
use crate::io::{load_frame, load_image, save_frame, save_image, save_pgm};
use crate::metrics::{bmode_contrast, Contrast};
use crate::phantom::{roi_masks, RoiMasks};
use crate::rng::child_seed;
use crate::{Error, Image, Result};

/// Seed of frame `index`: drives its phantom, channel noise and diffusion
/// initialisation through separate stage streams.
pub fn frame_seed(master: u64, index: usize) -> u64 {
    child_seed(master, index as u64)
}

pub fn scene(cfg: &ExperimentConfig) -> Result<Scene> {
    Scene::with_apodization(
        &cfg.geometry,
        &cfg.grid,
        cfg.acquisition.angle_count,
        cfg.angle_span(),
        cfg.acquisition.apodization,
    )
}

pub fn roi(cfg: &ExperimentConfig) -> Result<RoiMasks> {
    roi_masks(
        &cfg.phantom_spec(0),
        &cfg.grid,
        cfg.metrics.roi_margin_pixels * cfg.grid.dx().max(cfg.grid.dz()),
    )
}

pub fn contrast(cfg: &ExperimentConfig, masks: &RoiMasks, img: &Image) -> Result<Contrast> {
    bmode_contrast(img, masks, cfg.metrics.dynamic_range_db, cfg.metrics.gcnr_bins)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot create {}: {e}", path.display()),
        ))
    })
}

/// Creates the output directory and echoes the effective configuration.
pub fn prepare_output(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    create_dir(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("config.toml"), cfg.to_toml())?;
    Ok(())
}

fn frame_dir(cfg: &ExperimentConfig, frame: usize) -> PathBuf {
    cfg.output_dir.join("frames").join(format!("f{frame:03}"))
}

pub fn denoiser_path(cfg: &ExperimentConfig) -> PathBuf {
    if cfg.denoiser.path.is_absolute() {
        cfg.denoiser.path.clone()
    } else {
        cfg.output_dir.join(&cfg.denoiser.path)
    }
}

/// In-memory acquisition of frame `index`.
pub fn simulate_frame(cfg: &ExperimentConfig, scene: &Scene, index: usize) -> Result<Acquisition> {
    let seed = frame_seed(cfg.seed, index);
    acquire(scene, &cfg.phantom_spec(seed), cfg.acquisition.gamma, seed)
}

/// Writes the ground truth and per-angle channel data of every frame.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    prepare_output(cfg)?;
    let scene = scene(cfg)?;
    let mut written = Vec::new();
    for f in 0..cfg.acquisition.frames {
        let acq = simulate_frame(cfg, &scene, f)?;
        let dir = frame_dir(cfg, f);
        create_dir(&dir)?;
        let truth = dir.join("truth.pwimg");
        save_image(&truth, &acq.truth)?;
        written.push(truth);
        for (a, frame) in acq.frames.iter().enumerate() {
            let path = dir.join(format!("rf_{a:03}.pwrf"));
            save_frame(&path, frame)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Reads a simulated frame back and beamforms every angle.
pub fn load_frame_set(cfg: &ExperimentConfig, scene: &Scene, index: usize) -> Result<Acquisition> {
    let dir = frame_dir(cfg, index);
    let missing = |p: &Path| {
        Error::Config(format!(
            "missing {}; run `simulate` first",
            p.display()
        ))
    };
    let truth_path = dir.join("truth.pwimg");
    if !truth_path.exists() {
        return Err(missing(&truth_path));
    }
    let truth = load_image(&truth_path)?;
    let per_angle: Vec<_> = (0..scene.angles().len())
        .into_par_iter()
        .map(|a| {
            let path = dir.join(format!("rf_{a:03}.pwrf"));
            if !path.exists() {
                return Err(missing(&path));
            }
            let y = load_frame(&path)?;
            let das = scene.operator(a)?.adjoint(&y)?;
            Ok((y, das))
        })
        .collect::<Result<_>>()?;
    let (frames, das) = per_angle.into_iter().unzip();
    Ok(Acquisition { truth, frames, das })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamformMode {
    Single,
    Compound,
}

impl BeamformMode {
    pub fn name(&self) -> &'static str {
        match self {
            BeamformMode::Single => "single",
            BeamformMode::Compound => "compound",
        }
    }
}

impl std::str::FromStr for BeamformMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(BeamformMode::Single),
            "compound" => Ok(BeamformMode::Compound),
            other => Err(Error::param(format!("unknown beamform mode {other:?}"))),
        }
    }
}

fn save_display(cfg: &ExperimentConfig, stem: &Path, img: &Image) -> Result<PathBuf> {
    let linear = stem.with_extension("pwimg");
    save_image(&linear, img)?;
    let dr = cfg.metrics.dynamic_range_db;
    save_pgm(stem.with_extension("pgm"), &bmode(img, dr)?, dr)?;
    Ok(linear)
}

/// DAS images of every simulated frame.
pub fn cmd_beamform(cfg: &ExperimentConfig, mode: BeamformMode) -> Result<Vec<PathBuf>> {
    prepare_output(cfg)?;
    let scene = scene(cfg)?;
    let dir = cfg.output_dir.join("beamformed");
    create_dir(&dir)?;
    let mut written = Vec::new();
    for f in 0..cfg.acquisition.frames {
        let acq = load_frame_set(cfg, &scene, f)?;
        let img = match mode {
            BeamformMode::Single => acq.das[scene.single_index()].clone(),
            BeamformMode::Compound => acq.compound()?,
        };
        let stem = dir.join(format!("f{f:03}_{}", mode.name()));
        written.push(save_display(cfg, &stem, &img)?);
    }
    Ok(written)
}

/// Fits the linear patch denoiser on compounded phantoms and saves it.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainReport> {
    prepare_output(cfg)?;
    let (model, report) = train_denoiser(cfg)?;
    model.save(denoiser_path(cfg))?;
    let mut w = BufWriter::new(File::create(cfg.output_dir.join("train_report.csv"))?);
    writeln!(w, "sigma,mse,identity_mse")?;
    for fit in &report.fits {
        writeln!(w, "{},{},{}", fit.sigma, fit.mse, fit.identity_mse)?;
    }
    w.flush()?;
    Ok(report)
}

pub fn train_denoiser(cfg: &ExperimentConfig) -> Result<(LinearPatchDenoiser, TrainReport)> {
    let scene = scene(cfg)?;
    train(
        &scene,
        &cfg.phantom_spec(0),
        cfg.acquisition.gamma,
        cfg.denoiser.training_phantoms,
        &cfg.denoiser.train,
        cfg.seed,
    )
}

pub fn load_denoiser(cfg: &ExperimentConfig) -> Result<LinearPatchDenoiser> {
    let path = denoiser_path(cfg);
    if !path.exists() {
        return Err(Error::Config(format!(
            "missing {}; run `train` first",
            path.display()
        )));
    }
    LinearPatchDenoiser::load(path)
}

/// One line of `metrics.csv`. Fields that do not apply to a method are left
/// empty.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub frame: usize,
    pub method: Method,
    pub steps: Option<usize>,
    pub n_full: Option<usize>,
    pub sigma_k: Option<f64>,
    pub sigma_max: Option<f64>,
    pub schedule_mode: Option<ScheduleKind>,
    pub seed: u64,
    pub cnr_db: f64,
    pub gcnr: f64,
    pub denoiser_calls: usize,
    pub wall: Duration,
}

pub const METRICS_HEADER: &str =
    "frame,method,steps,n_full,sigma_k,sigma_max,schedule_mode,seed,cnr_db,gcnr,denoiser_calls";
pub const TIMINGS_HEADER: &str = "frame,method,steps,sigma_max,schedule_mode,wall_ms";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl MetricsRow {
    fn new(
        cfg: &ExperimentConfig,
        frame: usize,
        method: Method,
        settings: &SamplerSettings,
        rec: &Reconstruction,
        c: Contrast,
    ) -> Self {
        let (steps, n_full, sigma_k, sigma_max, mode) = match method {
            Method::DasSingle | Method::DasCompound => (None, None, None, None, None),
            Method::EdmFull => (
                Some(settings.n_full),
                Some(settings.n_full),
                None,
                Some(settings.sigma_max),
                None,
            ),
            Method::EdmShortcut => (
                Some(settings.steps),
                Some(settings.n_full),
                Some(settings.sigma_k),
                Some(settings.sigma_max),
                Some(settings.schedule_mode),
            ),
        };
        Self {
            frame,
            method,
            steps,
            n_full,
            sigma_k,
            sigma_max,
            schedule_mode: mode,
            seed: frame_seed(cfg.seed, frame),
            cnr_db: c.cnr_db,
            gcnr: c.gcnr,
            denoiser_calls: rec.run.as_ref().map_or(0, |r| r.denoiser_calls()),
            wall: rec.wall,
        }
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.frame,
            self.method.name(),
            opt(self.steps),
            opt(self.n_full),
            opt(self.sigma_k),
            opt(self.sigma_max),
            opt(self.schedule_mode.map(|m| m.name())),
            self.seed,
            self.cnr_db,
            self.gcnr,
            self.denoiser_calls
        )
    }

    pub fn timing_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:.3}",
            self.frame,
            self.method.name(),
            opt(self.steps),
            opt(self.sigma_max),
            opt(self.schedule_mode.map(|m| m.name())),
            self.wall.as_secs_f64() * 1e3
        )
    }
}

/// Writes `rows` to `metrics.csv` and `timings.csv`, either replacing the
/// files or appending below an existing header.
pub fn write_metrics(dir: &Path, rows: &[MetricsRow], append: bool) -> Result<()> {
    for (name, header, line) in [
        ("metrics.csv", METRICS_HEADER, MetricsRow::csv as fn(&MetricsRow) -> String),
        ("timings.csv", TIMINGS_HEADER, MetricsRow::timing_csv),
    ] {
        let path = dir.join(name);
        let fresh = !append || !path.exists();
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .append(!fresh)
            .truncate(fresh)
            .open(&path)?;
        let mut w = BufWriter::new(file);
        if fresh {
            writeln!(w, "{header}")?;
        }
        for row in rows {
            writeln!(w, "{}", line(row))?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Runs `method` on every simulated frame, saving images and appending
/// metric rows.
pub fn cmd_reconstruct(cfg: &ExperimentConfig, method: Method) -> Result<Vec<MetricsRow>> {
    prepare_output(cfg)?;
    let scene = scene(cfg)?;
    let masks = roi(cfg)?;
    let denoiser = match method {
        Method::EdmFull | Method::EdmShortcut => Some(load_denoiser(cfg)?),
        _ => None,
    };
    let dir = cfg.output_dir.join("recon");
    create_dir(&dir)?;
    let mut rows = Vec::new();
    for f in 0..cfg.acquisition.frames {
        let acq = load_frame_set(cfg, &scene, f)?;
        let rec = reconstruct(
            method,
            &scene,
            &acq,
            denoiser.as_ref(),
            &cfg.sampler,
            frame_seed(cfg.seed, f),
        )?;
        let stem = dir.join(format!("f{f:03}_{}", method.name()));
        save_display(cfg, &stem, &rec.image)?;
        if let Some(run) = &rec.run {
            let log = dir.join(format!("f{f:03}_{}_log.csv", method.name()));
            let mut w = BufWriter::new(File::create(log)?);
            write_run_log(&mut w, &run.log)?;
            w.flush()?;
        }
        let c = contrast(cfg, &masks, &rec.image)?;
        rows.push(MetricsRow::new(cfg, f, method, &cfg.sampler, &rec, c));
    }
    write_metrics(&cfg.output_dir, &rows, true)?;
    Ok(rows)
}

/// One cell of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub sigma_max: f64,
    pub steps: usize,
    pub mode: ScheduleKind,
}

impl SweepCell {
    pub fn settings(&self, base: &SamplerSettings) -> SamplerSettings {
        SamplerSettings {
            sigma_max: self.sigma_max,
            steps: self.steps,
            schedule_mode: self.mode,
            ..base.clone()
        }
    }
}

/// Cells of the configured sweep; truncate cells with `steps > n_full` are
/// skipped.
pub fn sweep_cells(cfg: &ExperimentConfig) -> Vec<SweepCell> {
    let mut cells = Vec::new();
    for &mode in &cfg.sweep.modes {
        for &sigma_max in &cfg.sweep.sigma_max {
            for &steps in &cfg.sweep.steps {
                if mode == ScheduleKind::Truncate && steps > cfg.sampler.n_full {
                    continue;
                }
                cells.push(SweepCell {
                    sigma_max,
                    steps,
                    mode,
                });
            }
        }
    }
    cells
}

/// Shortcut reconstructions over the (σ_max, s, mode) grid plus single-PW
/// and compounded DAS baselines, for every frame. Replaces `metrics.csv`.
pub fn cmd_sweep<D: Denoiser + ?Sized>(cfg: &ExperimentConfig, denoiser: &D) -> Result<Vec<MetricsRow>> {
    prepare_output(cfg)?;
    let scene = scene(cfg)?;
    let masks = roi(cfg)?;
    let cells = sweep_cells(cfg);
    let frames: Vec<Acquisition> = (0..cfg.acquisition.frames)
        .map(|f| simulate_frame(cfg, &scene, f))
        .collect::<Result<_>>()?;
    let mut jobs: Vec<(usize, Method, SamplerSettings)> = Vec::new();
    for f in 0..frames.len() {
        jobs.push((f, Method::DasSingle, cfg.sampler.clone()));
        jobs.push((f, Method::DasCompound, cfg.sampler.clone()));
        for cell in &cells {
            jobs.push((f, Method::EdmShortcut, cell.settings(&cfg.sampler)));
        }
    }
    let rows = jobs
        .par_iter()
        .map(|(f, method, settings)| {
            let rec = reconstruct(
                *method,
                &scene,
                &frames[*f],
                Some(denoiser),
                settings,
                frame_seed(cfg.seed, *f),
            )?;
            let c = contrast(cfg, &masks, &rec.image)?;
            Ok(MetricsRow::new(cfg, *f, *method, settings, &rec, c))
        })
        .collect::<Result<Vec<_>>>()?;
    write_metrics(&cfg.output_dir, &rows, false)?;
    Ok(rows)
}

/// CNR and gCNR of stored PWIMG images against the configured cyst ROI.
pub fn cmd_metrics(cfg: &ExperimentConfig, images: &[PathBuf]) -> Result<Vec<(PathBuf, Contrast)>> {
    cfg.validate()?;
    if images.is_empty() {
        return Err(Error::param("no images given"));
    }
    let masks = roi(cfg)?;
    images
        .iter()
        .map(|p| {
            let img = load_image(p)?;
            if img.shape() != (cfg.grid.axial_count, cfg.grid.lateral_count) {
                return Err(Error::dims(
                    "metrics image",
                    format!("{}x{}", cfg.grid.axial_count, cfg.grid.lateral_count),
                    format!("{}x{}", img.n_z(), img.n_x()),
                ));
            }
            Ok((p.clone(), contrast(cfg, &masks, &img)?))
        })
        .collect()
}
