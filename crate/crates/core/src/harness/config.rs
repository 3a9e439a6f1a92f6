//! TOML experiment configuration.
//!
//! Every section is optional; omitted keys take the defaults below. The
//! effective configuration is written back as `config.toml` in the output
//! directory by each command.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acoustics::{Apodization, ImagingGrid, TransducerGeometry};
use crate::denoiser::TrainConfig;
use crate::diffusion::{ScheduleMode, ShortcutConfig};
use crate::metrics::{DEFAULT_DYNAMIC_RANGE_DB, DEFAULT_GCNR_BINS};
use crate::phantom::{Cyst, PhantomSpec, PointTarget};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub geometry: TransducerGeometry,
    #[serde(default)]
    pub grid: ImagingGrid,
    #[serde(default)]
    pub phantom: PhantomConfig,
    #[serde(default)]
    pub acquisition: AcquisitionConfig,
    #[serde(default)]
    pub denoiser: DenoiserConfig,
    #[serde(default)]
    pub sampler: SamplerSettings,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Defaults with the given master seed.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            output_dir: default_output_dir(),
            threads: 0,
            geometry: TransducerGeometry::default(),
            grid: ImagingGrid::default(),
            phantom: PhantomConfig::default(),
            acquisition: AcquisitionConfig::default(),
            denoiser: DenoiserConfig::default(),
            sampler: SamplerSettings::default(),
            metrics: MetricsConfig::default(),
            sweep: SweepConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.grid.validate()?;
        self.phantom_spec(0).validate(&self.grid)?;
        self.acquisition.validate()?;
        if let Some(key) = self.denoiser.unknown.keys().next() {
            return Err(Error::Config(format!("unknown field `{key}` in [denoiser]")));
        }
        self.denoiser.train.validate()?;
        if self.denoiser.training_phantoms == 0 {
            return Err(Error::param("denoiser.training_phantoms must be >= 1"));
        }
        self.sampler.validate(self.acquisition.angle_count)?;
        self.metrics.validate()?;
        self.sweep.validate()
    }

    /// Phantom for one frame seed.
    pub fn phantom_spec(&self, seed: u64) -> PhantomSpec {
        self.phantom.spec(&self.grid, seed)
    }

    pub fn angle_span(&self) -> f64 {
        self.acquisition.angle_span_deg.to_radians()
    }
}

/// Scatterer map description. Without `cysts`, the default anechoic cyst of
/// radius 12 pixels is placed at the centre of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    pub background_std: f64,
    pub cysts: Option<Vec<Cyst>>,
    pub points: Vec<PointTarget>,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            background_std: 1.0,
            cysts: None,
            points: Vec::new(),
        }
    }
}

impl PhantomConfig {
    pub fn spec(&self, grid: &ImagingGrid, seed: u64) -> PhantomSpec {
        let base = PhantomSpec::default_cyst(grid, seed);
        PhantomSpec {
            background_std: self.background_std,
            cysts: self.cysts.clone().unwrap_or(base.cysts),
            points: self.points.clone(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionConfig {
    pub angle_count: usize,
    /// Full angular span in degrees, centred on broadside.
    pub angle_span_deg: f64,
    /// Channel-noise standard deviation.
    pub gamma: f64,
    /// Independent phantom/noise realisations per experiment.
    pub frames: usize,
    /// Receive apodization: `none` or `hann`.
    pub apodization: Apodization,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            angle_count: 75,
            angle_span_deg: 32.0,
            gamma: 0.0,
            frames: 5,
            apodization: Apodization::None,
        }
    }
}

impl AcquisitionConfig {
    fn validate(&self) -> Result<()> {
        if self.angle_count == 0 {
            return Err(Error::param("acquisition.angle_count must be >= 1"));
        }
        if !(0.0..180.0).contains(&self.angle_span_deg) {
            return Err(Error::param("acquisition.angle_span_deg must lie in [0, 180)"));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::param("acquisition.gamma must be finite and >= 0"));
        }
        if self.frames == 0 {
            return Err(Error::param("acquisition.frames must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiserConfig {
    /// Model file; relative paths resolve against the output directory.
    pub path: PathBuf,
    pub training_phantoms: usize,
    #[serde(flatten)]
    pub train: TrainConfig,
    #[serde(flatten, skip_serializing)]
    unknown: BTreeMap<String, toml::Value>,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        Self {
            path: PathBuf::from("denoiser.pwdn"),
            training_phantoms: 20,
            train: TrainConfig::default(),
            unknown: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Rebuild,
    Truncate,
}

impl ScheduleKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScheduleKind::Rebuild => "rebuild",
            ScheduleKind::Truncate => "truncate",
        }
    }
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rebuild" => Ok(ScheduleKind::Rebuild),
            "truncate" => Ok(ScheduleKind::Truncate),
            other => Err(Error::param(format!("unknown schedule mode {other:?}"))),
        }
    }
}

/// Sampler settings for the diffusion reconstructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    pub n_full: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub rho: f64,
    pub sigma_k: f64,
    pub steps: usize,
    pub schedule_mode: ScheduleKind,
    pub lambda: f64,
    /// Angle indices measured by data consistency; empty means the
    /// single-PW angle only.
    pub dc_angles: Vec<usize>,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            n_full: 50,
            sigma_max: 80.0,
            sigma_min: 0.002,
            rho: 7.0,
            sigma_k: 5.0,
            steps: 20,
            schedule_mode: ScheduleKind::Rebuild,
            lambda: DEFAULT_LAMBDA,
            dc_angles: Vec::new(),
        }
    }
}

/// Data-consistency step size used by the harness.
pub const DEFAULT_LAMBDA: f64 = 3.0;

impl SamplerSettings {
    pub fn shortcut_config(&self) -> ShortcutConfig {
        let mode = match self.schedule_mode {
            ScheduleKind::Rebuild => ScheduleMode::Rebuild { steps: self.steps },
            ScheduleKind::Truncate => ScheduleMode::Truncate {
                n_full: self.n_full,
                steps: self.steps,
                sigma_max: self.sigma_max,
            },
        };
        ShortcutConfig {
            sigma_k: self.sigma_k,
            sigma_min: self.sigma_min,
            rho: self.rho,
            mode,
        }
    }

    pub fn validate(&self, angle_count: usize) -> Result<()> {
        if self.n_full == 0 {
            return Err(Error::param("sampler.n_full must be >= 1"));
        }
        if !(self.sigma_max > self.sigma_min) || !(self.sigma_min > 0.0) {
            return Err(Error::param("sampler needs 0 < sigma_min < sigma_max"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::param("sampler.lambda must be finite and >= 0"));
        }
        if let Some(&a) = self.dc_angles.iter().find(|&&a| a >= angle_count) {
            return Err(Error::param(format!(
                "sampler.dc_angles: index {a} out of range for {angle_count} angles"
            )));
        }
        self.shortcut_config().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub dynamic_range_db: f64,
    pub gcnr_bins: usize,
    /// Gap between the cyst edge and each ROI, in pixels.
    pub roi_margin_pixels: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            dynamic_range_db: DEFAULT_DYNAMIC_RANGE_DB,
            gcnr_bins: DEFAULT_GCNR_BINS,
            roi_margin_pixels: 1.0,
        }
    }
}

impl MetricsConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dynamic_range_db > 0.0) {
            return Err(Error::param("metrics.dynamic_range_db must be > 0"));
        }
        if self.gcnr_bins < 2 {
            return Err(Error::param("metrics.gcnr_bins must be >= 2"));
        }
        if !(self.roi_margin_pixels >= 0.0) {
            return Err(Error::param("metrics.roi_margin_pixels must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub sigma_max: Vec<f64>,
    pub steps: Vec<usize>,
    pub modes: Vec<ScheduleKind>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sigma_max: vec![40.0, 60.0, 80.0],
            steps: vec![5, 10, 15, 20, 30, 40, 50],
            modes: vec![ScheduleKind::Rebuild, ScheduleKind::Truncate],
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.sigma_max.is_empty() || self.steps.is_empty() || self.modes.is_empty() {
            return Err(Error::param("sweep lists must be nonempty"));
        }
        if self.steps.contains(&0) {
            return Err(Error::param("sweep.steps entries must be >= 1"));
        }
        Ok(())
    }
}
