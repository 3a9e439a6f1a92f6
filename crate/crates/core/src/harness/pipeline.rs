//! End-to-end building blocks: acquire → beamform → train → reconstruct.

use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::acoustics::{
    add_channel_noise, compound, steering_angles, Apodization, ImagingGrid, MeasurementOperator,
    OperatorBuilder, TransducerGeometry,
};
use crate::denoiser::{train_linear_denoiser, Denoiser, LinearPatchDenoiser, TrainConfig, TrainReport};
use crate::diffusion::{
    karras_schedule, sample_full, sample_shortcut, DataConsistency, Measurement, SampleRun,
};
use crate::harness::config::SamplerSettings;
use crate::phantom::{render, PhantomSpec};
use crate::rng::child_seed;
use crate::{Error, Image, Result, RfFrame};

/// Quantile of `|pixel|` mapped to 1 by [`Normalization`].
pub const NORMALIZATION_QUANTILE: f64 = 0.999;

/// Array, grid and steering angles shared by every frame of an experiment.
#[derive(Debug, Clone)]
pub struct Scene {
    builder: OperatorBuilder,
    angles: Vec<f64>,
    cache: Arc<Vec<OnceLock<Arc<MeasurementOperator>>>>,
}

impl Scene {
    pub fn new(
        geometry: &TransducerGeometry,
        grid: &ImagingGrid,
        angle_count: usize,
        angle_span: f64,
    ) -> Result<Self> {
        Self::with_apodization(geometry, grid, angle_count, angle_span, Apodization::None)
    }

    pub fn with_apodization(
        geometry: &TransducerGeometry,
        grid: &ImagingGrid,
        angle_count: usize,
        angle_span: f64,
        apodization: Apodization,
    ) -> Result<Self> {
        if angle_count == 0 {
            return Err(Error::param("angle count must be >= 1"));
        }
        Ok(Self {
            builder: OperatorBuilder::with_apodization(geometry, grid, apodization)?,
            angles: steering_angles(angle_count, angle_span),
            cache: Arc::new((0..angle_count).map(|_| OnceLock::new()).collect()),
        })
    }

    pub fn geometry(&self) -> &TransducerGeometry {
        self.builder.geometry()
    }

    pub fn grid(&self) -> &ImagingGrid {
        self.builder.grid()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Index of the angle closest to broadside; the single-PW acquisition.
    pub fn single_index(&self) -> usize {
        self.angles
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .expect("at least one angle")
    }

    /// Freshly built operator for angle `index`.
    pub fn operator(&self, index: usize) -> Result<MeasurementOperator> {
        let theta = *self
            .angles
            .get(index)
            .ok_or_else(|| Error::param(format!("angle index {index} out of range")))?;
        self.builder.build(theta)
    }

    /// Operator for angle `index`, built on first use and kept for the
    /// lifetime of the scene and its clones.
    pub fn shared_operator(&self, index: usize) -> Result<Arc<MeasurementOperator>> {
        let cell = self
            .cache
            .get(index)
            .ok_or_else(|| Error::param(format!("angle index {index} out of range")))?;
        if let Some(op) = cell.get() {
            return Ok(op.clone());
        }
        let op = Arc::new(self.operator(index)?);
        Ok(cell.get_or_init(|| op).clone())
    }
}

/// Ground truth, per-angle channel data and per-angle DAS images of one frame.
#[derive(Debug, Clone)]
pub struct Acquisition {
    pub truth: Image,
    pub frames: Vec<RfFrame>,
    pub das: Vec<Image>,
}

impl Acquisition {
    pub fn compound(&self) -> Result<Image> {
        compound(&self.das)
    }
}

/// Renders the phantom and simulates every angle with channel noise `gamma`.
pub fn acquire(scene: &Scene, phantom: &PhantomSpec, gamma: f64, noise_seed: u64) -> Result<Acquisition> {
    let truth = render(phantom, scene.grid())?;
    acquire_map(scene, truth, gamma, noise_seed)
}

pub fn acquire_map(scene: &Scene, truth: Image, gamma: f64, noise_seed: u64) -> Result<Acquisition> {
    let per_angle: Vec<(RfFrame, Image)> = (0..scene.angles.len())
        .into_par_iter()
        .map(|i| {
            let op = scene.operator(i)?;
            let y = op.forward(&truth)?;
            let y = add_channel_noise(&y, gamma, child_seed(noise_seed, i as u64))?;
            let das = op.adjoint(&y)?;
            Ok((y, das))
        })
        .collect::<Result<_>>()?;
    let (frames, das) = per_angle.into_iter().unzip();
    Ok(Acquisition { truth, frames, das })
}

/// Scale mapping an image's `|pixel|` 99.9th percentile to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub scale: f64,
}

impl Normalization {
    pub fn fit(img: &Image) -> Self {
        let q = img.abs_quantile(NORMALIZATION_QUANTILE);
        Self {
            scale: if q > 0.0 { q } else { 1.0 },
        }
    }

    pub fn apply(&self, img: &Image) -> Image {
        img.scaled(1.0 / self.scale)
    }
}

/// Least-squares amplitude `a` minimising `‖H(a·x) − y‖₂`: the factor that
/// maps a normalised image back to scatterer units for data consistency.
pub fn measurement_amplitude(op: &MeasurementOperator, x: &Image, y: &RfFrame) -> Result<f64> {
    let hx = op.forward(x)?;
    let denom = hx.dot(&hx)?;
    if denom == 0.0 {
        return Ok(1.0);
    }
    let a = hx.dot(y)? / denom;
    Ok(if a > 0.0 { a } else { 1.0 })
}

/// Compounded, normalised training images from `count` phantom seeds.
pub fn training_images(
    scene: &Scene,
    phantom: &PhantomSpec,
    gamma: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Image>> {
    if count == 0 {
        return Err(Error::param("training needs at least one phantom"));
    }
    (0..count)
        .map(|i| {
            let s = child_seed(seed, i as u64);
            let acq = acquire(scene, &phantom.with_seed(s), gamma, child_seed(s, 1))?;
            let c = acq.compound()?;
            Ok(Normalization::fit(&c).apply(&c))
        })
        .collect()
}

pub fn train(
    scene: &Scene,
    phantom: &PhantomSpec,
    gamma: f64,
    phantoms: usize,
    config: &TrainConfig,
    seed: u64,
) -> Result<(LinearPatchDenoiser, TrainReport)> {
    let images = training_images(
        scene,
        phantom,
        gamma,
        phantoms,
        child_seed(seed, crate::rng::Stage::TrainingPhantoms as u64),
    )?;
    train_linear_denoiser(&images, config, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    DasSingle,
    DasCompound,
    EdmFull,
    EdmShortcut,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::DasSingle => "das-single",
            Method::DasCompound => "das-compound",
            Method::EdmFull => "edm-full",
            Method::EdmShortcut => "edm-shortcut",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "das" | "das-single" => Ok(Method::DasSingle),
            "das-compound" => Ok(Method::DasCompound),
            "edm-full" => Ok(Method::EdmFull),
            "edm-shortcut" => Ok(Method::EdmShortcut),
            other => Err(Error::param(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub image: Image,
    pub run: Option<SampleRun>,
    pub wall: Duration,
}

/// Runs one reconstruction method on an acquisition.
///
/// Diffusion methods work on the single-PW DAS image normalised by
/// [`Normalization`]; data consistency maps back to scatterer units with the
/// measured amplitude fit. `seed` drives the initial noise.
pub fn reconstruct<D: Denoiser + ?Sized>(
    method: Method,
    scene: &Scene,
    acq: &Acquisition,
    denoiser: Option<&D>,
    settings: &SamplerSettings,
    seed: u64,
) -> Result<Reconstruction> {
    let start = Instant::now();
    let single = scene.single_index();
    let x_s = acq
        .das
        .get(single)
        .ok_or_else(|| Error::param("acquisition has no single-PW frame"))?;
    let (image, run) = match method {
        Method::DasSingle => (x_s.clone(), None),
        Method::DasCompound => (acq.compound()?, None),
        Method::EdmFull | Method::EdmShortcut => {
            let denoiser =
                denoiser.ok_or_else(|| Error::param("diffusion methods need a denoiser"))?;
            let norm = Normalization::fit(x_s);
            let x_n = norm.apply(x_s);
            let dc_angles = if settings.dc_angles.is_empty() {
                vec![single]
            } else {
                settings.dc_angles.clone()
            };
            let ops = dc_angles
                .iter()
                .map(|&i| scene.shared_operator(i))
                .collect::<Result<Vec<_>>>()?;
            let measurements = ops
                .iter()
                .zip(&dc_angles)
                .map(|(op, &i)| Measurement {
                    operator: op.as_ref(),
                    frame: &acq.frames[i],
                })
                .collect();
            let amplitude = measurement_amplitude(&ops[0], &x_n, &acq.frames[dc_angles[0]])?;
            let dc = DataConsistency::new(settings.lambda, measurements)?.with_amplitude(amplitude);
            let run = if method == Method::EdmFull {
                let schedule = karras_schedule(
                    settings.n_full,
                    settings.sigma_min,
                    settings.sigma_max,
                    settings.rho,
                )?;
                sample_full(denoiser, &schedule, x_n.shape(), &dc, seed)?
            } else {
                sample_shortcut(denoiser, &x_n, &settings.shortcut_config(), &dc, seed)?
            };
            (run.image.clone(), Some(run))
        }
    };
    Ok(Reconstruction {
        image,
        run,
        wall: start.elapsed(),
    })
}
