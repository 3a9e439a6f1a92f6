//! The `D(x; σ)` contract: an estimate of `E[clean | clean + σ·z = x]`.
//!
//! Closed-form posterior means for Gaussian and per-pixel Gaussian-mixture
//! priors serve as exact oracles; [`LinearPatchDenoiser`] is a ridge-trained
//! affine patch map fit on simulated compounded images.

mod closed_form;
mod linear;

pub use closed_form::{GaussianPriorDenoiser, GmmComponent, GmmPixelDenoiser, PriorMean};
pub use linear::{
    train_linear_denoiser, LinearPatchDenoiser, PatchCoefficients, SigmaFit, TrainConfig,
    TrainReport,
};

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::{Image, Result};

pub trait Denoiser: Send + Sync {
    fn denoise(&self, x: &Image, sigma: f64) -> Result<Image>;
}

impl<D: Denoiser + ?Sized> Denoiser for &D {
    fn denoise(&self, x: &Image, sigma: f64) -> Result<Image> {
        (**self).denoise(x, sigma)
    }
}

impl<D: Denoiser + ?Sized> Denoiser for Box<D> {
    fn denoise(&self, x: &Image, sigma: f64) -> Result<Image> {
        (**self).denoise(x, sigma)
    }
}

/// Wraps a denoiser and counts evaluations.
#[derive(Debug, Default)]
pub struct CountingDenoiser<D> {
    inner: D,
    calls: AtomicUsize,
}

impl<D> CountingDenoiser<D> {
    pub fn new(inner: D) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn into_inner(self) -> D {
        self.inner
    }
}

impl<D: Denoiser> Denoiser for CountingDenoiser<D> {
    fn denoise(&self, x: &Image, sigma: f64) -> Result<Image> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.denoise(x, sigma)
    }
}
