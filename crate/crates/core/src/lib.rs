//! Plane-wave ultrasound reconstruction by truncated conditional diffusion.
//!
//! The crate is organised bottom-up:
//!
//! - [`acoustics`]: plane-wave measurement operator `H` (which doubles as the
//!   delay-and-sum beamformer `Hᵀ`), compounding, and B-mode display processing.
//! - [`phantom`]: synthetic speckle/cyst/point scatterer maps.
//! - [`denoiser`]: the `D(x; σ)` contract with closed-form oracles and a
//!   ridge-trained linear patch denoiser.
//! - [`diffusion`]: Karras schedule, Heun sampler, data consistency, and the
//!   shortcut sampler that starts from a noise-injected single plane-wave image.
//! - [`metrics`]: CNR and gCNR over ROI samples.
//! - [`harness`]: configuration, end-to-end pipelines, sweeps and file outputs.
//!
//! See the `examples/` directory for one runnable program per capability.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acoustics;
pub mod denoiser;
pub mod diffusion;
mod error;
pub mod harness;
pub mod image;
pub mod io;
pub mod metrics;
pub mod phantom;
pub mod rng;

pub use error::{Error, Result};
pub use image::{Image, RfFrame};
