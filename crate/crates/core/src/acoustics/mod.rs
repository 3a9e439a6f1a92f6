//! Plane-wave measurement model, delay-and-sum beamforming and compounding.

mod display;
mod geometry;
mod operator;

pub use display::{bmode, envelope, log_compress};
pub use geometry::{ImagingGrid, TransducerGeometry};
pub use operator::{
    build_operator, round_trip_delay, Apodization, MeasurementOperator, OperatorBuilder,
};

use rayon::prelude::*;

use crate::rng::gaussian_vec;
use crate::{Error, Image, Result, RfFrame};

/// Pixelwise mean of per-angle images.
pub fn compound(images: &[Image]) -> Result<Image> {
    let first = images
        .first()
        .ok_or_else(|| Error::param("compound needs at least one image"))?;
    let mut acc = first.clone();
    for img in &images[1..] {
        first.check_same_shape(img, "compound")?;
        for (a, b) in acc.data_mut().iter_mut().zip(img.data()) {
            *a += b;
        }
    }
    let inv = 1.0 / images.len() as f64;
    acc.data_mut().iter_mut().for_each(|v| *v *= inv);
    Ok(acc)
}

/// `y + n` with `n` i.i.d. `N(0, γ²)`, deterministic in `seed`.
pub fn add_channel_noise(y: &RfFrame, gamma: f64, seed: u64) -> Result<RfFrame> {
    if !(gamma >= 0.0) {
        return Err(Error::param(format!("noise std must be >= 0, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(y.clone());
    }
    let mut rng = crate::rng::stream(seed, crate::rng::Stage::ChannelNoise);
    let noise = gaussian_vec(&mut rng, y.data().len());
    let mut out = y.clone();
    for (v, n) in out.data_mut().iter_mut().zip(noise) {
        *v += gamma * n;
    }
    Ok(out)
}

/// `count` steering angles (radians) spread uniformly over
/// `[-span/2, span/2]`; a single angle is 0.
pub fn steering_angles(count: usize, span: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|i| -span / 2.0 + span * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Simulates and beamforms every angle of a scatterer map, returning the
/// per-angle DAS images. Operators are built and dropped per angle.
pub fn beamform_angles(
    builder: &OperatorBuilder,
    scatterers: &Image,
    angles: &[f64],
    gamma: f64,
    noise_seed: u64,
) -> Result<Vec<Image>> {
    angles
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| {
            let op = builder.build(theta)?;
            let y = op.forward(scatterers)?;
            let y = add_channel_noise(&y, gamma, crate::rng::child_seed(noise_seed, i as u64))?;
            op.adjoint(&y)
        })
        .collect()
}
