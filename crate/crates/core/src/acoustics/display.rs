//! B-mode display chain: envelope detection and log compression.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::{Error, Image, Result};

/// Magnitude of the analytic signal along the axial axis of each column.
///
/// The analytic signal is formed in the frequency domain: positive
/// frequencies doubled, negative ones zeroed, DC and Nyquist kept.
pub fn envelope(img: &Image) -> Result<Image> {
    let (n_z, n_x) = img.shape();
    if n_z < 2 {
        return Err(Error::dims("envelope", "n_z >= 2", n_z));
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n_z);
    let ifft = planner.plan_fft_inverse(n_z);

    let mut gain = vec![0.0; n_z];
    gain[0] = 1.0;
    let half = n_z / 2;
    for g in gain.iter_mut().take(n_z.div_ceil(2)).skip(1) {
        *g = 2.0;
    }
    if n_z % 2 == 0 {
        gain[half] = 1.0;
    }

    let mut out = Image::zeros(n_z, n_x);
    let mut column = vec![Complex::new(0.0, 0.0); n_z];
    let scale = 1.0 / n_z as f64;
    for ix in 0..n_x {
        for (iz, c) in column.iter_mut().enumerate() {
            *c = Complex::new(img.get(iz, ix), 0.0);
        }
        fft.process(&mut column);
        for (c, &g) in column.iter_mut().zip(&gain) {
            *c *= g;
        }
        ifft.process(&mut column);
        for (iz, c) in column.iter().enumerate() {
            out.set(iz, ix, c.norm() * scale);
        }
    }
    Ok(out)
}

/// `20·log10(env / max(env))` clamped to `[-dynamic_range_db, 0]`.
pub fn log_compress(env: &Image, dynamic_range_db: f64) -> Image {
    let peak = env.max();
    if !(peak > 0.0) {
        return env.map(|_| -dynamic_range_db);
    }
    env.map(|v| {
        let db = 20.0 * (v / peak).log10();
        if db.is_nan() {
            -dynamic_range_db
        } else {
            db.clamp(-dynamic_range_db, 0.0)
        }
    })
}

/// Envelope followed by log compression.
pub fn bmode(img: &Image, dynamic_range_db: f64) -> Result<Image> {
    Ok(log_compress(&envelope(img)?, dynamic_range_db))
}
