use crate::rng::{gaussian_vec, stream, Stage};
use crate::{Error, Image, Result};

/// Decreasing noise levels `σ_0 = σ_max > … > σ_{N−1} = σ_min`, followed by
/// a terminal 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    sigmas: Vec<f64>,
    sigma_min: f64,
    sigma_max: f64,
    rho: f64,
}

impl NoiseSchedule {
    /// Noise levels including the terminal 0 (length `N + 1`).
    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    /// Number of reverse steps, `N`.
    pub fn steps(&self) -> usize {
        self.sigmas.len() - 1
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// Karras et al. schedule with `N` levels interpolated in `σ^{1/ρ}`.
///
/// `σ_i = (σ_max^{1/ρ} + i/(N−1)·(σ_min^{1/ρ} − σ_max^{1/ρ}))^ρ`; the end
/// points are set exactly. `N = 1` yields `[σ_max, 0]`.
pub fn karras_schedule(n: usize, sigma_min: f64, sigma_max: f64, rho: f64) -> Result<NoiseSchedule> {
    if n == 0 {
        return Err(Error::param("schedule needs N >= 1"));
    }
    if !(sigma_min > 0.0 && sigma_max > sigma_min && sigma_max.is_finite()) {
        return Err(Error::param(format!(
            "schedule needs 0 < sigma_min < sigma_max, got {sigma_min}, {sigma_max}"
        )));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::param(format!("schedule needs rho > 0, got {rho}")));
    }
    let mut sigmas = Vec::with_capacity(n + 1);
    if n == 1 {
        sigmas.push(sigma_max);
    } else {
        let hi = sigma_max.powf(1.0 / rho);
        let lo = sigma_min.powf(1.0 / rho);
        for i in 0..n {
            let t = i as f64 / (n - 1) as f64;
            sigmas.push((hi + t * (lo - hi)).powf(rho));
        }
        sigmas[0] = sigma_max;
        sigmas[n - 1] = sigma_min;
    }
    sigmas.push(0.0);
    Ok(NoiseSchedule {
        sigmas,
        sigma_min,
        sigma_max,
        rho,
    })
}

/// Wraps an explicit decreasing σ list (terminal 0 included) as a schedule.
pub(crate) fn from_sigmas(sigmas: Vec<f64>, rho: f64) -> Result<NoiseSchedule> {
    if sigmas.len() < 2 || *sigmas.last().expect("len >= 2") != 0.0 {
        return Err(Error::param("sub-schedule is empty"));
    }
    if sigmas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("sub-schedule must be strictly decreasing"));
    }
    let n = sigmas.len();
    Ok(NoiseSchedule {
        sigma_max: sigmas[0],
        sigma_min: if n > 2 { sigmas[n - 2] } else { sigmas[0] },
        rho,
        sigmas,
    })
}

/// `x + σ·z` with `z` standard normal from the diffusion-init stream of `seed`.
pub fn forward_diffuse(x: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    let mut rng = stream(seed, Stage::DiffusionInit);
    let z = gaussian_vec(&mut rng, x.len());
    let data = x.data().iter().zip(z).map(|(v, n)| v + sigma * n).collect();
    Image::from_vec(x.n_z(), x.n_x(), data)
}
