use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Denoiser;
use crate::io::{parse_field, read_header};
use crate::rng::{child_seed, gaussian_vec, stream, Stage};
use crate::{Error, Image, Result};

/// Affine map from a `P×P` noisy patch to the clean centre pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchCoefficients {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Per-σ ridge-regressed patch denoiser.
///
/// Coefficients are interpolated linearly in σ between grid nodes. Below the
/// smallest node the output is blended linearly towards the identity, which
/// it reaches exactly at σ = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPatchDenoiser {
    patch: usize,
    sigmas: Vec<f64>,
    coefficients: Vec<PatchCoefficients>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Odd patch side length.
    pub patch: usize,
    /// Strictly increasing noise levels.
    pub sigmas: Vec<f64>,
    pub alpha: f64,
    pub patches_per_sigma: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            patch: 9,
            sigmas: log_spaced(0.01, 80.0, 12),
            alpha: 1e-3,
            patches_per_sigma: 200_000,
        }
    }
}

/// `count` points log-uniformly spaced over `[lo, hi]`, endpoints exact.
pub(crate) fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect();
    v[0] = lo;
    v[count - 1] = hi;
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaFit {
    pub sigma: f64,
    /// Training-set MSE of the fitted map.
    pub mse: f64,
    /// Training-set MSE of returning the noisy centre pixel unchanged.
    pub identity_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub alpha: f64,
    pub fits: Vec<SigmaFit>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch.is_multiple_of(2) {
            return Err(Error::param(format!("patch size must be odd, got {}", self.patch)));
        }
        validate_sigmas(&self.sigmas)?;
        if !(self.alpha > 0.0) {
            return Err(Error::param("ridge alpha must be > 0"));
        }
        let needed = 50 * self.patch * self.patch;
        if self.patches_per_sigma < needed {
            return Err(Error::param(format!(
                "need at least {needed} patches per sigma for a {p}x{p} patch, got {}",
                self.patches_per_sigma,
                p = self.patch
            )));
        }
        Ok(())
    }
}

fn validate_sigmas(sigmas: &[f64]) -> Result<()> {
    if sigmas.is_empty() {
        return Err(Error::param("sigma grid is empty"));
    }
    if !sigmas.iter().all(|s| s.is_finite() && *s > 0.0)
        || sigmas.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::param("sigma grid must be positive and strictly increasing"));
    }
    Ok(())
}

/// Reflect-without-repeat index into `[0, n)`.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut j = i.rem_euclid(period);
    if j >= n as isize {
        j = period - j;
    }
    j as usize
}

fn gather_patch(img: &Image, iz: usize, ix: usize, patch: usize, out: &mut [f64]) {
    let h = (patch / 2) as isize;
    let mut k = 0;
    for dz in -h..=h {
        let z = reflect(iz as isize + dz, img.n_z());
        for dx in -h..=h {
            let x = reflect(ix as isize + dx, img.n_x());
            out[k] = img.get(z, x);
            k += 1;
        }
    }
}

/// Fits one affine patch map per σ by ridge regression on centred data:
/// minimise `Σ (y − wᵀp − b)² + α‖w‖²` over the sampled patches (bias
/// unpenalised).
pub fn train_linear_denoiser(
    clean_images: &[Image],
    config: &TrainConfig,
    seed: u64,
) -> Result<(LinearPatchDenoiser, TrainReport)> {
    config.validate()?;
    if clean_images.is_empty() {
        return Err(Error::param("training set is empty"));
    }
    let shape = clean_images[0].shape();
    for img in clean_images {
        clean_images[0].check_same_shape(img, "train_linear_denoiser")?;
    }
    let total_pixels = clean_images.len() * shape.0 * shape.1;
    if total_pixels < config.patch * config.patch {
        return Err(Error::param(format!(
            "training set has {total_pixels} pixels, fewer than one patch"
        )));
    }

    let fits: Vec<(PatchCoefficients, SigmaFit)> = config
        .sigmas
        .par_iter()
        .enumerate()
        .map(|(i, &sigma)| fit_sigma(clean_images, config, sigma, child_seed(seed, i as u64)))
        .collect::<Result<_>>()?;
    let (coefficients, report): (Vec<_>, Vec<_>) = fits.into_iter().unzip();
    Ok((
        LinearPatchDenoiser {
            patch: config.patch,
            sigmas: config.sigmas.clone(),
            coefficients,
        },
        TrainReport {
            alpha: config.alpha,
            fits: report,
        },
    ))
}

fn fit_sigma(
    images: &[Image],
    config: &TrainConfig,
    sigma: f64,
    seed: u64,
) -> Result<(PatchCoefficients, SigmaFit)> {
    let d = config.patch * config.patch;
    let centre = d / 2;
    let n = config.patches_per_sigma;
    let mut rng = stream(seed, Stage::TrainingPatches);
    let (n_z, n_x) = images[0].shape();

    // Raw moments, upper triangle of the Gram matrix only.
    let mut sum_p = vec![0.0; d];
    let mut sum_pp = vec![0.0; d * d];
    let mut sum_py = vec![0.0; d];
    let mut sum_y = 0.0;
    let mut sum_yy = 0.0;
    let mut patch = vec![0.0; d];
    for _ in 0..n {
        let img = &images[rng.random_range(0..images.len())];
        let iz = rng.random_range(0..n_z);
        let ix = rng.random_range(0..n_x);
        gather_patch(img, iz, ix, config.patch, &mut patch);
        let y = patch[centre];
        let noise = gaussian_vec(&mut rng, d);
        for (p, z) in patch.iter_mut().zip(noise) {
            *p += sigma * z;
        }
        sum_y += y;
        sum_yy += y * y;
        for a in 0..d {
            let pa = patch[a];
            sum_p[a] += pa;
            sum_py[a] += pa * y;
            let row = &mut sum_pp[a * d..(a + 1) * d];
            for b in a..d {
                row[b] += pa * patch[b];
            }
        }
    }

    let nf = n as f64;
    let mean_p: Vec<f64> = sum_p.iter().map(|s| s / nf).collect();
    let mean_y = sum_y / nf;
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let c = sum_pp[a * d + b] / nf - mean_p[a] * mean_p[b];
            cov[(a, b)] = c;
            cov[(b, a)] = c;
        }
    }
    let cross = DVector::from_iterator(d, (0..d).map(|a| sum_py[a] / nf - mean_p[a] * mean_y));
    let var_y = sum_yy / nf - mean_y * mean_y;

    // Gram matrix divided by n, so the penalty enters as α/n.
    let mut system = cov.clone();
    for a in 0..d {
        system[(a, a)] += config.alpha / nf;
    }
    let chol = system.clone().cholesky().ok_or_else(|| {
        let eig = system.symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        Error::Numerical(format!(
            "ridge normal equations at sigma {sigma} are not positive definite \
             (eigenvalue range [{lo:.3e}, {hi:.3e}])"
        ))
    })?;
    let w = chol.solve(&cross);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite ridge weights at sigma {sigma}"
        )));
    }
    let bias = mean_y - w.iter().zip(&mean_p).map(|(a, b)| a * b).sum::<f64>();

    // Residuals on the training sample from the centred moments.
    let mse = (var_y - 2.0 * w.dot(&cross) + (&cov * &w).dot(&w)).max(0.0);
    let identity_mse =
        (sum_pp[centre * d + centre] - 2.0 * sum_py[centre] + sum_yy) / nf;
    Ok((
        PatchCoefficients {
            weights: w.iter().copied().collect(),
            bias,
        },
        SigmaFit {
            sigma,
            mse,
            identity_mse,
        },
    ))
}

impl LinearPatchDenoiser {
    pub fn new(patch: usize, sigmas: Vec<f64>, coefficients: Vec<PatchCoefficients>) -> Result<Self> {
        if patch.is_multiple_of(2) {
            return Err(Error::param("patch size must be odd"));
        }
        validate_sigmas(&sigmas)?;
        if coefficients.len() != sigmas.len() {
            return Err(Error::dims(
                "LinearPatchDenoiser::new",
                sigmas.len(),
                coefficients.len(),
            ));
        }
        for c in &coefficients {
            if c.weights.len() != patch * patch
                || !c.bias.is_finite()
                || c.weights.iter().any(|w| !w.is_finite())
            {
                return Err(Error::param("coefficients must be finite with P² weights"));
            }
        }
        Ok(Self {
            patch,
            sigmas,
            coefficients,
        })
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn coefficients(&self) -> &[PatchCoefficients] {
        &self.coefficients
    }

    fn apply(&self, x: &Image, c: &PatchCoefficients) -> Image {
        let (n_z, n_x) = x.shape();
        let h = self.patch / 2;
        // Reflect-padded copy so the inner loop is branch-free.
        let (pz, px) = (n_z + 2 * h, n_x + 2 * h);
        let mut padded = vec![0.0; pz * px];
        for z in 0..pz {
            let sz = reflect(z as isize - h as isize, n_z);
            for xx in 0..px {
                let sx = reflect(xx as isize - h as isize, n_x);
                padded[z * px + xx] = x.get(sz, sx);
            }
        }
        let mut out = Image::zeros(n_z, n_x);
        let p = self.patch;
        for iz in 0..n_z {
            for ix in 0..n_x {
                let mut acc = c.bias;
                for dz in 0..p {
                    let row = &padded[(iz + dz) * px + ix..(iz + dz) * px + ix + p];
                    let wrow = &c.weights[dz * p..(dz + 1) * p];
                    acc += row.iter().zip(wrow).map(|(a, b)| a * b).sum::<f64>();
                }
                out.set(iz, ix, acc);
            }
        }
        out
    }

    fn interpolated(&self, j: usize, t: f64) -> PatchCoefficients {
        let (a, b) = (&self.coefficients[j], &self.coefficients[j + 1]);
        PatchCoefficients {
            weights: a
                .weights
                .iter()
                .zip(&b.weights)
                .map(|(u, v)| (1.0 - t) * u + t * v)
                .collect(),
            bias: (1.0 - t) * a.bias + t * b.bias,
        }
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "PWDN v1 {} {}", self.patch, self.sigmas.len())?;
        for (s, c) in self.sigmas.iter().zip(&self.coefficients) {
            w.write_all(&s.to_le_bytes())?;
            for v in &c.weights {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&c.bias.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read(r: &mut impl BufRead) -> Result<Self> {
        const KIND: &str = "PWDN";
        let fields = read_header(r, KIND, KIND)?;
        if fields.len() != 2 {
            return Err(Error::Format {
                kind: KIND,
                reason: "expected 2 header fields".into(),
            });
        }
        let patch: usize = parse_field(&fields, 0, KIND)?;
        let count: usize = parse_field(&fields, 1, KIND)?;
        let d = patch * patch;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != count * (d + 2) * 8 {
            return Err(Error::Format {
                kind: KIND,
                reason: format!(
                    "payload is {} bytes, expected {}",
                    bytes.len(),
                    count * (d + 2) * 8
                ),
            });
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let mut sigmas = Vec::with_capacity(count);
        let mut coefficients = Vec::with_capacity(count);
        for rec in values.chunks_exact(d + 2) {
            sigmas.push(rec[0]);
            coefficients.push(PatchCoefficients {
                weights: rec[1..=d].to_vec(),
                bias: rec[d + 1],
            });
        }
        Self::new(patch, sigmas, coefficients)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

impl Denoiser for LinearPatchDenoiser {
    fn denoise(&self, x: &Image, sigma: f64) -> Result<Image> {
        let max = *self.sigmas.last().expect("non-empty grid");
        if !(sigma >= 0.0) || sigma > max {
            return Err(Error::param(format!(
                "sigma {sigma} outside the trained range [0, {max}]"
            )));
        }
        if sigma == 0.0 {
            return Ok(x.clone());
        }
        let lo = self.sigmas[0];
        if sigma < lo {
            let t = sigma / lo;
            let d = self.apply(x, &self.coefficients[0]);
            return x.scaled(1.0 - t).axpy(t, &d);
        }
        // First node >= sigma; sigma lies in (s[j-1], s[j]].
        let j = self.sigmas.partition_point(|&s| s < sigma);
        if self.sigmas[j] == sigma {
            return Ok(self.apply(x, &self.coefficients[j]));
        }
        let (a, b) = (self.sigmas[j - 1], self.sigmas[j]);
        let c = self.interpolated(j - 1, (sigma - a) / (b - a));
        Ok(self.apply(x, &c))
    }
}
