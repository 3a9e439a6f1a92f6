use crate::{Error, Image, Result};

use super::Denoiser;

#[derive(Debug, Clone, PartialEq)]
pub enum PriorMean {
    Scalar(f64),
    Image(Image),
}

/// Posterior mean under an i.i.d. Gaussian prior `N(μ, s²)` per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPriorDenoiser {
    mean: PriorMean,
    std: f64,
}

impl GaussianPriorDenoiser {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        Self::with_mean(PriorMean::Scalar(mean), std)
    }

    pub fn with_mean(mean: PriorMean, std: f64) -> Result<Self> {
        if !(std > 0.0) || !std.is_finite() {
            return Err(Error::param(format!("prior std must be > 0, got {std}")));
        }
        Ok(Self { mean, std })
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn mean(&self) -> &PriorMean {
        &self.mean
    }

    /// Scalar posterior mean `(s²x + σ²μ)/(s² + σ²)`.
    #[inline]
    pub fn posterior_mean(std: f64, mean: f64, x: f64, sigma: f64) -> f64 {
        let s2 = std * std;
        let v = sigma * sigma;
        (s2 * x + v * mean) / (s2 + v)
    }
}

impl Denoiser for GaussianPriorDenoiser {
    fn denoise(&self, x: &Image, sigma: f64) -> Result<Image> {
        if !(sigma >= 0.0) {
            return Err(Error::param(format!("sigma must be >= 0, got {sigma}")));
        }
        match &self.mean {
            PriorMean::Scalar(m) => Ok(x.map(|v| Self::posterior_mean(self.std, *m, v, sigma))),
            PriorMean::Image(mu) => {
                x.check_same_shape(mu, "GaussianPriorDenoiser")?;
                let data = x
                    .data()
                    .iter()
                    .zip(mu.data())
                    .map(|(&v, &m)| Self::posterior_mean(self.std, m, v, sigma))
                    .collect();
                Image::from_vec(x.n_z(), x.n_x(), data)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmComponent {
    pub weight: f64,
    pub mean: f64,
    pub std: f64,
}

/// Posterior mean under a Gaussian-mixture prior shared by every pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmPixelDenoiser {
    components: Vec<GmmComponent>,
    log_weights: Vec<f64>,
}

impl GmmPixelDenoiser {
    pub fn new(components: Vec<GmmComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::param("mixture needs at least one component"));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        for c in &components {
            if !(c.weight > 0.0) || !(c.std > 0.0) || !c.mean.is_finite() {
                return Err(Error::param(format!("invalid mixture component {c:?}")));
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("mixture weights sum to {total}, not 1")));
        }
        let log_weights = components.iter().map(|c| c.weight.ln()).collect();
        Ok(Self {
            components,
            log_weights,
        })
    }

    pub fn components(&self) -> &[GmmComponent] {
        &self.components
    }

    /// Component responsibilities for an observation `x` at noise `sigma`,
    /// normalised in the log domain.
    pub fn responsibilities(&self, x: f64, sigma: f64) -> Vec<f64> {
        let logs: Vec<f64> = self
            .components
            .iter()
            .zip(&self.log_weights)
            .map(|(c, lw)| {
                let var = c.std * c.std + sigma * sigma;
                let d = x - c.mean;
                lw - 0.5 * var.ln() - 0.5 * d * d / var
            })
            .collect();
        let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut r: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
        let total: f64 = r.iter().sum();
        r.iter_mut().for_each(|v| *v /= total);
        r
    }

    pub fn posterior_mean(&self, x: f64, sigma: f64) -> f64 {
        let v = sigma * sigma;
        self.responsibilities(x, sigma)
            .iter()
            .zip(&self.components)
            .map(|(r, c)| {
                let s2 = c.std * c.std;
                r * (s2 * x + v * c.mean) / (s2 + v)
            })
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.components
            .iter()
            .map(|c| c.weight * (c.std * c.std + (c.mean - m).powi(2)))
            .sum()
    }
}

impl Denoiser for GmmPixelDenoiser {
    fn denoise(&self, x: &Image, sigma: f64) -> Result<Image> {
        if !(sigma >= 0.0) {
            return Err(Error::param(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(x.map(|v| self.posterior_mean(v, sigma)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Image {
        Image::from_vec(1, 1, vec![v]).unwrap()
    }

    #[test]
    fn gaussian_reference_values() {
        let d = GaussianPriorDenoiser::new(0.0, 1.0).unwrap();
        assert_eq!(d.denoise(&scalar(2.0), 0.0).unwrap().data()[0], 2.0);
        assert!((d.denoise(&scalar(2.0), 1.0).unwrap().data()[0] - 1.0).abs() < 1e-15);
        let d = GaussianPriorDenoiser::new(0.7, 1.0).unwrap();
        assert!((d.denoise(&scalar(3.0), 1000.0).unwrap().data()[0] - 0.7).abs() < 1e-5);
        assert!(GaussianPriorDenoiser::new(0.0, 0.0).is_err());
    }

    #[test]
    fn image_mean_prior() {
        let mu = Image::from_vec(1, 2, vec![1.0, -1.0]).unwrap();
        let d = GaussianPriorDenoiser::with_mean(PriorMean::Image(mu), 1.0).unwrap();
        let out = d.denoise(&Image::zeros(1, 2), 1.0).unwrap();
        assert_eq!(out.data(), &[0.5, -0.5]);
        assert!(d.denoise(&Image::zeros(2, 2), 1.0).is_err());
    }

    #[test]
    fn single_component_matches_gaussian() {
        let g = GmmPixelDenoiser::new(vec![GmmComponent {
            weight: 1.0,
            mean: 0.3,
            std: 0.8,
        }])
        .unwrap();
        for (x, s) in [(2.0, 1.0), (-1.0, 0.1), (5.0, 3.0)] {
            let a = g.posterior_mean(x, s);
            let b = GaussianPriorDenoiser::posterior_mean(0.8, 0.3, x, s);
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_mixture_at_zero() {
        let c = |m| GmmComponent {
            weight: 0.5,
            mean: m,
            std: 0.5,
        };
        let g = GmmPixelDenoiser::new(vec![c(-2.0), c(2.0)]).unwrap();
        assert!(g.posterior_mean(0.0, 1.0).abs() < 1e-15);
    }

    #[test]
    fn responsibilities_stay_finite_for_huge_inputs() {
        let g = GmmPixelDenoiser::new(vec![
            GmmComponent {
                weight: 0.3,
                mean: -1.0,
                std: 0.1,
            },
            GmmComponent {
                weight: 0.7,
                mean: 1.0,
                std: 0.2,
            },
        ])
        .unwrap();
        for x in [1e6, -1e6] {
            let r = g.responsibilities(x, 0.01);
            assert!(r.iter().all(|v| v.is_finite()));
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(g.posterior_mean(x, 0.01).is_finite());
        }
    }

    #[test]
    fn rejects_bad_mixtures() {
        assert!(GmmPixelDenoiser::new(vec![]).is_err());
        let bad = GmmComponent {
            weight: 0.5,
            mean: 0.0,
            std: 1.0,
        };
        assert!(GmmPixelDenoiser::new(vec![bad]).is_err());
    }
}
