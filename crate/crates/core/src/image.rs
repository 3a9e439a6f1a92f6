//! Pixel grids and channel-data frames.

use crate::{Error, Result};

/// Real-valued `n_z × n_x` pixel grid, row-major with the axial index as row.
///
/// Used for scatterer maps as well as beamformed, envelope and log-compressed
/// images.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    n_z: usize,
    n_x: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn zeros(n_z: usize, n_x: usize) -> Self {
        Self::filled(n_z, n_x, 0.0)
    }

    pub fn filled(n_z: usize, n_x: usize, value: f64) -> Self {
        Self {
            n_z,
            n_x,
            data: vec![value; n_z * n_x],
        }
    }

    pub fn from_vec(n_z: usize, n_x: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_z * n_x {
            return Err(Error::dims("Image::from_vec", n_z * n_x, data.len()));
        }
        Ok(Self { n_z, n_x, data })
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_z, self.n_x)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, iz: usize, ix: usize) -> f64 {
        self.data[iz * self.n_x + ix]
    }

    #[inline]
    pub fn set(&mut self, iz: usize, ix: usize, value: f64) {
        self.data[iz * self.n_x + ix] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            n_z: self.n_z,
            n_x: self.n_x,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise `self + scale · other`.
    pub fn axpy(&self, scale: f64, other: &Image) -> Result<Image> {
        self.check_same_shape(other, "Image::axpy")?;
        Ok(Image {
            n_z: self.n_z,
            n_x: self.n_x,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + scale * b)
                .collect(),
        })
    }

    pub fn scaled(&self, factor: f64) -> Image {
        self.map(|v| v * factor)
    }

    pub fn dot(&self, other: &Image) -> Result<f64> {
        self.check_same_shape(other, "Image::dot")?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn mean_squared_distance(&self, other: &Image) -> Result<f64> {
        self.check_same_shape(other, "Image::mean_squared_distance")?;
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sum / self.data.len() as f64)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Value at quantile `q ∈ [0, 1]` of `|pixel|` (nearest rank).
    pub fn abs_quantile(&self, q: f64) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let mut mags: Vec<f64> = self.data.iter().map(|v| v.abs()).collect();
        let rank = ((q.clamp(0.0, 1.0) * mags.len() as f64).ceil() as usize).clamp(1, mags.len());
        let (_, nth, _) = mags.select_nth_unstable_by(rank - 1, f64::total_cmp);
        *nth
    }

    pub(crate) fn check_same_shape(&self, other: &Image, context: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dims(
                context,
                format!("{}x{}", self.n_z, self.n_x),
                format!("{}x{}", other.n_z, other.n_x),
            ));
        }
        Ok(())
    }
}

/// Channel data for one steering angle: `r` time samples × `L` elements,
/// stored sample-major (`data[s * L + e]`).
#[derive(Debug, Clone, PartialEq)]
pub struct RfFrame {
    n_samples: usize,
    n_elements: usize,
    steering_angle: f64,
    data: Vec<f64>,
}

impl RfFrame {
    pub fn zeros(n_samples: usize, n_elements: usize, steering_angle: f64) -> Self {
        Self {
            n_samples,
            n_elements,
            steering_angle,
            data: vec![0.0; n_samples * n_elements],
        }
    }

    pub fn from_vec(
        n_samples: usize,
        n_elements: usize,
        steering_angle: f64,
        data: Vec<f64>,
    ) -> Result<Self> {
        if data.len() != n_samples * n_elements {
            return Err(Error::dims(
                "RfFrame::from_vec",
                n_samples * n_elements,
                data.len(),
            ));
        }
        Ok(Self {
            n_samples,
            n_elements,
            steering_angle,
            data,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    /// Steering angle in radians.
    pub fn steering_angle(&self) -> f64 {
        self.steering_angle
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, sample: usize, element: usize) -> f64 {
        self.data[sample * self.n_elements + element]
    }

    pub fn dot(&self, other: &RfFrame) -> Result<f64> {
        if self.data.len() != other.data.len() {
            return Err(Error::dims("RfFrame::dot", self.data.len(), other.data.len()));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
