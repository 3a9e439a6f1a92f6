use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ImagingGrid, TransducerGeometry};
use crate::{Error, Image, Result, RfFrame};

/// Receive apodization across the aperture.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Apodization {
    #[default]
    None,
    Hann,
}

impl Apodization {
    fn weights(self, element_count: usize) -> Vec<f64> {
        match self {
            Apodization::None => vec![1.0; element_count],
            Apodization::Hann => (0..element_count)
                .map(|e| {
                    let t = (e + 1) as f64 / (element_count + 1) as f64;
                    0.5 - 0.5 * (2.0 * PI * t).cos()
                })
                .collect(),
        }
    }
}

/// Round-trip delay in seconds from plane-wave transmit at angle `theta` to
/// the pixel at `(x, z)` and back to an element at lateral `x_e`.
#[inline]
pub fn round_trip_delay(x: f64, z: f64, x_e: f64, theta: f64, wave_speed: f64) -> f64 {
    let transmit = z * theta.cos() + x * theta.sin();
    let receive = (z * z + (x - x_e) * (x - x_e)).sqrt();
    (transmit + receive) / wave_speed
}

/// Sparse plane-wave measurement operator `H` for one steering angle.
///
/// Rows index channel samples (`sample * L + element`), columns index pixels.
/// Entries are grouped per pixel so [`forward`](Self::forward) (scatter) and
/// [`adjoint`](Self::adjoint) (gather) walk the same arrays. Under the
/// unit-pulse transmit model the same matrix is the delay-and-sum
/// beamformer, so `adjoint` is DAS.
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    geometry: TransducerGeometry,
    grid: ImagingGrid,
    steering_angle: f64,
    offsets: Vec<usize>,
    rf_index: Vec<u32>,
    weights: Vec<f64>,
}

/// Caches the angle-independent receive path lengths so a family of
/// steering angles over the same geometry and grid can be built cheaply.
#[derive(Debug, Clone)]
pub struct OperatorBuilder {
    geometry: TransducerGeometry,
    grid: ImagingGrid,
    apodization: Vec<f64>,
    receive_path: Arc<Vec<f64>>,
}

impl OperatorBuilder {
    pub fn new(geometry: &TransducerGeometry, grid: &ImagingGrid) -> Result<Self> {
        Self::with_apodization(geometry, grid, Apodization::None)
    }

    pub fn with_apodization(
        geometry: &TransducerGeometry,
        grid: &ImagingGrid,
        apodization: Apodization,
    ) -> Result<Self> {
        geometry.validate()?;
        grid.validate()?;
        let elements = geometry.element_positions();
        let l = elements.len();
        let mut receive_path = Vec::with_capacity(grid.pixel_count() * l);
        for iz in 0..grid.axial_count {
            let z = grid.z(iz);
            for ix in 0..grid.lateral_count {
                let x = grid.x(ix);
                receive_path.extend(
                    elements
                        .iter()
                        .map(|&x_e| (z * z + (x - x_e) * (x - x_e)).sqrt()),
                );
            }
        }
        Ok(Self {
            geometry: geometry.clone(),
            grid: grid.clone(),
            apodization: apodization.weights(l),
            receive_path: Arc::new(receive_path),
        })
    }

    pub fn geometry(&self) -> &TransducerGeometry {
        &self.geometry
    }

    pub fn grid(&self) -> &ImagingGrid {
        &self.grid
    }

    pub fn build(&self, steering_angle: f64) -> Result<MeasurementOperator> {
        if !steering_angle.is_finite() || steering_angle.abs() >= PI / 2.0 {
            return Err(Error::param(format!(
                "steering angle must satisfy |theta| < pi/2, got {steering_angle}"
            )));
        }
        let g = &self.geometry;
        let l = g.element_count;
        let r = g.sample_count;
        let samples_per_meter = g.sample_rate / g.wave_speed;
        let (sin_t, cos_t) = steering_angle.sin_cos();
        let last = (r - 1) as f64;

        let n_pix = self.grid.pixel_count();
        let mut offsets = Vec::with_capacity(n_pix + 1);
        let mut rf_index = Vec::with_capacity(n_pix * l * 2);
        let mut weights = Vec::with_capacity(n_pix * l * 2);
        offsets.push(0);
        for iz in 0..self.grid.axial_count {
            let z = self.grid.z(iz);
            for ix in 0..self.grid.lateral_count {
                let x = self.grid.x(ix);
                let transmit = z * cos_t + x * sin_t;
                let p = iz * self.grid.lateral_count + ix;
                let rx = &self.receive_path[p * l..(p + 1) * l];
                for (e, &receive) in rx.iter().enumerate() {
                    let pos = (transmit + receive) * samples_per_meter;
                    // Both interpolation taps must land inside [0, r).
                    if !(pos >= 0.0 && pos < last) {
                        continue;
                    }
                    let i0 = pos.floor();
                    let frac = pos - i0;
                    let i0 = i0 as usize;
                    let apod = self.apodization[e];
                    rf_index.push((i0 * l + e) as u32);
                    weights.push((1.0 - frac) * apod);
                    rf_index.push(((i0 + 1) * l + e) as u32);
                    weights.push(frac * apod);
                }
                offsets.push(rf_index.len());
            }
        }
        if rf_index.is_empty() {
            return Err(Error::param(
                "no pixel of the grid is reachable within the recorded samples",
            ));
        }
        Ok(MeasurementOperator {
            geometry: self.geometry.clone(),
            grid: self.grid.clone(),
            steering_angle,
            offsets,
            rf_index,
            weights,
        })
    }
}

/// Builds `H` for one steering angle (radians).
pub fn build_operator(
    geometry: &TransducerGeometry,
    grid: &ImagingGrid,
    steering_angle: f64,
) -> Result<MeasurementOperator> {
    OperatorBuilder::new(geometry, grid)?.build(steering_angle)
}

impl MeasurementOperator {
    pub fn geometry(&self) -> &TransducerGeometry {
        &self.geometry
    }

    pub fn grid(&self) -> &ImagingGrid {
        &self.grid
    }

    pub fn steering_angle(&self) -> f64 {
        self.steering_angle
    }

    /// Number of stored (sample, weight) entries.
    pub fn nnz(&self) -> usize {
        self.weights.len()
    }

    /// `(sample_index, element, weight)` entries of one pixel's column.
    pub fn column(&self, pixel: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let l = self.geometry.element_count;
        let range = self.offsets[pixel]..self.offsets[pixel + 1];
        self.rf_index[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(move |(&idx, &w)| (idx as usize / l, idx as usize % l, w))
    }

    fn check_image(&self, x: &Image, context: &'static str) -> Result<()> {
        let expected = (self.grid.axial_count, self.grid.lateral_count);
        if x.shape() != expected {
            return Err(Error::dims(
                context,
                format!("{}x{}", expected.0, expected.1),
                format!("{}x{}", x.n_z(), x.n_x()),
            ));
        }
        Ok(())
    }

    fn check_frame(&self, y: &RfFrame, context: &'static str) -> Result<()> {
        let expected = (self.geometry.sample_count, self.geometry.element_count);
        if (y.n_samples(), y.n_elements()) != expected {
            return Err(Error::dims(
                context,
                format!("{}x{}", expected.0, expected.1),
                format!("{}x{}", y.n_samples(), y.n_elements()),
            ));
        }
        Ok(())
    }

    /// `y = H x`.
    pub fn forward(&self, x: &Image) -> Result<RfFrame> {
        self.check_image(x, "forward")?;
        let mut y = RfFrame::zeros(
            self.geometry.sample_count,
            self.geometry.element_count,
            self.steering_angle,
        );
        let out = y.data_mut();
        for (p, &v) in x.data().iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let range = self.offsets[p]..self.offsets[p + 1];
            for (&idx, &w) in self.rf_index[range.clone()].iter().zip(&self.weights[range]) {
                out[idx as usize] += w * v;
            }
        }
        Ok(y)
    }

    /// `x' = Hᵀ y`, the delay-and-sum image.
    pub fn adjoint(&self, y: &RfFrame) -> Result<Image> {
        self.check_frame(y, "adjoint")?;
        let input = y.data();
        let data = (0..self.grid.pixel_count())
            .map(|p| {
                let range = self.offsets[p]..self.offsets[p + 1];
                self.rf_index[range.clone()]
                    .iter()
                    .zip(&self.weights[range])
                    .map(|(&idx, &w)| w * input[idx as usize])
                    .sum()
            })
            .collect();
        Image::from_vec(self.grid.axial_count, self.grid.lateral_count, data)
    }

    /// Dense row-major `(r·L) × l` copy of the operator.
    pub fn to_dense(&self) -> Vec<f64> {
        let rows = self.geometry.sample_count * self.geometry.element_count;
        let cols = self.grid.pixel_count();
        let mut dense = vec![0.0; rows * cols];
        for p in 0..cols {
            for k in self.offsets[p]..self.offsets[p + 1] {
                dense[self.rf_index[k] as usize * cols + p] += self.weights[k];
            }
        }
        dense
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (TransducerGeometry, ImagingGrid) {
        let geometry = TransducerGeometry {
            element_count: 4,
            sample_count: 256,
            ..Default::default()
        };
        let grid = ImagingGrid {
            axial_count: 9,
            lateral_count: 9,
            z_min: 2e-3,
            z_max: 4e-3,
            lateral_extent: 1e-3,
        };
        (geometry, grid)
    }

    #[test]
    fn on_axis_delay_is_round_trip() {
        let z = 5e-3;
        let tau = round_trip_delay(0.0, z, 0.0, 0.0, 1540.0);
        assert!((tau - 2.0 * z / 1540.0).abs() < 1e-18);
    }

    #[test]
    fn symmetric_elements_share_taps_for_centred_pixel() {
        let (geometry, grid) = small();
        let op = build_operator(&geometry, &grid, 0.0).unwrap();
        let centre = 4 * grid.lateral_count + 4;
        let col: Vec<_> = op.column(centre).collect();
        let by_element = |e: usize| -> Vec<(usize, f64)> {
            col.iter()
                .filter(|c| c.1 == e)
                .map(|c| (c.0, c.2))
                .collect()
        };
        for (a, b) in [(0, 3), (1, 2)] {
            let (ta, tb) = (by_element(a), by_element(b));
            assert_eq!(ta.len(), 2);
            assert_eq!(ta.len(), tb.len());
            for (u, v) in ta.iter().zip(&tb) {
                assert_eq!(u.0, v.0);
                assert!((u.1 - v.1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn weights_sum_to_one_per_pixel_element() {
        let (geometry, grid) = small();
        let op = build_operator(&geometry, &grid, 0.1).unwrap();
        for p in 0..grid.pixel_count() {
            let mut sums = vec![0.0; geometry.element_count];
            for (s, e, w) in op.column(p) {
                assert!(s < geometry.sample_count);
                sums[e] += w;
            }
            for s in sums {
                assert!(s == 0.0 || (s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn out_of_range_delays_are_dropped() {
        let (mut geometry, grid) = small();
        // ~4 mm of round-trip path: the deeper half of the grid is unreachable.
        geometry.sample_count = 90;
        let op = build_operator(&geometry, &grid, 0.0).unwrap();
        let last = grid.pixel_count() - 1;
        assert_eq!(op.column(last).count(), 0);
        assert!(op.column(0).count() > 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (geometry, grid) = small();
        assert!(build_operator(&geometry, &grid, PI / 2.0).is_err());
        let bad_grid = ImagingGrid {
            z_min: -1e-3,
            ..grid.clone()
        };
        assert!(build_operator(&geometry, &bad_grid, 0.0).is_err());
        let bad_geometry = TransducerGeometry {
            pitch: f64::INFINITY,
            ..geometry.clone()
        };
        assert!(build_operator(&bad_geometry, &grid, 0.0).is_err());
        let op = build_operator(&geometry, &grid, 0.0).unwrap();
        assert!(op.forward(&Image::zeros(3, 3)).is_err());
        assert!(op.adjoint(&RfFrame::zeros(10, 4, 0.0)).is_err());
    }

    #[test]
    fn hann_apodization_tapers_edges() {
        let w = Apodization::Hann.weights(8);
        assert!(w[0] < w[3] && w[7] < w[4]);
        assert!((w[0] - w[7]).abs() < 1e-15);
    }

    #[test]
    fn zero_inputs_map_to_zero() {
        let (geometry, grid) = small();
        let op = build_operator(&geometry, &grid, 0.05).unwrap();
        let y = op.forward(&Image::zeros(9, 9)).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
        let x = op.adjoint(&RfFrame::zeros(256, 4, 0.05)).unwrap();
        assert!(x.data().iter().all(|&v| v == 0.0));
    }
}
