use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Linear array and acquisition parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransducerGeometry {
    pub element_count: usize,
    /// Element spacing in meters.
    pub pitch: f64,
    /// Speed of sound in m/s.
    pub wave_speed: f64,
    /// Sampling rate in Hz.
    pub sample_rate: f64,
    /// Samples per channel.
    pub sample_count: usize,
}

impl Default for TransducerGeometry {
    fn default() -> Self {
        Self {
            element_count: 64,
            pitch: 0.3e-3,
            wave_speed: 1540.0,
            sample_rate: 31.25e6,
            sample_count: 1024,
        }
    }
}

impl TransducerGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.element_count < 2 {
            return Err(Error::param(format!(
                "geometry.element_count must be >= 2, got {}",
                self.element_count
            )));
        }
        for (name, v) in [
            ("pitch", self.pitch),
            ("wave_speed", self.wave_speed),
            ("sample_rate", self.sample_rate),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::param(format!(
                    "geometry.{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.sample_count == 0 {
            return Err(Error::param("geometry.sample_count must be > 0"));
        }
        Ok(())
    }

    /// Lateral element centres, symmetric about 0.
    pub fn element_positions(&self) -> Vec<f64> {
        let center = (self.element_count as f64 - 1.0) / 2.0;
        (0..self.element_count)
            .map(|e| (e as f64 - center) * self.pitch)
            .collect()
    }

    pub fn aperture(&self) -> f64 {
        (self.element_count as f64 - 1.0) * self.pitch
    }
}

/// Pixel grid in the imaging plane. Lateral positions are centred on the
/// array axis; pixel centres include both ends of each extent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImagingGrid {
    pub axial_count: usize,
    pub lateral_count: usize,
    /// Shallowest pixel depth in meters.
    pub z_min: f64,
    /// Deepest pixel depth in meters.
    pub z_max: f64,
    /// Total lateral width in meters.
    pub lateral_extent: f64,
}

impl Default for ImagingGrid {
    fn default() -> Self {
        Self {
            axial_count: 128,
            lateral_count: 128,
            z_min: 6.0e-3,
            z_max: 18.8e-3,
            lateral_extent: 12.8e-3,
        }
    }
}

impl ImagingGrid {
    pub fn validate(&self) -> Result<()> {
        if self.axial_count == 0 || self.lateral_count == 0 {
            return Err(Error::param("grid counts must be > 0"));
        }
        if !(self.z_min.is_finite() && self.z_max.is_finite() && self.lateral_extent.is_finite())
        {
            return Err(Error::param("grid extents must be finite"));
        }
        if self.z_min <= 0.0 {
            return Err(Error::param(format!(
                "grid.z_min must be > 0, got {}",
                self.z_min
            )));
        }
        if self.z_max < self.z_min || self.lateral_extent < 0.0 {
            return Err(Error::param("grid extents must be non-decreasing"));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.axial_count * self.lateral_count
    }

    pub fn dz(&self) -> f64 {
        if self.axial_count > 1 {
            (self.z_max - self.z_min) / (self.axial_count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn dx(&self) -> f64 {
        if self.lateral_count > 1 {
            self.lateral_extent / (self.lateral_count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn z(&self, iz: usize) -> f64 {
        self.z_min + iz as f64 * self.dz()
    }

    pub fn x(&self, ix: usize) -> f64 {
        -self.lateral_extent / 2.0 + ix as f64 * self.dx()
    }

    pub fn x_min(&self) -> f64 {
        -self.lateral_extent / 2.0
    }

    pub fn x_max(&self) -> f64 {
        self.lateral_extent / 2.0
    }

    /// Whether `(x, z)` lies inside the pixel-centre bounding box.
    pub fn contains(&self, x: f64, z: f64) -> bool {
        x >= self.x_min() && x <= self.x_max() && z >= self.z_min && z <= self.z_max
    }

    /// Nearest pixel `(iz, ix)` to a point inside the grid.
    pub fn nearest_pixel(&self, x: f64, z: f64) -> (usize, usize) {
        let iz = if self.axial_count > 1 {
            ((z - self.z_min) / self.dz()).round() as usize
        } else {
            0
        };
        let ix = if self.lateral_count > 1 {
            ((x - self.x_min()) / self.dx()).round() as usize
        } else {
            0
        };
        (iz.min(self.axial_count - 1), ix.min(self.lateral_count - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_positions_centred_with_pitch_spacing() {
        let g = TransducerGeometry {
            element_count: 4,
            pitch: 1.0,
            ..Default::default()
        };
        assert_eq!(g.element_positions(), vec![-1.5, -0.5, 0.5, 1.5]);
        let p = TransducerGeometry::default().element_positions();
        assert!(p.windows(2).all(|w| (w[1] - w[0] - 0.3e-3).abs() < 1e-15));
    }

    #[test]
    fn geometry_validation() {
        assert!(TransducerGeometry::default().validate().is_ok());
        let one = TransducerGeometry {
            element_count: 1,
            ..Default::default()
        };
        assert!(one.validate().is_err());
        let nan = TransducerGeometry {
            wave_speed: f64::NAN,
            ..Default::default()
        };
        assert!(nan.validate().is_err());
    }

    #[test]
    fn grid_rejects_non_positive_depth() {
        let g = ImagingGrid {
            z_min: 0.0,
            ..Default::default()
        };
        assert!(g.validate().is_err());
    }

    #[test]
    fn nearest_pixel_round_trips_centres() {
        let g = ImagingGrid::default();
        assert_eq!(g.nearest_pixel(g.x(17), g.z(91)), (91, 17));
    }
}
