//! Synthetic scatterer maps: speckle background, anechoic/hypoechoic cysts
//! and point targets.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::acoustics::ImagingGrid;
use crate::rng::{stream, Stage};
use crate::{Error, Image, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cyst {
    /// Lateral centre in meters.
    pub x: f64,
    /// Depth of the centre in meters.
    pub z: f64,
    pub radius: f64,
    /// Multiplier applied to scatterers inside the disk, in `[0, 1]`.
    pub amplitude_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTarget {
    pub x: f64,
    pub z: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSpec {
    pub background_std: f64,
    pub cysts: Vec<Cyst>,
    pub points: Vec<PointTarget>,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            background_std: 1.0,
            cysts: Vec::new(),
            points: Vec::new(),
            seed: 0,
        }
    }
}

impl PhantomSpec {
    /// One anechoic cyst of radius 12 pixels centred in a unit-std speckle
    /// background.
    pub fn default_cyst(grid: &ImagingGrid, seed: u64) -> Self {
        let radius = 12.0 * grid.dx().max(grid.dz());
        Self {
            background_std: 1.0,
            cysts: vec![Cyst {
                x: 0.0,
                z: 0.5 * (grid.z_min + grid.z_max),
                radius,
                amplitude_scale: 0.0,
            }],
            points: Vec::new(),
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self, grid: &ImagingGrid) -> Result<()> {
        if !(self.background_std >= 0.0) || !self.background_std.is_finite() {
            return Err(Error::param("phantom.background_std must be finite and >= 0"));
        }
        for (i, c) in self.cysts.iter().enumerate() {
            if !(c.radius > 0.0) || !c.radius.is_finite() {
                return Err(Error::param(format!("cyst {i}: radius must be > 0")));
            }
            if !(0.0..=1.0).contains(&c.amplitude_scale) {
                return Err(Error::param(format!(
                    "cyst {i}: amplitude_scale must lie in [0, 1], got {}",
                    c.amplitude_scale
                )));
            }
            if !grid.contains(c.x, c.z) {
                return Err(Error::param(format!(
                    "cyst {i}: centre ({:.3e}, {:.3e}) m lies outside the grid",
                    c.x, c.z
                )));
            }
        }
        for (i, p) in self.points.iter().enumerate() {
            if !grid.contains(p.x, p.z) || !p.amplitude.is_finite() {
                return Err(Error::param(format!(
                    "point {i}: position ({:.3e}, {:.3e}) m lies outside the grid",
                    p.x, p.z
                )));
            }
        }
        Ok(())
    }
}

fn inside_disk(grid: &ImagingGrid, iz: usize, ix: usize, c: &Cyst, radius: f64) -> bool {
    let dx = grid.x(ix) - c.x;
    let dz = grid.z(iz) - c.z;
    dx * dx + dz * dz < radius * radius
}

/// Renders the scatterer map for `spec` on `grid`.
pub fn render(spec: &PhantomSpec, grid: &ImagingGrid) -> Result<Image> {
    grid.validate()?;
    spec.validate(grid)?;
    let (n_z, n_x) = (grid.axial_count, grid.lateral_count);
    let mut rng = stream(spec.seed, Stage::Phantom);
    let mut img = Image::zeros(n_z, n_x);
    if spec.background_std > 0.0 {
        for v in img.data_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = spec.background_std * z;
        }
    }
    for c in &spec.cysts {
        for iz in 0..n_z {
            for ix in 0..n_x {
                if inside_disk(grid, iz, ix, c, c.radius) {
                    let v = img.get(iz, ix) * c.amplitude_scale;
                    img.set(iz, ix, v);
                }
            }
        }
    }
    for p in &spec.points {
        let (iz, ix) = grid.nearest_pixel(p.x, p.z);
        let v = img.get(iz, ix) + p.amplitude;
        img.set(iz, ix, v);
    }
    Ok(img)
}

/// Inside/outside pixel masks around the first cyst.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiMasks {
    pub inside: Vec<bool>,
    pub outside: Vec<bool>,
}

impl RoiMasks {
    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn outside_count(&self) -> usize {
        self.outside.iter().filter(|&&b| b).count()
    }
}

/// Inside mask: pixels strictly within `radius − margin` of the first cyst.
/// Outside mask: the equal-area annulus starting at `radius + margin`.
pub fn roi_masks(spec: &PhantomSpec, grid: &ImagingGrid, margin: f64) -> Result<RoiMasks> {
    let c = spec
        .cysts
        .first()
        .ok_or_else(|| Error::param("ROI masks need at least one cyst"))?;
    if !(margin >= 0.0) {
        return Err(Error::param("ROI margin must be >= 0"));
    }
    let r_in = c.radius - margin;
    let r_gap = c.radius + margin;
    if r_in <= 0.0 {
        return Err(Error::param(format!(
            "margin {margin} leaves no inside region for radius {}",
            c.radius
        )));
    }
    let r_out = (r_in * r_in + r_gap * r_gap).sqrt();
    let n = grid.pixel_count();
    let mut inside = vec![false; n];
    let mut outside = vec![false; n];
    for iz in 0..grid.axial_count {
        for ix in 0..grid.lateral_count {
            let dx = grid.x(ix) - c.x;
            let dz = grid.z(iz) - c.z;
            let d2 = dx * dx + dz * dz;
            let p = iz * grid.lateral_count + ix;
            inside[p] = d2 < r_in * r_in;
            outside[p] = d2 > r_gap * r_gap && d2 <= r_out * r_out;
        }
    }
    let masks = RoiMasks { inside, outside };
    if masks.inside_count() == 0 || masks.outside_count() == 0 {
        return Err(Error::param(format!(
            "margin {margin} leaves an empty ROI mask on this grid"
        )));
    }
    Ok(masks)
}
