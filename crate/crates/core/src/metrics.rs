//! Contrast metrics over two regions of interest.
//!
//! CNR convention: `20·log10(|μ_in − μ_out| / √(σ_in² + σ_out²))` with
//! population variances. gCNR: one minus the overlap of the two normalised
//! histograms on shared bin edges.

use crate::acoustics::bmode;
use crate::phantom::RoiMasks;
use crate::{Error, Image, Result};

pub const DEFAULT_GCNR_BINS: usize = 256;
pub const DEFAULT_DYNAMIC_RANGE_DB: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RoiSamples {
    pub inside: Vec<f64>,
    pub outside: Vec<f64>,
}

impl RoiSamples {
    pub fn new(inside: Vec<f64>, outside: Vec<f64>) -> Result<Self> {
        if inside.is_empty() || outside.is_empty() {
            return Err(Error::param("ROI sample sets must be nonempty"));
        }
        if inside.iter().chain(&outside).any(|v| !v.is_finite()) {
            return Err(Error::param("ROI samples must be finite"));
        }
        Ok(Self { inside, outside })
    }

    /// Pixels of `img` selected by the masks.
    pub fn from_masks(img: &Image, masks: &RoiMasks) -> Result<Self> {
        if masks.inside.len() != img.len() || masks.outside.len() != img.len() {
            return Err(Error::dims("RoiSamples::from_masks", img.len(), masks.inside.len()));
        }
        let pick = |mask: &[bool]| -> Vec<f64> {
            img.data()
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(&v, _)| v)
                .collect()
        };
        Self::new(pick(&masks.inside), pick(&masks.outside))
    }

    pub fn swapped(&self) -> Self {
        Self {
            inside: self.outside.clone(),
            outside: self.inside.clone(),
        }
    }
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Contrast-to-noise ratio in dB; `-inf` when the means coincide.
pub fn cnr_db(r: &RoiSamples) -> Result<f64> {
    if r.inside.len() < 2 || r.outside.len() < 2 {
        return Err(Error::param("CNR needs at least 2 samples per ROI"));
    }
    let (m_in, v_in) = mean_var(&r.inside);
    let (m_out, v_out) = mean_var(&r.outside);
    let diff = (m_in - m_out).abs();
    if diff == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(20.0 * (diff / (v_in + v_out).sqrt()).log10())
}

/// Generalised CNR in `[0, 1]`.
pub fn gcnr(r: &RoiSamples, bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::param("gCNR needs at least 2 bins"));
    }
    let (lo, hi) = r
        .inside
        .iter()
        .chain(&r.outside)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(hi > lo) {
        return Ok(0.0);
    }
    let width = (hi - lo) / bins as f64;
    let histogram = |v: &[f64]| -> Vec<f64> {
        let mut h = vec![0.0; bins];
        for &x in v {
            let b = (((x - lo) / width) as usize).min(bins - 1);
            h[b] += 1.0;
        }
        let n = v.len() as f64;
        h.iter_mut().for_each(|c| *c /= n);
        h
    };
    let (p_in, p_out) = (histogram(&r.inside), histogram(&r.outside));
    let overlap: f64 = p_in.iter().zip(&p_out).map(|(a, b)| a.min(*b)).sum();
    Ok((1.0 - overlap).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contrast {
    pub cnr_db: f64,
    pub gcnr: f64,
}

/// CNR and gCNR of a linear-domain image after envelope detection and
/// log compression.
pub fn bmode_contrast(
    img: &Image,
    masks: &RoiMasks,
    dynamic_range_db: f64,
    bins: usize,
) -> Result<Contrast> {
    let db = bmode(img, dynamic_range_db)?;
    let samples = RoiSamples::from_masks(&db, masks)?;
    Ok(Contrast {
        cnr_db: cnr_db(&samples)?,
        gcnr: gcnr(&samples, bins)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sets_have_no_contrast() {
        let v = vec![1.0, 2.0, 3.0, 4.0];
        let r = RoiSamples::new(v.clone(), v).unwrap();
        assert_eq!(cnr_db(&r).unwrap(), f64::NEG_INFINITY);
        assert_eq!(gcnr(&r, 256).unwrap(), 0.0);
    }

    #[test]
    fn cnr_hand_value() {
        // Means 0 and 2, population std 1 each.
        let r = RoiSamples::new(vec![-1.0, 1.0], vec![1.0, 3.0]).unwrap();
        let expect = 20.0 * (2.0 / 2f64.sqrt()).log10();
        assert!((cnr_db(&r).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 3.0103).abs() < 1e-4);
    }

    #[test]
    fn disjoint_supports_give_unit_gcnr() {
        let r = RoiSamples::new(vec![-3.0, -2.0, -0.5], vec![1.5, 2.0, 7.0]).unwrap();
        assert_eq!(gcnr(&r, 256).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        let r = RoiSamples::new(vec![2.0; 5], vec![2.0; 3]).unwrap();
        assert_eq!(gcnr(&r, 16).unwrap(), 0.0);
        assert!(gcnr(&r, 1).is_err());
        let one = RoiSamples::new(vec![1.0], vec![1.0, 2.0]).unwrap();
        assert!(cnr_db(&one).is_err());
        assert!(RoiSamples::new(vec![], vec![1.0]).is_err());
        assert!(RoiSamples::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn symmetry() {
        let r = RoiSamples::new(vec![0.1, 0.5, 0.9, 1.3], vec![1.0, 1.2, 2.2, 2.9, 3.1]).unwrap();
        assert_eq!(gcnr(&r, 32).unwrap(), gcnr(&r.swapped(), 32).unwrap());
        assert_eq!(cnr_db(&r).unwrap(), cnr_db(&r.swapped()).unwrap());
    }
}
