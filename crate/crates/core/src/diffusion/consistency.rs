use crate::acoustics::MeasurementOperator;
use crate::{Error, Image, Result, RfFrame};

/// A linear map from images to channel data together with its adjoint.
pub trait LinearModel: Sync {
    fn forward(&self, x: &Image) -> Result<RfFrame>;
    fn adjoint(&self, y: &RfFrame) -> Result<Image>;
    /// `(samples, elements)` of the frames this model produces.
    fn frame_shape(&self) -> (usize, usize);
}

impl LinearModel for MeasurementOperator {
    fn forward(&self, x: &Image) -> Result<RfFrame> {
        MeasurementOperator::forward(self, x)
    }

    fn adjoint(&self, y: &RfFrame) -> Result<Image> {
        MeasurementOperator::adjoint(self, y)
    }

    fn frame_shape(&self) -> (usize, usize) {
        (self.geometry().sample_count, self.geometry().element_count)
    }
}

/// One measured steering angle: its operator and channel data.
#[derive(Clone, Copy)]
pub struct Measurement<'a> {
    pub operator: &'a dyn LinearModel,
    pub frame: &'a RfFrame,
}

impl std::fmt::Debug for Measurement<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Measurement")
            .field("frame_shape", &self.operator.frame_shape())
            .finish()
    }
}

/// Gradient step on the (non-squared) residual norm `‖H(a·x) − y‖₂`,
/// stacked over all measured angles.
///
/// `amplitude` (`a`) maps the sampler's normalised image back to scatterer
/// units before `H` is applied; the gradient is taken with respect to the
/// normalised image.
#[derive(Debug, Clone)]
pub struct DataConsistency<'a> {
    pub lambda: f64,
    pub measurements: Vec<Measurement<'a>>,
    pub amplitude: f64,
    /// Lower bound on `‖r‖₂` in the gradient denominator.
    pub residual_floor: f64,
}

/// Relative residual floor: `ε = 1e-12 · ‖y‖₂`.
pub const RELATIVE_RESIDUAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyStep {
    pub residual_before: f64,
    pub gradient_norm: f64,
}

impl<'a> DataConsistency<'a> {
    /// No measurements: every application is the identity.
    pub fn none() -> Self {
        Self {
            lambda: 0.0,
            measurements: Vec::new(),
            amplitude: 1.0,
            residual_floor: f64::MIN_POSITIVE,
        }
    }

    pub fn new(lambda: f64, measurements: Vec<Measurement<'a>>) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::param(format!("lambda must be >= 0, got {lambda}")));
        }
        let y_norm = measurements
            .iter()
            .map(|m| m.frame.norm().powi(2))
            .sum::<f64>()
            .sqrt();
        let residual_floor = if y_norm > 0.0 {
            RELATIVE_RESIDUAL_FLOOR * y_norm
        } else {
            RELATIVE_RESIDUAL_FLOOR
        };
        for m in &measurements {
            let (r, l) = m.operator.frame_shape();
            if (m.frame.n_samples(), m.frame.n_elements()) != (r, l) {
                return Err(Error::dims(
                    "DataConsistency::new",
                    format!("{r}x{l}"),
                    format!("{}x{}", m.frame.n_samples(), m.frame.n_elements()),
                ));
            }
        }
        Ok(Self {
            lambda,
            measurements,
            amplitude: 1.0,
            residual_floor,
        })
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn is_active(&self) -> bool {
        !self.measurements.is_empty()
    }

    fn residuals(&self, x: &Image) -> Result<Vec<RfFrame>> {
        let scaled = x.scaled(self.amplitude);
        self.measurements
            .iter()
            .map(|m| {
                let mut r = m.operator.forward(&scaled)?;
                for (a, b) in r.data_mut().iter_mut().zip(m.frame.data()) {
                    *a -= b;
                }
                Ok(r)
            })
            .collect()
    }

    /// `‖H(a·x) − y‖₂` over the stacked angles.
    pub fn residual_norm(&self, x: &Image) -> Result<f64> {
        Ok(stacked_norm(&self.residuals(x)?))
    }

    /// `a · Σ Hᵀr / max(‖r‖₂, ε)` and the residual norm it was taken at.
    pub fn gradient(&self, x: &Image) -> Result<(Image, f64)> {
        let residuals = self.residuals(x)?;
        let norm = stacked_norm(&residuals);
        let mut grad = Image::zeros(x.n_z(), x.n_x());
        for (m, r) in self.measurements.iter().zip(&residuals) {
            let back = m.operator.adjoint(r)?;
            for (g, b) in grad.data_mut().iter_mut().zip(back.data()) {
                *g += b;
            }
        }
        let scale = self.amplitude / norm.max(self.residual_floor);
        grad.data_mut().iter_mut().for_each(|g| *g *= scale);
        Ok((grad, norm))
    }

    /// `x − λ·∇‖H(a·x) − y‖₂`. Identity when `λ = 0` or nothing is measured.
    pub fn apply(&self, x: &Image) -> Result<(Image, Option<ConsistencyStep>)> {
        if !self.is_active() {
            return Ok((x.clone(), None));
        }
        let (grad, residual_before) = self.gradient(x)?;
        let step = ConsistencyStep {
            residual_before,
            gradient_norm: grad.norm(),
        };
        if self.lambda == 0.0 {
            return Ok((x.clone(), Some(step)));
        }
        Ok((x.axpy(-self.lambda, &grad)?, Some(step)))
    }
}

fn stacked_norm(frames: &[RfFrame]) -> f64 {
    frames
        .iter()
        .map(|r| r.norm().powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Applies one data-consistency step.
pub fn data_consistency(x: &Image, dc: &DataConsistency<'_>) -> Result<Image> {
    Ok(dc.apply(x)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::{build_operator, ImagingGrid, TransducerGeometry};

    fn small_op() -> MeasurementOperator {
        let geometry = TransducerGeometry {
            element_count: 4,
            sample_count: 256,
            ..Default::default()
        };
        let grid = ImagingGrid {
            axial_count: 6,
            lateral_count: 6,
            z_min: 2e-3,
            z_max: 3e-3,
            lateral_extent: 1e-3,
        };
        build_operator(&geometry, &grid, 0.05).unwrap()
    }

    #[test]
    fn lambda_zero_is_identity() {
        let op = small_op();
        let x = Image::filled(6, 6, 0.3);
        let y = op.forward(&Image::zeros(6, 6)).unwrap();
        let dc = DataConsistency::new(0.0, vec![Measurement { operator: &op, frame: &y }]).unwrap();
        assert_eq!(data_consistency(&x, &dc).unwrap(), x);
        assert_eq!(data_consistency(&x, &DataConsistency::none()).unwrap(), x);
    }

    #[test]
    fn consistent_input_is_a_fixed_point() {
        let op = small_op();
        let x = Image::from_vec(6, 6, (0..36).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let y = op.forward(&x).unwrap();
        let dc = DataConsistency::new(0.1, vec![Measurement { operator: &op, frame: &y }]).unwrap();
        let (grad, norm) = dc.gradient(&x).unwrap();
        assert_eq!(norm, 0.0);
        assert!(grad.norm() < 1e-9);
        let out = data_consistency(&x, &dc).unwrap();
        assert!(out.mean_squared_distance(&x).unwrap() < 1e-18);
    }

    /// `H = I` on a single pixel.
    struct Scalar;

    impl LinearModel for Scalar {
        fn forward(&self, x: &Image) -> Result<RfFrame> {
            RfFrame::from_vec(1, 1, 0.0, x.data().to_vec())
        }
        fn adjoint(&self, y: &RfFrame) -> Result<Image> {
            Image::from_vec(1, 1, y.data().to_vec())
        }
        fn frame_shape(&self) -> (usize, usize) {
            (1, 1)
        }
    }

    #[test]
    fn scalar_surrogate_takes_unit_gradient() {
        let y = RfFrame::zeros(1, 1, 0.0);
        let dc = DataConsistency::new(1.0, vec![Measurement { operator: &Scalar, frame: &y }]).unwrap();
        let x = Image::from_vec(1, 1, vec![3.0]).unwrap();
        let out = data_consistency(&x, &dc).unwrap();
        assert!((out.data()[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_negative_lambda_and_bad_frames() {
        let op = small_op();
        let y = RfFrame::zeros(256, 4, 0.0);
        assert!(DataConsistency::new(-1.0, vec![Measurement { operator: &op, frame: &y }]).is_err());
        let bad = RfFrame::zeros(10, 4, 0.0);
        assert!(DataConsistency::new(0.1, vec![Measurement { operator: &op, frame: &bad }]).is_err());
    }
}
