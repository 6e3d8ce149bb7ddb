use crate::error::CoreError;

/// Observable information `x`, with the per-entry maxima used to rescale it
/// into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    values: Vec<f64>,
    scale_reference: Vec<f64>,
}

impl Observation {
    pub fn new(values: Vec<f64>, scale_reference: Vec<f64>) -> Result<Self, CoreError> {
        if values.len() != scale_reference.len() {
            return Err(CoreError::DimensionMismatch {
                expected: values.len(),
                got: scale_reference.len(),
            });
        }
        if let Some(s) = scale_reference.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(CoreError::InvalidObservation(format!("scale reference {s} is not positive")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidObservation("non-finite value".into()));
        }
        Ok(Observation { values, scale_reference })
    }

    /// Observation that is already on the unit scale.
    pub fn unit(values: Vec<f64>) -> Result<Self, CoreError> {
        let ones = vec![1.0; values.len()];
        Self::new(values, ones)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scale_reference(&self) -> &[f64] {
        &self.scale_reference
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Divides by the reference maxima and clamps into `[0, 1]`.
    pub fn normalized(&self) -> Observation {
        let values = self
            .values
            .iter()
            .zip(&self.scale_reference)
            .map(|(v, s)| (v / s).clamp(0.0, 1.0))
            .collect();
        Observation {
            values,
            scale_reference: vec![1.0; self.values.len()],
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.scale_reference.iter().all(|&s| s == 1.0) && self.values.iter().all(|v| (0.0..=1.0).contains(v))
    }
}

/// Per-entry maxima computed once from a training set and then frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationScaler {
    maxima: Vec<f64>,
}

impl ObservationScaler {
    pub fn fit<'a>(samples: impl IntoIterator<Item = &'a [f64]>) -> Result<Self, CoreError> {
        let mut maxima: Vec<f64> = Vec::new();
        for s in samples {
            if maxima.is_empty() {
                maxima = vec![0.0; s.len()];
            } else if s.len() != maxima.len() {
                return Err(CoreError::DimensionMismatch {
                    expected: maxima.len(),
                    got: s.len(),
                });
            }
            for (m, v) in maxima.iter_mut().zip(s) {
                *m = m.max(v.abs());
            }
        }
        for m in &mut maxima {
            if *m <= 0.0 {
                *m = 1.0;
            }
        }
        Ok(ObservationScaler { maxima })
    }

    pub fn from_maxima(maxima: Vec<f64>) -> Self {
        ObservationScaler { maxima }
    }

    pub fn maxima(&self) -> &[f64] {
        &self.maxima
    }

    pub fn observe(&self, values: Vec<f64>) -> Result<Observation, CoreError> {
        Observation::new(values, self.maxima.clone())
    }
}
