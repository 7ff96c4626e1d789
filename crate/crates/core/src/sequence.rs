use std::ops::Deref;

use crate::error::{Error, Result};

/// A finite-valued real sample sequence (observation, signal, noise, or
/// error record). The grid it lives on is tracked by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence(Vec<f64>);

impl Sequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!(
                "non-finite sample {} at index {i}",
                values[i]
            )));
        }
        Ok(Sequence(values))
    }

    pub fn zeros(len: usize) -> Self {
        Sequence(vec![0.0; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Mean power `(1/N) Σ v²`.
    pub fn mean_power(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().map(|v| v * v).sum::<f64>() / self.0.len() as f64
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Sequence(values)
    }
}

impl Deref for Sequence {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Sequence {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Sequence::new(values)
    }
}
