use crate::error::{Error, Result};

/// A flat gradient vector of 64-bit reals; the unit of data every collective reduces.
///
/// One element occupies exactly 8 bytes on the wire, so element counts and byte
/// counts convert without rounding.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientBuffer {
    values: Vec<f64>,
}

/// Bytes occupied by one gradient element on the wire.
pub const ELEMENT_BYTES: usize = 8;

impl GradientBuffer {
    pub fn new(values: Vec<f64>) -> Self {
        GradientBuffer { values }
    }

    pub fn zeros(len: usize) -> Self {
        GradientBuffer {
            values: vec![0.0; len],
        }
    }

    /// Element count K.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Collectives require finite inputs; NaN or infinity would poison every
    /// worker's result through the reduction.
    pub fn ensure_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::invalid(format!(
                "gradient buffer has non-finite value at index {i}"
            ))),
        }
    }
}

impl From<Vec<f64>> for GradientBuffer {
    fn from(values: Vec<f64>) -> Self {
        GradientBuffer::new(values)
    }
}
