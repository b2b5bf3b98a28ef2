use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub values: Vec<f64>,
    pub names: Vec<String>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("parameter vector must have at least one entry"));
        }
        if values.len() != names.len() {
            return Err(Error::domain(format!(
                "{} values but {} names",
                values.len(),
                names.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("parameter `{}` is not finite", names[k])));
        }
        Ok(Self { values, names })
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    /// Checks the bound invariant against `space`.
    pub fn check_bounds(&self, space: &ParameterSpace) -> Result<()> {
        if space.dims() != self.dims() {
            return Err(Error::domain("dimension mismatch between parameter and space"));
        }
        for (k, v) in self.values.iter().enumerate() {
            if *v < space.lo[k] || *v > space.hi[k] {
                return Err(Error::domain(format!(
                    "parameter `{}` = {v} outside [{}, {}]",
                    self.names[k], space.lo[k], space.hi[k]
                )));
            }
        }
        Ok(())
    }
}

/// Axis-aligned box `[lo, hi]` in R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParameterSpace {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::domain("parameter space is empty"));
        }
        if lo.len() != hi.len() {
            return Err(Error::domain("lower and upper bounds differ in length"));
        }
        for k in 0..lo.len() {
            if !lo[k].is_finite() || !hi[k].is_finite() {
                return Err(Error::domain(format!("bound {k} is not finite")));
            }
            if lo[k] >= hi[k] {
                return Err(Error::domain(format!(
                    "bound {k}: lower {} is not below upper {}",
                    lo[k], hi[k]
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, values: &[f64]) -> bool {
        values.len() == self.dims()
            && values
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (lo, hi))| v >= lo && v <= hi)
    }
}

/// One simulated output trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSequence {
    pub samples: Vec<f64>,
    pub mechanism_id: String,
}

impl ObservationSequence {
    pub fn new(samples: Vec<f64>, mechanism_id: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("observation sequence is empty"));
        }
        if let Some(k) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("observation {k} is not finite")));
        }
        Ok(Self {
            samples,
            mechanism_id: mechanism_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}
