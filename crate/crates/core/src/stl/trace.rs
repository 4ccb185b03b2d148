use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite discrete-time trace `x_0, ..., x_{len-1}` of equal-dimension states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Trace {
    samples: Vec<Vec<f64>>,
}

impl Trace {
    pub fn new(samples: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = samples.first() {
            let n = first.len();
            if let Some((i, s)) = samples.iter().enumerate().find(|(_, s)| s.len() != n) {
                return Err(Error::Dimension(format!(
                    "sample {i} has {} components, sample 0 has {n}",
                    s.len()
                )));
            }
        }
        Ok(Self { samples })
    }

    /// Scalar trace, one component per sample.
    pub fn scalar(values: &[f64]) -> Self {
        Self {
            samples: values.iter().map(|v| vec![*v]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Vec<f64>> {
        self.samples
    }
}

impl TryFrom<Vec<Vec<f64>>> for Trace {
    type Error = Error;

    fn try_from(samples: Vec<Vec<f64>>) -> Result<Self> {
        Trace::new(samples)
    }
}

impl From<Trace> for Vec<Vec<f64>> {
    fn from(t: Trace) -> Self {
        t.samples
    }
}
