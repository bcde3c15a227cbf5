use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fixed-length real vector produced by a text or image encoder.
///
/// Stored unnormalized; [`cosine`] normalizes at the point of use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidEmbedding(format!(
                "dimension {} is below 2",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidEmbedding(format!("non-finite entry at {i}")));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            values: self.values.iter().map(|v| v / n).collect(),
        })
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * factor).collect())
    }

    /// `self - other`, as a raw vector (which may be all zeros).
    pub fn difference(&self, other: &Embedding) -> Result<Vec<f64>> {
        check_dims(self.dim(), other.dim())?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect())
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.values
    }
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimMismatch { left, right });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity of two raw vectors, clamped to `[-1, 1]`.
pub fn cosine_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    cosine_slices(a.values(), b.values())
}
