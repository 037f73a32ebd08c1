//! Explanation functions as first-class objects.
//!
//! An explanation function maps an input together with the model's label for
//! it into a real vector; the explanation domain is always embedded in R^m
//! with the L2 metric (matrix-valued explanations are flattened row major).
//! Binding an explanation function to a model and a sample space evaluates it
//! on every point, which is the form all checkers consume.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{EfxError, Result};
use crate::model::LayeredModel;
use crate::prob::{quantize, RandomVariable, SampleSpace};

/// Quantization resolution used when a scenario does not override it.
/// Fine enough to keep every distinction of tabulated or integer-valued
/// explanations at desk scale.
pub const DEFAULT_RESOLUTION: f64 = 1e-6;

/// How an explanation function is defined.
#[derive(Debug, Clone)]
pub enum EfSpec {
    /// Gradient of the predicted-class score with respect to the input:
    /// the class vector of the label times the full model Jacobian.
    Gradient,
    /// Explicit explanation vector per sample point (for the label the model
    /// assigns that point).
    Tabulated { values: Vec<DVector<f64>> },
}

/// An explanation function evaluated on every point of a sample space.
#[derive(Debug, Clone)]
pub struct BoundEf {
    values: Vec<DVector<f64>>,
    out_dim: usize,
}

/// Gradient explanation at a single input: `m_label^T J_p(x)` as a vector of
/// the input dimension.
pub fn gradient_explanation(model: &LayeredModel, x: &DVector<f64>) -> Result<DVector<f64>> {
    let head = model
        .head()
        .ok_or_else(|| EfxError::Capability("gradient explanation needs an argmax head".into()))?;
    if !model.has_jacobians() {
        return Err(EfxError::Capability(
            "gradient explanation needs Jacobians on every layer".into(),
        ));
    }
    let label = model.label(x)?;
    let jac = model.prefix_jacobian(model.depth(), x)?;
    let m = &head.class_vectors[label - 1];
    Ok((m.transpose() * jac).transpose())
}

/// Evaluates `spec` on every sample point.
pub fn bind(spec: &EfSpec, model: &LayeredModel, space: &SampleSpace) -> Result<BoundEf> {
    let values = match spec {
        EfSpec::Gradient => space
            .points()
            .iter()
            .map(|x| gradient_explanation(model, x))
            .collect::<Result<Vec<_>>>()?,
        EfSpec::Tabulated { values } => {
            if values.len() != space.len() {
                return Err(EfxError::Structural(format!(
                    "tabulated explanation has {} values for {} points",
                    values.len(),
                    space.len()
                )));
            }
            values.clone()
        }
    };
    let out_dim = values[0].len();
    for (i, v) in values.iter().enumerate() {
        if v.len() != out_dim {
            return Err(EfxError::Structural(format!(
                "explanation at point {i} has dimension {}, expected {out_dim}",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(EfxError::Numeric(format!(
                "explanation at point {i} has a non-finite entry"
            )));
        }
    }
    Ok(BoundEf { values, out_dim })
}

impl BoundEf {
    pub fn from_values(values: Vec<DVector<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(EfxError::Structural("explanation needs at least one value".into()));
        }
        let out_dim = values[0].len();
        if values.iter().any(|v| v.len() != out_dim) {
            return Err(EfxError::Structural(
                "explanation values must share one dimension".into(),
            ));
        }
        Ok(BoundEf { values, out_dim })
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> &DVector<f64> {
        &self.values[i]
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    /// L2 distance between the explanations of two sample points.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        (&self.values[a] - &self.values[b]).norm()
    }

    /// Quantizes the explanation values into a discrete variable on `space`.
    pub fn as_rv(&self, space: &Arc<SampleSpace>, resolution: f64) -> Result<RandomVariable> {
        quantize(space, &self.values, resolution)
    }
}

/// L2 distance between two explanation vectors of equal dimension.
pub fn ef_distance(a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(EfxError::Structural(format!(
            "explanation dimensions {} and {} differ",
            a.len(),
            b.len()
        )));
    }
    Ok((a - b).norm())
}
