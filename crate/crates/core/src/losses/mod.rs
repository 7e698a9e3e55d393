//! Deep-metric-learning objectives evaluated on plain embedding vectors.
//!
//! Every function here is a pure numerical kernel: no parameters are stored
//! and nothing is differentiated automatically. [`finite_diff_gradient`]
//! supplies gradients when a caller needs them.
//!
//! Distances are squared Euclidean throughout, and margins of the
//! distance-based losses are compared against the squared distance.

mod gradient;
mod nngk;
mod pairwise;
mod proxy_anchor;
mod softtriple;
mod supcon;

pub use gradient::finite_diff_gradient;
pub use nngk::{
    gaussian_kernel, nngk_class_prob, nngk_class_probs, nngk_loss, nngk_neighbor_prob,
    nngk_neighbor_probs, Center, CenterSet, MIN_PROBABILITY,
};
pub use pairwise::{contrastive_loss, triplet_loss};
pub use proxy_anchor::{proxy_anchor_loss, ProxySet};
pub use softtriple::{softtriple_loss, softtriple_similarity, SoftTripleParams};
pub use supcon::{supcon_anchor_terms, supcon_loss, SupConParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::LabelId;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("kernel-weighted denominator is zero")]
    DegenerateDenominator,
    #[error("need {requested} neighbours but only {available} centers are available")]
    InsufficientCenters { requested: usize, available: usize },
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("no proxy for class {0}")]
    MissingProxy(LabelId),
    #[error("class {0} has more than one proxy")]
    DuplicateProxy(LabelId),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("no anchor in the batch has a positive")]
    NoPositives,
    #[error("unknown class {0}")]
    UnknownClass(LabelId),
    #[error("embedding has zero norm")]
    ZeroNorm,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("function is not finite at a probe point")]
    NonFiniteValue,
}

/// An embedding vector together with its class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledEmbedding {
    pub vector: Vec<f64>,
    pub label: LabelId,
}

/// A non-empty list of labelled embeddings of one common dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingBatch {
    items: Vec<LabeledEmbedding>,
}

impl EmbeddingBatch {
    pub fn new(items: Vec<LabeledEmbedding>) -> Result<Self, LossError> {
        let first = items.first().ok_or(LossError::EmptyBatch)?;
        let dim = first.vector.len();
        if dim == 0 {
            return Err(LossError::InvalidParameter(
                "embedding dimension must be positive".into(),
            ));
        }
        for item in &items {
            if item.vector.len() != dim {
                return Err(LossError::DimensionMismatch {
                    left: dim,
                    right: item.vector.len(),
                });
            }
            if item.vector.iter().any(|v| !v.is_finite()) {
                return Err(LossError::NonFiniteValue);
            }
        }
        Ok(Self { items })
    }

    pub fn from_parts(vectors: Vec<Vec<f64>>, labels: Vec<LabelId>) -> Result<Self, LossError> {
        if vectors.len() != labels.len() {
            return Err(LossError::DimensionMismatch {
                left: vectors.len(),
                right: labels.len(),
            });
        }
        Self::new(
            vectors
                .into_iter()
                .zip(labels)
                .map(|(vector, label)| LabeledEmbedding { vector, label })
                .collect(),
        )
    }

    pub fn items(&self) -> &[LabeledEmbedding] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.items[0].vector.len()
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.items.iter().map(|i| i.vector.clone()).collect()
    }

    pub fn labels(&self) -> Vec<LabelId> {
        self.items.iter().map(|i| i.label).collect()
    }

    /// Same labels, new vectors.
    pub fn with_vectors(&self, vectors: Vec<Vec<f64>>) -> Result<Self, LossError> {
        Self::from_parts(vectors, self.labels())
    }

    /// Distinct labels in ascending order.
    pub fn classes(&self) -> Vec<LabelId> {
        let mut c = self.labels();
        c.sort();
        c.dedup();
        c
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<(), LossError> {
    if a.len() != b.len() {
        return Err(LossError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// `||a - b||^2`.
pub fn squared_distance(a: &[f64], b: &[f64]) -> Result<f64, LossError> {
    check_dims(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64, LossError> {
    check_dims(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
}

/// `x / ||x||`.
pub fn l2_normalize(x: &[f64]) -> Result<Vec<f64>, LossError> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(LossError::ZeroNorm);
    }
    Ok(x.iter().map(|v| v / norm).collect())
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, LossError> {
    check_dims(a, b)?;
    dot(&l2_normalize(a)?, &l2_normalize(b)?)
}

/// `ln(sum(exp(v)))`, shifted by the maximum. Empty input gives `-inf`.
pub(crate) fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
