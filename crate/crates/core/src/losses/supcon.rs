use serde::{Deserialize, Serialize};

use super::{dot, l2_normalize, log_sum_exp, EmbeddingBatch, LossError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupConParams {
    pub temperature: f64,
    /// L2-normalize embeddings before taking inner products.
    pub normalize: bool,
}

impl SupConParams {
    pub const DEFAULT_TEMPERATURE: f64 = 0.1;

    pub fn new(temperature: f64) -> Result<Self, LossError> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(LossError::InvalidParameter(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(Self {
            temperature,
            normalize: true,
        })
    }

    pub fn raw(mut self) -> Self {
        self.normalize = false;
        self
    }
}

impl Default for SupConParams {
    fn default() -> Self {
        Self {
            temperature: Self::DEFAULT_TEMPERATURE,
            normalize: true,
        }
    }
}

/// Per-anchor contribution
/// `-1/|P(i)| sum_{p in P(i)} log(exp(z_i.z_p / t) / sum_{a != i} exp(z_i.z_a / t))`,
/// or `None` for an anchor without positives.
///
/// `P(i)` is every other item of the anchor's class; `A(i)` is every item
/// except the anchor.
pub fn supcon_anchor_terms(
    batch: &EmbeddingBatch,
    params: &SupConParams,
) -> Result<Vec<Option<f64>>, LossError> {
    if !(params.temperature > 0.0) {
        return Err(LossError::InvalidParameter(
            "temperature must be positive".into(),
        ));
    }
    let z: Vec<Vec<f64>> = if params.normalize {
        batch
            .items()
            .iter()
            .map(|i| l2_normalize(&i.vector))
            .collect::<Result<_, _>>()?
    } else {
        batch.vectors()
    };
    let labels = batch.labels();
    let n = z.len();
    let mut terms = Vec::with_capacity(n);
    for i in 0..n {
        let logits: Vec<f64> = (0..n)
            .map(|a| dot(&z[i], &z[a]).map(|d| d / params.temperature))
            .collect::<Result<_, _>>()?;
        let positives: Vec<usize> = (0..n)
            .filter(|&p| p != i && labels[p] == labels[i])
            .collect();
        if positives.is_empty() {
            terms.push(None);
            continue;
        }
        let log_denominator = log_sum_exp((0..n).filter(|&a| a != i).map(|a| logits[a]));
        let sum: f64 = positives.iter().map(|&p| logits[p] - log_denominator).sum();
        terms.push(Some(-sum / positives.len() as f64));
    }
    Ok(terms)
}

/// Sum of the per-anchor terms over every anchor that has a positive.
pub fn supcon_loss(batch: &EmbeddingBatch, params: &SupConParams) -> Result<f64, LossError> {
    let terms = supcon_anchor_terms(batch, params)?;
    let mut any = false;
    let mut total = 0.0;
    for t in terms.into_iter().flatten() {
        any = true;
        total += t;
    }
    if !any {
        return Err(LossError::NoPositives);
    }
    Ok(total)
}
