use serde::{Deserialize, Serialize};

use super::{check_dims, cosine_similarity, log_sum_exp, EmbeddingBatch, LossError};
use crate::table::LabelId;

/// One proxy per class, plus the loss scale `alpha` and margin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxySet {
    proxies: Vec<(Vec<f64>, LabelId)>,
    pub alpha: f64,
    pub margin: f64,
}

impl ProxySet {
    pub const DEFAULT_ALPHA: f64 = 32.0;
    pub const DEFAULT_MARGIN: f64 = 0.1;

    pub fn new(
        proxies: Vec<(Vec<f64>, LabelId)>,
        alpha: f64,
        margin: f64,
    ) -> Result<Self, LossError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(LossError::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(LossError::InvalidParameter(format!(
                "margin must be non-negative, got {margin}"
            )));
        }
        let first = proxies.first().ok_or(LossError::EmptyBatch)?;
        for (i, (v, label)) in proxies.iter().enumerate() {
            check_dims(&first.0, v)?;
            if proxies[..i].iter().any(|(_, l)| l == label) {
                return Err(LossError::DuplicateProxy(*label));
            }
        }
        Ok(Self {
            proxies,
            alpha,
            margin,
        })
    }

    pub fn with_defaults(proxies: Vec<(Vec<f64>, LabelId)>) -> Result<Self, LossError> {
        Self::new(proxies, Self::DEFAULT_ALPHA, Self::DEFAULT_MARGIN)
    }

    pub fn proxies(&self) -> &[(Vec<f64>, LabelId)] {
        &self.proxies
    }

    pub fn len(&self) -> usize {
        self.proxies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proxies.is_empty()
    }
}

/// ProxyAnchor loss of a batch with cosine similarity.
///
/// ```text
/// 1/|P+| sum_{p in P+} log(1 + sum_{x in X+_p} exp(-alpha (s(x,p) - m)))
///  + 1/|P| sum_{p in P} log(1 + sum_{x in X-_p} exp( alpha (s(x,p) + m)))
/// ```
///
/// `P+` holds the proxies with at least one positive in the batch.
pub fn proxy_anchor_loss(batch: &EmbeddingBatch, proxies: &ProxySet) -> Result<f64, LossError> {
    if batch.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    for item in batch.items() {
        if !proxies.proxies.iter().any(|(_, l)| *l == item.label) {
            return Err(LossError::MissingProxy(item.label));
        }
    }
    let alpha = proxies.alpha;
    let m = proxies.margin;

    let mut positive_sum = 0.0;
    let mut positive_proxies = 0usize;
    let mut negative_sum = 0.0;
    for (proxy, class) in &proxies.proxies {
        let mut pos = vec![0.0];
        let mut neg = vec![0.0];
        for item in batch.items() {
            let s = cosine_similarity(&item.vector, proxy)?;
            if item.label == *class {
                pos.push(-alpha * (s - m));
            } else {
                neg.push(alpha * (s + m));
            }
        }
        if pos.len() > 1 {
            positive_proxies += 1;
            positive_sum += log_sum_exp(pos);
        }
        negative_sum += log_sum_exp(neg);
    }
    Ok(positive_sum / positive_proxies as f64 + negative_sum / proxies.len() as f64)
}
