use serde::{Deserialize, Serialize};

use super::{dot, log_sum_exp, LossError};
use crate::table::LabelId;

/// `K` center vectors per class (class `c` at `centers[c]`), the entropy
/// regularizer `gamma`, the scale `lambda` and the margin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftTripleParams {
    centers: Vec<Vec<Vec<f64>>>,
    pub gamma: f64,
    pub lambda: f64,
    pub margin: f64,
}

impl SoftTripleParams {
    pub const DEFAULT_LAMBDA: f64 = 10.0;
    pub const DEFAULT_GAMMA: f64 = 0.1;
    pub const DEFAULT_MARGIN: f64 = 0.01;
    pub const DEFAULT_CENTERS_PER_CLASS: usize = 2;

    pub fn new(
        centers: Vec<Vec<Vec<f64>>>,
        gamma: f64,
        lambda: f64,
        margin: f64,
    ) -> Result<Self, LossError> {
        for (name, v) in [("gamma", gamma), ("lambda", lambda)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LossError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(LossError::InvalidParameter(format!(
                "margin must be non-negative, got {margin}"
            )));
        }
        let k = centers.first().map(Vec::len).unwrap_or(0);
        if k == 0 {
            return Err(LossError::InvalidParameter(
                "need at least one class with one center".into(),
            ));
        }
        let dim = centers[0][0].len();
        for class in &centers {
            if class.len() != k {
                return Err(LossError::InvalidParameter(format!(
                    "every class needs {k} centers, found {}",
                    class.len()
                )));
            }
            for w in class {
                if w.len() != dim {
                    return Err(LossError::DimensionMismatch {
                        left: dim,
                        right: w.len(),
                    });
                }
            }
        }
        Ok(Self {
            centers,
            gamma,
            lambda,
            margin,
        })
    }

    pub fn with_defaults(centers: Vec<Vec<Vec<f64>>>) -> Result<Self, LossError> {
        Self::new(
            centers,
            Self::DEFAULT_GAMMA,
            Self::DEFAULT_LAMBDA,
            Self::DEFAULT_MARGIN,
        )
    }

    pub fn num_classes(&self) -> usize {
        self.centers.len()
    }

    pub fn centers_per_class(&self) -> usize {
        self.centers[0].len()
    }

    pub fn centers(&self) -> &[Vec<Vec<f64>>] {
        &self.centers
    }

    fn class_centers(&self, q: LabelId) -> Result<&[Vec<f64>], LossError> {
        self.centers
            .get(q.index())
            .map(Vec::as_slice)
            .ok_or(LossError::UnknownClass(q))
    }
}

/// Softmax-smoothed similarity of `x` to class `q`: the average of the
/// inner products `x . W^k` weighted by `softmax(x . W^k / gamma)`.
pub fn softtriple_similarity(
    x: &[f64],
    params: &SoftTripleParams,
    q: LabelId,
) -> Result<f64, LossError> {
    let inner: Vec<f64> = params
        .class_centers(q)?
        .iter()
        .map(|w| dot(x, w))
        .collect::<Result<_, _>>()?;
    let scaled: Vec<f64> = inner.iter().map(|s| s / params.gamma).collect();
    let norm = log_sum_exp(scaled.iter().copied());
    Ok(inner
        .iter()
        .zip(&scaled)
        .map(|(s, z)| (z - norm).exp() * s)
        .sum())
}

/// Margin softmax over the smoothed similarities:
/// `-log(exp(l (S_y - m)) / (exp(l (S_y - m)) + sum_{j != y} exp(l S_j)))`.
pub fn softtriple_loss(x: &[f64], y: LabelId, params: &SoftTripleParams) -> Result<f64, LossError> {
    if y.index() >= params.num_classes() {
        return Err(LossError::UnknownClass(y));
    }
    let logits: Vec<f64> = (0..params.num_classes())
        .map(|j| {
            let s = softtriple_similarity(x, params, LabelId(j as u32))?;
            Ok(if j == y.index() {
                params.lambda * (s - params.margin)
            } else {
                params.lambda * s
            })
        })
        .collect::<Result<_, LossError>>()?;
    Ok(log_sum_exp(logits.iter().copied()) - logits[y.index()])
}
