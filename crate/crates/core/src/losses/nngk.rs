//! Nearest Neighbour Gaussian Kernels: a weighted Gaussian-kernel vote over
//! class-labelled centers.

use serde::{Deserialize, Serialize};

use super::{check_dims, squared_distance, LossError};
use crate::table::LabelId;

/// Floor applied to a probability before taking its negative log.
pub const MIN_PROBABILITY: f64 = 1e-12;

/// `exp(-||x - c||^2 / (2 phi^2))`.
pub fn gaussian_kernel(x: &[f64], c: &[f64], phi: f64) -> Result<f64, LossError> {
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(LossError::NonPositiveBandwidth(phi));
    }
    let d2 = squared_distance(x, c)?;
    Ok((-d2 / (2.0 * phi * phi)).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub vector: Vec<f64>,
    pub label: LabelId,
    pub weight: f64,
}

/// Kernel centers with one shared bandwidth `phi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterSet {
    centers: Vec<Center>,
    bandwidth: f64,
}

impl CenterSet {
    pub fn new(centers: Vec<Center>, bandwidth: f64) -> Result<Self, LossError> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(LossError::NonPositiveBandwidth(bandwidth));
        }
        let dim = centers.first().ok_or(LossError::EmptyBatch)?.vector.len();
        for c in &centers {
            check_dims(&centers[0].vector, &c.vector)?;
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                return Err(LossError::InvalidParameter(format!(
                    "center weight {} is not >= 0",
                    c.weight
                )));
            }
        }
        if dim == 0 {
            return Err(LossError::InvalidParameter(
                "center dimension must be positive".into(),
            ));
        }
        Ok(Self { centers, bandwidth })
    }

    pub fn centers(&self) -> &[Center] {
        &self.centers
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.centers.iter().map(|c| c.weight).collect()
    }

    /// Copy with replaced weights; negative weights are projected to zero.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self, LossError> {
        if weights.len() != self.centers.len() {
            return Err(LossError::DimensionMismatch {
                left: self.centers.len(),
                right: weights.len(),
            });
        }
        let centers = self
            .centers
            .iter()
            .zip(weights)
            .map(|(c, &w)| Center {
                weight: w.max(0.0),
                ..c.clone()
            })
            .collect();
        Self::new(centers, self.bandwidth)
    }

    /// One more than the largest center label.
    pub fn num_classes(&self) -> usize {
        self.centers
            .iter()
            .map(|c| c.label.index() + 1)
            .max()
            .unwrap_or(0)
    }
}

/// Per-class probability mass from a subset of centers. Kernel values are
/// rescaled by the kernel of the closest positively weighted center, which
/// cancels in the ratio and keeps far-away queries from underflowing.
fn class_distribution(
    x: &[f64],
    set: &CenterSet,
    members: &[(usize, f64)],
) -> Result<Vec<f64>, LossError> {
    let scale = 2.0 * set.bandwidth * set.bandwidth;
    let nearest = members
        .iter()
        .filter(|(i, _)| set.centers[*i].weight > 0.0)
        .map(|(_, d2)| *d2)
        .fold(f64::INFINITY, f64::min);
    if !nearest.is_finite() {
        return Err(LossError::DegenerateDenominator);
    }
    let mut mass = vec![0.0; set.num_classes()];
    for &(i, d2) in members {
        let c = &set.centers[i];
        mass[c.label.index()] += c.weight * (-(d2 - nearest) / scale).exp();
    }
    let total: f64 = mass.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(LossError::DegenerateDenominator);
    }
    debug_assert_eq!(x.len(), set.centers[0].vector.len());
    Ok(mass.into_iter().map(|m| m / total).collect())
}

fn distances(x: &[f64], set: &CenterSet) -> Result<Vec<(usize, f64)>, LossError> {
    set.centers
        .iter()
        .enumerate()
        .map(|(i, c)| squared_distance(x, &c.vector).map(|d| (i, d)))
        .collect()
}

/// Probability of every class `0..num_classes` using all centers.
pub fn nngk_class_probs(x: &[f64], centers: &CenterSet) -> Result<Vec<f64>, LossError> {
    let members = distances(x, centers)?;
    class_distribution(x, centers, &members)
}

/// `sum_{i in Q} w_i f(x, c_i) / sum_j w_j f(x, c_j)`.
pub fn nngk_class_prob(x: &[f64], centers: &CenterSet, q: LabelId) -> Result<f64, LossError> {
    Ok(nngk_class_probs(x, centers)?
        .get(q.index())
        .copied()
        .unwrap_or(0.0))
}

/// Class probabilities restricted to the `k` nearest centers. `exclude`
/// names the query's own center, which is removed before the neighbour
/// search. Distance ties go to the lower center index.
pub fn nngk_neighbor_probs(
    x: &[f64],
    centers: &CenterSet,
    k: usize,
    exclude: Option<usize>,
) -> Result<Vec<f64>, LossError> {
    if k == 0 {
        return Err(LossError::InvalidParameter("k must be at least 1".into()));
    }
    let mut members = distances(x, centers)?;
    if let Some(own) = exclude {
        members.retain(|(i, _)| *i != own);
    }
    if k > members.len() {
        return Err(LossError::InsufficientCenters {
            requested: k,
            available: members.len(),
        });
    }
    members.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    members.truncate(k);
    class_distribution(x, centers, &members)
}

pub fn nngk_neighbor_prob(
    x: &[f64],
    centers: &CenterSet,
    k: usize,
    r: LabelId,
    exclude: Option<usize>,
) -> Result<f64, LossError> {
    Ok(nngk_neighbor_probs(x, centers, k, exclude)?
        .get(r.index())
        .copied()
        .unwrap_or(0.0))
}

/// `-ln(p)`, with `p` floored at [`MIN_PROBABILITY`].
pub fn nngk_loss(prob_correct: f64) -> Result<f64, LossError> {
    if !(0.0..=1.0).contains(&prob_correct) {
        return Err(LossError::InvalidProbability(prob_correct));
    }
    Ok(-prob_correct.max(MIN_PROBABILITY).ln())
}
