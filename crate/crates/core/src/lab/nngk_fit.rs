use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabError;
use crate::losses::{
    finite_diff_gradient, nngk_neighbor_probs, squared_distance, Center, CenterSet, EmbeddingBatch,
    LossError, MIN_PROBABILITY,
};
use crate::table::LabelId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NngkFitConfig {
    pub num_centers: usize,
    pub bandwidth: f64,
    /// Neighbours used by the classifier; `None` uses every center.
    pub neighbors: Option<usize>,
    pub weight_steps: usize,
    pub learning_rate: f64,
    pub fd_step: f64,
    pub seed: u64,
}

impl NngkFitConfig {
    pub fn new(num_centers: usize, bandwidth: f64) -> Self {
        Self {
            num_centers,
            bandwidth,
            neighbors: None,
            weight_steps: 10,
            learning_rate: 0.5,
            fd_step: 1e-4,
            seed: 0,
        }
    }
}

/// Per-class center quotas: proportional to class size, at least one each.
fn allocate(class_sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = class_sizes.iter().sum();
    let ideal: Vec<f64> = class_sizes
        .iter()
        .map(|&s| total as f64 * s as f64 / n as f64)
        .collect();
    let mut quota: Vec<usize> = ideal
        .iter()
        .zip(class_sizes)
        .map(|(&x, &s)| (x.floor() as usize).clamp(1, s))
        .collect();
    loop {
        let sum: usize = quota.iter().sum();
        if sum == total {
            return quota;
        }
        let deficit = |c: usize| ideal[c] - quota[c] as f64;
        let pick = if sum < total {
            (0..quota.len())
                .filter(|&c| quota[c] < class_sizes[c])
                .max_by(|&a, &b| deficit(a).total_cmp(&deficit(b)).then(b.cmp(&a)))
        } else {
            (0..quota.len())
                .filter(|&c| quota[c] > 1)
                .min_by(|&a, &b| deficit(a).total_cmp(&deficit(b)).then(a.cmp(&b)))
        };
        match pick {
            Some(c) if sum < total => quota[c] += 1,
            Some(c) => quota[c] -= 1,
            None => return quota,
        }
    }
}

/// Neighbour lists of every training example, with kernel values rescaled
/// by the closest neighbour so the ratio never underflows.
struct WeightObjective {
    rows: Vec<Vec<(usize, f64, bool)>>,
}

impl WeightObjective {
    fn new(
        train: &EmbeddingBatch,
        centers: &CenterSet,
        own: &[Option<usize>],
        k: usize,
    ) -> Result<Self, LossError> {
        let scale = 2.0 * centers.bandwidth() * centers.bandwidth();
        let mut rows = Vec::with_capacity(train.len());
        for (item, own) in train.items().iter().zip(own) {
            let mut members: Vec<(usize, f64)> = centers
                .centers()
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != *own)
                .map(|(i, c)| squared_distance(&item.vector, &c.vector).map(|d| (i, d)))
                .collect::<Result<_, _>>()?;
            members.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            members.truncate(k.min(members.len()));
            let nearest = members.first().map(|m| m.1).unwrap_or(0.0);
            rows.push(
                members
                    .into_iter()
                    .map(|(i, d)| {
                        (
                            i,
                            (-(d - nearest) / scale).exp(),
                            centers.centers()[i].label == item.label,
                        )
                    })
                    .collect(),
            );
        }
        Ok(Self { rows })
    }

    /// Mean negative log-probability of the correct class.
    fn value(&self, weights: &[f64]) -> f64 {
        let mut total = 0.0;
        for row in &self.rows {
            let (mut hit, mut all) = (0.0, 0.0);
            for &(i, kernel, same) in row {
                let w = weights[i].max(0.0) * kernel;
                all += w;
                if same {
                    hit += w;
                }
            }
            let p = if all > 0.0 { hit / all } else { 0.0 };
            total -= p.max(MIN_PROBABILITY).ln();
        }
        total / self.rows.len() as f64
    }
}

/// Picks centers class-stratified at random from the training embeddings,
/// then refines their weights by projected gradient descent on the mean
/// NNGK loss, each training example excluding its own center.
pub fn fit_nngk(train: &EmbeddingBatch, config: &NngkFitConfig) -> Result<CenterSet, LabError> {
    let classes = train.classes();
    if config.num_centers < classes.len() {
        return Err(LabError::InsufficientData(format!(
            "{} centers cannot cover {} classes",
            config.num_centers,
            classes.len()
        )));
    }
    if config.num_centers > train.len() {
        return Err(LabError::InsufficientData(format!(
            "{} centers requested from {} training examples",
            config.num_centers,
            train.len()
        )));
    }
    if config.neighbors == Some(0) {
        return Err(LabError::InvalidConfig(
            "neighbors must be at least 1".into(),
        ));
    }

    let members: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| {
            (0..train.len())
                .filter(|&i| train.items()[i].label == c)
                .collect()
        })
        .collect();
    let quotas = allocate(
        &members.iter().map(Vec::len).collect::<Vec<_>>(),
        config.num_centers,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut chosen: Vec<usize> = Vec::with_capacity(config.num_centers);
    for (pool, &q) in members.iter().zip(&quotas) {
        chosen.extend(
            index::sample(&mut rng, pool.len(), q)
                .into_iter()
                .map(|k| pool[k]),
        );
    }
    chosen.sort_unstable();

    let centers = CenterSet::new(
        chosen
            .iter()
            .map(|&i| Center {
                vector: train.items()[i].vector.clone(),
                label: train.items()[i].label,
                weight: 1.0,
            })
            .collect(),
        config.bandwidth,
    )?;
    if config.weight_steps == 0 {
        return Ok(centers);
    }

    let own: Vec<Option<usize>> = (0..train.len())
        .map(|i| chosen.binary_search(&i).ok())
        .collect();
    let k = config.neighbors.unwrap_or(centers.len());
    let objective = WeightObjective::new(train, &centers, &own, k)?;
    let mut weights = vec![centers.weights()];
    for _ in 0..config.weight_steps {
        let grad = finite_diff_gradient(|w| objective.value(&w[0]), &weights, config.fd_step)
            .map_err(|e| match e {
                LossError::NonFiniteValue => LabError::NonFiniteLoss {
                    step: 0,
                    trace: Vec::new(),
                },
                other => other.into(),
            })?;
        for (w, g) in weights[0].iter_mut().zip(&grad[0]) {
            *w = (*w - config.learning_rate * g).max(0.0);
        }
    }
    Ok(centers.with_weights(&weights[0])?)
}

/// Most probable class of every sample under the `k`-neighbour NNGK rule;
/// ties go to the smaller label.
pub fn predict_nngk(
    centers: &CenterSet,
    k: Option<usize>,
    batch: &EmbeddingBatch,
) -> Result<Vec<LabelId>, LossError> {
    let k = k.unwrap_or(centers.len());
    batch
        .items()
        .iter()
        .map(|item| {
            let probs = nngk_neighbor_probs(&item.vector, centers, k, None)?;
            let mut best = 0;
            for (c, &p) in probs.iter().enumerate() {
                if p > probs[best] {
                    best = c;
                }
            }
            Ok(LabelId(best as u32))
        })
        .collect()
}

pub fn nngk_accuracy(
    centers: &CenterSet,
    k: Option<usize>,
    batch: &EmbeddingBatch,
) -> Result<f64, LossError> {
    let predicted = predict_nngk(centers, k, batch)?;
    let hits = predicted
        .iter()
        .zip(batch.labels())
        .filter(|(p, t)| **p == *t)
        .count();
    Ok(hits as f64 / batch.len() as f64)
}
