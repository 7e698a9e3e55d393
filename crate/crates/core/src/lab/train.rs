use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabError;
use crate::losses::{
    contrastive_loss, finite_diff_gradient, nngk_loss, nngk_neighbor_prob, proxy_anchor_loss,
    softtriple_loss, squared_distance, supcon_anchor_terms, triplet_loss, Center, CenterSet,
    EmbeddingBatch, LossError, ProxySet, SoftTripleParams, SupConParams,
};
use crate::table::LabelId;

/// The six training objectives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Contrastive,
    Triplet,
    Nngk,
    ProxyAnchor,
    SoftTriple,
    SupCon,
}

impl LossKind {
    pub const ALL: [LossKind; 6] = [
        LossKind::Contrastive,
        LossKind::Triplet,
        LossKind::Nngk,
        LossKind::ProxyAnchor,
        LossKind::SoftTriple,
        LossKind::SupCon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Contrastive => "contrastive",
            LossKind::Triplet => "triplet",
            LossKind::Nngk => "nngk",
            LossKind::ProxyAnchor => "proxy_anchor",
            LossKind::SoftTriple => "softtriple",
            LossKind::SupCon => "supcon",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| LabError::InvalidConfig(format!("unknown loss `{s}`")))
    }
}

/// Hyper-parameters of every loss; only those of the chosen loss are read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossParams {
    pub contrastive_margin: f64,
    pub triplet_margin: f64,
    pub nngk_bandwidth: f64,
    pub proxy_alpha: f64,
    pub proxy_margin: f64,
    pub softtriple_lambda: f64,
    pub softtriple_gamma: f64,
    pub softtriple_margin: f64,
    pub softtriple_centers: usize,
    pub supcon_temperature: f64,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            contrastive_margin: 1.0,
            triplet_margin: 1.0,
            nngk_bandwidth: 1.0,
            proxy_alpha: ProxySet::DEFAULT_ALPHA,
            proxy_margin: ProxySet::DEFAULT_MARGIN,
            softtriple_lambda: SoftTripleParams::DEFAULT_LAMBDA,
            softtriple_gamma: SoftTripleParams::DEFAULT_GAMMA,
            softtriple_margin: SoftTripleParams::DEFAULT_MARGIN,
            softtriple_centers: SoftTripleParams::DEFAULT_CENTERS_PER_CLASS,
            supcon_temperature: SupConParams::DEFAULT_TEMPERATURE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub fd_step: f64,
    pub params: LossParams,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(loss: LossKind) -> Self {
        Self {
            loss,
            learning_rate: 0.05,
            steps: 200,
            batch_size: 16,
            fd_step: 1e-4,
            params: LossParams::default(),
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), LabError> {
        if self.steps == 0 {
            return Err(LabError::InvalidConfig("steps must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(LabError::InvalidConfig(
                "batch_size must be at least 2".into(),
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(LabError::InvalidConfig(
                "learning_rate must be non-negative".into(),
            ));
        }
        if !(self.fd_step > 0.0) {
            return Err(LabError::InvalidConfig("fd_step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub embeddings: EmbeddingBatch,
    /// Minibatch objective before each step's update.
    pub loss_trace: Vec<f64>,
    /// Learned auxiliary vectors: one proxy per class for ProxyAnchor,
    /// `K` centers per class (class-major) for SoftTriple, empty otherwise.
    pub auxiliary: Vec<Vec<f64>>,
}

fn class_means(data: &EmbeddingBatch, num_classes: usize) -> Vec<Vec<f64>> {
    let dim = data.dim();
    let mut sums = vec![vec![0.0; dim]; num_classes];
    let mut counts = vec![0usize; num_classes];
    for item in data.items() {
        counts[item.label.index()] += 1;
        for (s, v) in sums[item.label.index()].iter_mut().zip(&item.vector) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

fn initial_auxiliary(
    loss: LossKind,
    params: &LossParams,
    data: &EmbeddingBatch,
    num_classes: usize,
) -> Vec<Vec<f64>> {
    match loss {
        LossKind::ProxyAnchor => class_means(data, num_classes),
        LossKind::SoftTriple => {
            let scale = data
                .items()
                .iter()
                .map(|i| i.vector.iter().map(|v| v * v).sum::<f64>().sqrt())
                .sum::<f64>()
                / data.len() as f64;
            let mut out = Vec::new();
            for mean in class_means(data, num_classes) {
                for k in 0..params.softtriple_centers {
                    // spread the K centers of a class slightly around its mean
                    let mut w = mean.clone();
                    let idx = k % w.len();
                    w[idx] +=
                        0.05 * scale * (k as f64 - (params.softtriple_centers as f64 - 1.0) / 2.0);
                    out.push(w);
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Training objective of one minibatch. Pairwise and per-sample losses are
/// averaged; SupCon is averaged over anchors that have a positive. A
/// minibatch offering no usable pair, triplet or anchor scores zero.
pub fn batch_objective(
    loss: LossKind,
    params: &LossParams,
    vectors: &[Vec<f64>],
    labels: &[LabelId],
    auxiliary: &[Vec<f64>],
) -> Result<f64, LossError> {
    let n = vectors.len();
    match loss {
        LossKind::Contrastive => {
            let mut total = 0.0;
            let mut pairs = 0usize;
            for i in 0..n {
                for j in i + 1..n {
                    total += contrastive_loss(
                        &vectors[i],
                        &vectors[j],
                        labels[i] == labels[j],
                        params.contrastive_margin,
                    )?;
                    pairs += 1;
                }
            }
            Ok(if pairs == 0 {
                0.0
            } else {
                total / pairs as f64
            })
        }
        LossKind::Triplet => {
            let mut total = 0.0;
            let mut count = 0usize;
            for a in 0..n {
                for p in 0..n {
                    if p == a || labels[p] != labels[a] {
                        continue;
                    }
                    for q in 0..n {
                        if labels[q] == labels[a] {
                            continue;
                        }
                        total += triplet_loss(
                            &vectors[a],
                            &vectors[p],
                            &vectors[q],
                            params.triplet_margin,
                        )?;
                        count += 1;
                    }
                }
            }
            Ok(if count == 0 {
                0.0
            } else {
                total / count as f64
            })
        }
        LossKind::Nngk => {
            // every other minibatch member acts as a unit-weight center
            let centers = CenterSet::new(
                vectors
                    .iter()
                    .zip(labels)
                    .map(|(v, &label)| Center {
                        vector: v.clone(),
                        label,
                        weight: 1.0,
                    })
                    .collect(),
                params.nngk_bandwidth,
            )?;
            let mut total = 0.0;
            for i in 0..n {
                let p = nngk_neighbor_prob(&vectors[i], &centers, n - 1, labels[i], Some(i))?;
                total += nngk_loss(p)?;
            }
            Ok(total / n as f64)
        }
        LossKind::ProxyAnchor => {
            let batch = EmbeddingBatch::from_parts(vectors.to_vec(), labels.to_vec())?;
            let proxies = ProxySet::new(
                auxiliary
                    .iter()
                    .enumerate()
                    .map(|(c, v)| (v.clone(), LabelId(c as u32)))
                    .collect(),
                params.proxy_alpha,
                params.proxy_margin,
            )?;
            proxy_anchor_loss(&batch, &proxies)
        }
        LossKind::SoftTriple => {
            let k = params.softtriple_centers;
            let centers: Vec<Vec<Vec<f64>>> = auxiliary.chunks(k).map(|c| c.to_vec()).collect();
            let st = SoftTripleParams::new(
                centers,
                params.softtriple_gamma,
                params.softtriple_lambda,
                params.softtriple_margin,
            )?;
            let mut total = 0.0;
            for (v, &y) in vectors.iter().zip(labels) {
                total += softtriple_loss(v, y, &st)?;
            }
            Ok(total / n as f64)
        }
        LossKind::SupCon => {
            let batch = EmbeddingBatch::from_parts(vectors.to_vec(), labels.to_vec())?;
            let terms: Vec<f64> =
                supcon_anchor_terms(&batch, &SupConParams::new(params.supcon_temperature)?)?
                    .into_iter()
                    .flatten()
                    .collect();
            Ok(if terms.is_empty() {
                0.0
            } else {
                terms.iter().sum::<f64>() / terms.len() as f64
            })
        }
    }
}

/// Gradient descent on free embedding vectors. Each step draws a minibatch,
/// estimates the gradient of [`batch_objective`] by central differences and
/// moves the minibatch members (and any learned proxies or centers).
pub fn train_embeddings(
    data: &EmbeddingBatch,
    config: &TrainConfig,
) -> Result<TrainOutcome, LabError> {
    config.validate()?;
    let labels = data.labels();
    let num_classes = data.classes().last().map(|l| l.index() + 1).unwrap_or(0);
    let mut vectors = data.vectors();
    let mut auxiliary = initial_auxiliary(config.loss, &config.params, data, num_classes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let batch = config.batch_size.min(vectors.len());
    let mut trace = Vec::with_capacity(config.steps);

    for step in 0..config.steps {
        let mut idx = index::sample(&mut rng, vectors.len(), batch).into_vec();
        idx.sort_unstable();
        let mb_labels: Vec<LabelId> = idx.iter().map(|&i| labels[i]).collect();
        let mut points: Vec<Vec<f64>> = idx.iter().map(|&i| vectors[i].clone()).collect();
        points.extend(auxiliary.iter().cloned());

        let objective = |pts: &[Vec<f64>]| {
            batch_objective(
                config.loss,
                &config.params,
                &pts[..batch],
                &mb_labels,
                &pts[batch..],
            )
        };
        let value = objective(&points)?;
        if !value.is_finite() {
            return Err(LabError::NonFiniteLoss { step, trace });
        }
        trace.push(value);

        let grads = match finite_diff_gradient(
            |p| objective(p).unwrap_or(f64::NAN),
            &points,
            config.fd_step,
        ) {
            Ok(g) => g,
            Err(LossError::NonFiniteValue) => return Err(LabError::NonFiniteLoss { step, trace }),
            Err(e) => return Err(e.into()),
        };
        for (slot, g) in grads.iter().enumerate() {
            let target = if slot < batch {
                &mut vectors[idx[slot]]
            } else {
                &mut auxiliary[slot - batch]
            };
            for (x, d) in target.iter_mut().zip(g) {
                *x -= config.learning_rate * d;
            }
            if target.iter().any(|v| !v.is_finite()) {
                return Err(LabError::NonFiniteLoss { step, trace });
            }
        }
    }

    Ok(TrainOutcome {
        embeddings: data.with_vectors(vectors)?,
        loss_trace: trace,
        auxiliary,
    })
}

fn pairwise_mean(data: &EmbeddingBatch, same: bool) -> f64 {
    let items = data.items();
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            if (items[i].label == items[j].label) == same {
                total += squared_distance(&items[i].vector, &items[j].vector)
                    .expect("batch dimensions are uniform")
                    .sqrt();
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Mean Euclidean distance over same-class pairs.
pub fn mean_intra_class_distance(data: &EmbeddingBatch) -> f64 {
    pairwise_mean(data, true)
}

/// Mean Euclidean distance over pairs from different classes.
pub fn mean_inter_class_distance(data: &EmbeddingBatch) -> f64 {
    pairwise_mean(data, false)
}
