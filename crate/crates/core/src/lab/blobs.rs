use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::LabError;
use crate::losses::{EmbeddingBatch, LabeledEmbedding};
use crate::table::LabelId;

/// Isotropic Gaussian blobs, one per class mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub class_means: Vec<Vec<f64>>,
    pub stddev: f64,
    pub samples_per_class: usize,
    pub seed: u64,
}

impl BlobSpec {
    /// `classes` means evenly spaced on a circle of `radius` in the first
    /// two coordinates of a `dim`-dimensional space.
    pub fn ring(
        classes: usize,
        dim: usize,
        radius: f64,
        stddev: f64,
        samples_per_class: usize,
        seed: u64,
    ) -> Self {
        let class_means = (0..classes)
            .map(|c| {
                let angle = std::f64::consts::TAU * c as f64 / classes as f64;
                let mut v = vec![0.0; dim.max(2)];
                v[0] = radius * angle.cos();
                v[1] = radius * angle.sin();
                v
            })
            .collect();
        Self {
            class_means,
            stddev,
            samples_per_class,
            seed,
        }
    }
}

/// Samples `samples_per_class` points around every mean, class by class.
pub fn generate_blobs(spec: &BlobSpec) -> Result<EmbeddingBatch, LabError> {
    if spec.class_means.len() < 2 {
        return Err(LabError::InvalidConfig("need at least two classes".into()));
    }
    if spec.samples_per_class == 0 {
        return Err(LabError::InvalidConfig(
            "samples_per_class must be positive".into(),
        ));
    }
    if !(spec.stddev >= 0.0 && spec.stddev.is_finite()) {
        return Err(LabError::InvalidConfig(format!(
            "stddev {} must be non-negative",
            spec.stddev
        )));
    }
    let noise = Normal::new(0.0, spec.stddev)
        .map_err(|e| LabError::InvalidConfig(format!("stddev {}: {e}", spec.stddev)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut items = Vec::with_capacity(spec.class_means.len() * spec.samples_per_class);
    for (class, mean) in spec.class_means.iter().enumerate() {
        for _ in 0..spec.samples_per_class {
            let vector = mean.iter().map(|m| m + noise.sample(&mut rng)).collect();
            items.push(LabeledEmbedding {
                vector,
                label: LabelId(class as u32),
            });
        }
    }
    Ok(EmbeddingBatch::new(items)?)
}

/// Train / validation / test proportions of a split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
}

impl Default for SplitFractions {
    /// 20% train, 20% validation, 60% test.
    fn default() -> Self {
        Self {
            train: 0.2,
            validation: 0.2,
        }
    }
}

/// Shuffles each class independently and cuts it into train, validation
/// and test parts. Every part receives at least one sample of each class.
pub fn stratified_split(
    data: &EmbeddingBatch,
    fractions: SplitFractions,
    seed: u64,
) -> Result<[EmbeddingBatch; 3], LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<LabeledEmbedding>; 3] = Default::default();
    for class in data.classes() {
        let mut members: Vec<&LabeledEmbedding> =
            data.items().iter().filter(|i| i.label == class).collect();
        if members.len() < 3 {
            return Err(LabError::InsufficientData(format!(
                "class {class} has {} samples, a three-way split needs 3",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let n = members.len();
        let n_train = ((n as f64 * fractions.train).round() as usize).clamp(1, n - 2);
        let n_val = ((n as f64 * fractions.validation).round() as usize).clamp(1, n - n_train - 1);
        for (k, item) in members.into_iter().enumerate() {
            let part = if k < n_train {
                0
            } else if k < n_train + n_val {
                1
            } else {
                2
            };
            parts[part].push(item.clone());
        }
    }
    let [train, validation, test] = parts;
    Ok([
        EmbeddingBatch::new(train)?,
        EmbeddingBatch::new(validation)?,
        EmbeddingBatch::new(test)?,
    ])
}
