use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabError;
use crate::experiment::FoldTables;
use crate::table::{LabelId, PredictionTable};

/// A block of classifiers whose errors move together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub name: String,
    pub members: usize,
    /// Marginal accuracy of every member.
    pub accuracy: f64,
    /// Probability that a member copies the family's shared outcome on a
    /// sample instead of drawing its own.
    pub correlation: f64,
    /// Wrong answers go to the next class rather than a random one, so
    /// families with this flag also err together.
    pub confusable: bool,
}

/// Prediction tables for a pool made of correlated families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoolSpec {
    pub families: Vec<FamilySpec>,
    pub num_classes: usize,
    pub validation_samples: usize,
    pub test_samples: usize,
    pub seed: u64,
}

impl FamilyPoolSpec {
    /// 24 classifiers in three families of eight: one accurate family with
    /// mildly correlated errors and two weaker families that share both
    /// their errors and their confusions.
    pub fn three_families(seed: u64) -> Self {
        let family = |name: &str, accuracy, correlation, confusable| FamilySpec {
            name: name.to_string(),
            members: 8,
            accuracy,
            correlation,
            confusable,
        };
        Self {
            families: vec![
                family("vgg", 0.80, 0.2, false),
                family("resnet_a", 0.70, 0.9, true),
                family("resnet_b", 0.70, 0.9, true),
            ],
            num_classes: 10,
            validation_samples: 600,
            test_samples: 1800,
            seed,
        }
    }

    fn validate(&self) -> Result<(), LabError> {
        if self.families.is_empty() || self.families.iter().any(|f| f.members == 0) {
            return Err(LabError::InvalidConfig(
                "every family needs at least one member".into(),
            ));
        }
        if self.num_classes < 2 {
            return Err(LabError::InvalidConfig("need at least two classes".into()));
        }
        for f in &self.families {
            if !(0.0..=1.0).contains(&f.accuracy) || !(0.0..=1.0).contains(&f.correlation) {
                return Err(LabError::InvalidConfig(format!(
                    "family `{}`: accuracy and correlation must lie in [0, 1]",
                    f.name
                )));
            }
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, truth: u32, family: &FamilySpec, classes: u32) -> u32 {
    if rng.random::<f64>() < family.accuracy {
        truth
    } else if family.confusable {
        (truth + 1) % classes
    } else {
        (truth + rng.random_range(1..classes)) % classes
    }
}

fn split_table(
    spec: &FamilyPoolSpec,
    rng: &mut ChaCha8Rng,
    samples: usize,
) -> Result<PredictionTable, LabError> {
    let classes = spec.num_classes as u32;
    let names: Vec<String> = spec
        .families
        .iter()
        .flat_map(|f| (0..f.members).map(move |m| format!("{}_{m}", f.name)))
        .collect();
    let mut predictions = vec![Vec::with_capacity(samples); names.len()];
    let mut truth = Vec::with_capacity(samples);
    for _ in 0..samples {
        let t = rng.random_range(0..classes);
        truth.push(LabelId(t));
        let mut row = 0;
        for f in &spec.families {
            let shared = draw(rng, t, f, classes);
            for _ in 0..f.members {
                let p = if rng.random::<f64>() < f.correlation {
                    shared
                } else {
                    draw(rng, t, f, classes)
                };
                predictions[row].push(LabelId(p));
                row += 1;
            }
        }
    }
    Ok(PredictionTable::new(
        names,
        (0..samples as u64).collect(),
        truth,
        predictions,
        Some(spec.num_classes),
    )?)
}

/// Validation and test tables of one fold, seeded by `seed + fold`.
pub fn family_pool(spec: &FamilyPoolSpec, fold: u32) -> Result<FoldTables, LabError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(u64::from(fold)));
    Ok(FoldTables {
        fold,
        validation: split_table(spec, &mut rng, spec.validation_samples)?,
        test: split_table(spec, &mut rng, spec.test_samples)?,
    })
}
