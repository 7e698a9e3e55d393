use std::thread;

use serde::{Deserialize, Serialize};

use super::{
    fit_nngk, predict_nngk, train_embeddings, AffineMap, LabError, LossKind, NngkFitConfig,
    TrainConfig,
};
use crate::losses::EmbeddingBatch;
use crate::table::{LabelId, PredictionTable};

/// One pool classifier: an embedding space plus the NNGK fitted on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolMember {
    pub name: String,
    pub train: TrainConfig,
    pub nngk: NngkFitConfig,
}

/// One member per loss, named after it.
pub fn default_members(num_centers: usize, bandwidth: f64, seed: u64) -> Vec<PoolMember> {
    LossKind::ALL
        .iter()
        .enumerate()
        .map(|(i, &loss)| PoolMember {
            name: loss.name().to_string(),
            train: TrainConfig {
                seed: seed.wrapping_add(i as u64),
                ..TrainConfig::new(loss)
            },
            nngk: NngkFitConfig {
                seed: seed.wrapping_add(i as u64),
                ..NngkFitConfig::new(num_centers, bandwidth)
            },
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoolTables {
    pub train: PredictionTable,
    pub validation: PredictionTable,
    pub test: PredictionTable,
}

struct MemberPredictions([Vec<LabelId>; 3]);

fn run_member(
    member: &PoolMember,
    splits: [&EmbeddingBatch; 3],
) -> Result<MemberPredictions, LabError> {
    let [train, validation, test] = splits;
    let outcome = train_embeddings(train, &member.train)?;
    let map = AffineMap::fit(&train.vectors(), &outcome.embeddings.vectors())?;
    let project = |batch: &EmbeddingBatch| -> Result<EmbeddingBatch, LabError> {
        Ok(batch.with_vectors(batch.items().iter().map(|i| map.apply(&i.vector)).collect())?)
    };
    let centers = fit_nngk(&outcome.embeddings, &member.nngk)?;
    let k = member.nngk.neighbors;
    Ok(MemberPredictions([
        predict_nngk(&centers, k, &outcome.embeddings)?,
        predict_nngk(&centers, k, &project(validation)?)?,
        predict_nngk(&centers, k, &project(test)?)?,
    ]))
}

/// Trains every member on `train`, carries the learned space over to the
/// other splits, and returns one aligned prediction table per split with
/// sample ids `0..n` in batch order. Members run on separate threads.
pub fn build_pool(
    members: &[PoolMember],
    train: &EmbeddingBatch,
    validation: &EmbeddingBatch,
    test: &EmbeddingBatch,
) -> Result<PoolTables, LabError> {
    if members.is_empty() {
        return Err(LabError::InvalidConfig(
            "a pool needs at least one member".into(),
        ));
    }
    let splits = [train, validation, test];
    let results: Vec<Result<MemberPredictions, LabError>> = thread::scope(|s| {
        let handles: Vec<_> = members
            .iter()
            .map(|m| s.spawn(move || run_member(m, splits)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("pool member thread panicked"))
            .collect()
    });
    let mut per_member = Vec::with_capacity(members.len());
    for r in results {
        per_member.push(r?);
    }

    let num_classes = splits
        .iter()
        .flat_map(|b| b.labels())
        .map(|l| l.index() + 1)
        .max()
        .unwrap_or(1);
    let names: Vec<String> = members.iter().map(|m| m.name.clone()).collect();
    let table = |split: usize| -> Result<PredictionTable, LabError> {
        let batch = splits[split];
        Ok(PredictionTable::new(
            names.clone(),
            (0..batch.len() as u64).collect(),
            batch.labels(),
            per_member.iter().map(|p| p.0[split].clone()).collect(),
            Some(num_classes),
        )?)
    };
    Ok(PoolTables {
        train: table(0)?,
        validation: table(1)?,
        test: table(2)?,
    })
}
