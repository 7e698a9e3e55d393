//! Majority-vote fusion over a selected subset of the pool.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::{LabelId, PredictionTable};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FusionError {
    #[error("ensemble mask selects no classifier")]
    EmptyEnsemble,
    #[error("mask has {mask} bits but the pool has {pool} classifiers")]
    MaskLengthMismatch { mask: usize, pool: usize },
    #[error("invalid mask `{0}`")]
    InvalidMask(String),
    #[error("unknown classifier `{0}`")]
    UnknownClassifier(String),
}

/// Bit-string choosing which classifiers of a pool take part in the vote.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct EnsembleMask(Vec<bool>);

impl EnsembleMask {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn full(len: usize) -> Self {
        Self(vec![true; len])
    }

    pub fn empty(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn singleton(len: usize, index: usize) -> Self {
        let mut bits = vec![false; len];
        bits[index] = true;
        Self(bits)
    }

    /// Mask from the low `len` bits of `code`, bit `i` of the mask being bit
    /// `i` of the integer.
    pub fn from_index(code: u64, len: usize) -> Self {
        Self((0..len).map(|i| code >> i & 1 == 1).collect())
    }

    /// Mask selecting the named classifiers of `table`.
    pub fn from_names<S: AsRef<str>>(
        table: &PredictionTable,
        names: &[S],
    ) -> Result<Self, FusionError> {
        let mut bits = vec![false; table.num_classifiers()];
        for name in names {
            let name = name.as_ref();
            let idx = table
                .classifier_index(name)
                .ok_or_else(|| FusionError::UnknownClassifier(name.to_string()))?;
            bits[idx] = true;
        }
        Ok(Self(bits))
    }

    /// Parses `1,0,1` / `101`, or falls back to a comma-separated list of
    /// classifier names.
    pub fn parse_for(table: &PredictionTable, spec: &str) -> Result<Self, FusionError> {
        match spec.parse::<EnsembleMask>() {
            Ok(mask) => Ok(mask),
            Err(_) => {
                let names: Vec<&str> = spec
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .collect();
                Self::from_names(table, &names)
            }
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn popcount(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }

    /// Names of the selected classifiers, in pool order.
    pub fn selected_names<'a>(&self, table: &'a PredictionTable) -> Vec<&'a str> {
        self.selected()
            .filter_map(|i| table.classifier_names().get(i).map(String::as_str))
            .collect()
    }
}

impl fmt::Display for EnsembleMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for EnsembleMask {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits: Result<Vec<bool>, _> = s
            .chars()
            .filter(|c| *c != ',' && !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(FusionError::InvalidMask(s.to_string())),
            })
            .collect();
        match bits {
            Ok(b) if !b.is_empty() => Ok(Self(b)),
            _ => Err(FusionError::InvalidMask(s.to_string())),
        }
    }
}

impl From<EnsembleMask> for String {
    fn from(m: EnsembleMask) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for EnsembleMask {
    type Error = FusionError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

fn check_mask(table: &PredictionTable, mask: &EnsembleMask) -> Result<(), FusionError> {
    if mask.len() != table.num_classifiers() {
        return Err(FusionError::MaskLengthMismatch {
            mask: mask.len(),
            pool: table.num_classifiers(),
        });
    }
    if mask.popcount() == 0 {
        return Err(FusionError::EmptyEnsemble);
    }
    Ok(())
}

/// Label with the most votes among the selected classifiers for every
/// sample. Ties go to the smallest label.
pub fn majority_vote(
    table: &PredictionTable,
    mask: &EnsembleMask,
) -> Result<Vec<LabelId>, FusionError> {
    check_mask(table, mask)?;
    let rows: Vec<&[LabelId]> = mask
        .selected()
        .map(|i| table.predictions()[i].as_slice())
        .collect();
    let mut tally = vec![0u32; table.num_classes()];
    let fused = (0..table.len())
        .map(|j| {
            tally.iter_mut().for_each(|v| *v = 0);
            for row in &rows {
                tally[row[j].index()] += 1;
            }
            // max_by_key keeps the last maximum; scan manually to keep the first
            let mut best = 0;
            for (label, &votes) in tally.iter().enumerate() {
                if votes > tally[best] {
                    best = label;
                }
            }
            LabelId(best as u32)
        })
        .collect();
    Ok(fused)
}

/// Accuracy of the majority vote of `mask` against the table's truth.
pub fn ensemble_accuracy(table: &PredictionTable, mask: &EnsembleMask) -> Result<f64, FusionError> {
    let fused = majority_vote(table, mask)?;
    let hits = fused
        .iter()
        .zip(table.truth())
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / table.len() as f64)
}
