#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use ensemble_forge::{EnsembleMask, LabelId, PredictionTable};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn labels(v: &[u32]) -> Vec<LabelId> {
    v.iter().copied().map(LabelId).collect()
}

pub fn table(rows: &[&[u32]], truth: &[u32]) -> PredictionTable {
    PredictionTable::new(
        (0..rows.len()).map(|i| format!("c{i}")).collect(),
        (0..truth.len() as u64).collect(),
        labels(truth),
        rows.iter().map(|r| labels(r)).collect(),
        None,
    )
    .unwrap()
}

/// Table where classifier `i` is right with probability `accuracy[i]`.
pub fn random_table<R: Rng>(
    rng: &mut R,
    accuracy: &[f64],
    n: usize,
    classes: u32,
) -> PredictionTable {
    let truth: Vec<u32> = (0..n).map(|_| rng.random_range(0..classes)).collect();
    let rows: Vec<Vec<u32>> = accuracy
        .iter()
        .map(|&acc| {
            truth
                .iter()
                .map(|&t| {
                    if rng.random::<f64>() < acc {
                        t
                    } else {
                        (t + rng.random_range(1..classes)) % classes
                    }
                })
                .collect()
        })
        .collect();
    PredictionTable::new(
        (0..accuracy.len()).map(|i| format!("m{i}")).collect(),
        (0..n as u64).collect(),
        labels(&truth),
        rows.iter().map(|r| labels(r)).collect(),
        Some(classes as usize),
    )
    .unwrap()
}

/// Hit/miss fractions counted cell by cell.
pub fn brute_relationship(t: &PredictionTable, i: usize, j: usize) -> [f64; 4] {
    let mut cells = [0usize; 4];
    for s in 0..t.len() {
        let hi = t.predictions()[i][s] == t.truth()[s];
        let hj = t.predictions()[j][s] == t.truth()[s];
        let cell = match (hi, hj) {
            (true, true) => 0,
            (false, true) => 1,
            (true, false) => 2,
            (false, false) => 3,
        };
        cells[cell] += 1;
    }
    cells.map(|c| c as f64 / t.len() as f64)
}

pub fn brute_rho([a, b, c, d]: [f64; 4]) -> Option<f64> {
    let den = ((a + b) * (c + d) * (a + c) * (b + d)).sqrt();
    if den == 0.0 {
        None
    } else {
        Some((a * d - b * c) / den)
    }
}

/// Vote winners by explicit tally; ties to the smallest label.
pub fn brute_vote(t: &PredictionTable, mask: &EnsembleMask) -> Vec<u32> {
    (0..t.len())
        .map(|s| {
            let mut tally: HashMap<u32, usize> = HashMap::new();
            for (i, &on) in mask.bits().iter().enumerate() {
                if on {
                    *tally.entry(t.predictions()[i][s].0).or_default() += 1;
                }
            }
            let top = *tally.values().max().unwrap();
            *tally
                .iter()
                .filter(|(_, &c)| c == top)
                .map(|(l, _)| l)
                .min()
                .unwrap()
        })
        .collect()
}

pub fn brute_accuracy(t: &PredictionTable, mask: &EnsembleMask) -> f64 {
    let votes = brute_vote(t, mask);
    votes
        .iter()
        .zip(t.truth())
        .filter(|(v, l)| **v == l.0)
        .count() as f64
        / t.len() as f64
}

/// Best majority-vote accuracy over all non-empty masks.
pub fn exhaustive_optimum(t: &PredictionTable) -> f64 {
    let m = t.num_classifiers();
    (1..1u64 << m)
        .map(|code| brute_accuracy(t, &EnsembleMask::from_index(code, m)))
        .fold(0.0, f64::max)
}

pub mod loss_cases;
