//! Majority voting over masks of a three-classifier pool whose errors never
//! overlap, so any two of them outvote the third.
//!
//! ```text
//! cargo run --example majority_vote
//! ```

use ensemble_forge::{ensemble_accuracy, majority_vote, EnsembleMask, LabelId, PredictionTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth: Vec<u32> = vec![0, 1, 2, 0, 1, 2, 0, 1, 2];
    let rows: [Vec<u32>; 3] = [
        vec![1, 2, 0, 0, 1, 2, 0, 1, 2],
        vec![0, 1, 2, 1, 2, 0, 0, 1, 2],
        vec![0, 1, 2, 0, 1, 2, 1, 2, 0],
    ];
    let ids = |v: &[u32]| v.iter().copied().map(LabelId).collect::<Vec<_>>();
    let table = PredictionTable::new(
        vec!["a".into(), "b".into(), "c".into()],
        (0..truth.len() as u64).collect(),
        ids(&truth),
        rows.iter().map(|r| ids(r)).collect(),
        None,
    )?;

    for spec in ["100", "110", "111", "a,c"] {
        let mask = EnsembleMask::parse_for(&table, spec)?;
        let votes: Vec<String> = majority_vote(&table, &mask)?
            .iter()
            .map(|l| l.to_string())
            .collect();
        println!(
            "mask {mask} ({spec:>3}) -> [{}] accuracy {:.3}",
            votes.join(" "),
            ensemble_accuracy(&table, &mask)?
        );
    }
    Ok(())
}
