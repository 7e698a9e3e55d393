//! Trains free embeddings of three Gaussian blobs with each of the six
//! losses, then fits an NNGK classifier and scores it on held-out samples.
//!
//! ```text
//! cargo run --release --example embedding_training
//! ```

use std::time::Instant;

use ensemble_forge::lab::{
    fit_nngk, generate_blobs, mean_inter_class_distance, mean_intra_class_distance, nngk_accuracy,
    stratified_split, train_embeddings, AffineMap, BlobSpec, LossKind, NngkFitConfig,
    SplitFractions, TrainConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // means 5.2 apart on a ring of radius 3, stddev 0.5
    let data = generate_blobs(&BlobSpec::ring(3, 2, 3.0, 0.5, 50, 7))?;
    let [train, _validation, test] = stratified_split(&data, SplitFractions::default(), 7)?;
    println!(
        "initial   intra {:.3}  inter {:.3}",
        mean_intra_class_distance(&train),
        mean_inter_class_distance(&train)
    );

    for loss in LossKind::ALL {
        let start = Instant::now();
        let config = TrainConfig {
            seed: 1,
            ..TrainConfig::new(loss)
        };
        let outcome = train_embeddings(&train, &config)?;
        let embedded = outcome.embeddings;
        let map = AffineMap::fit(&train.vectors(), &embedded.vectors())?;
        let held_out = test.with_vectors(test.vectors().iter().map(|v| map.apply(v)).collect())?;
        let centers = fit_nngk(&embedded, &NngkFitConfig::new(embedded.len(), 1.0))?;
        let acc = nngk_accuracy(&centers, None, &held_out)?;
        println!(
            "{:<12} intra {:.3}  inter {:.3}  loss {:.4} -> {:.4}  held-out NNGK {:.3}  ({:.1?})",
            loss.name(),
            mean_intra_class_distance(&embedded),
            mean_inter_class_distance(&embedded),
            outcome.loss_trace.first().copied().unwrap_or(0.0),
            outcome.loss_trace.last().copied().unwrap_or(0.0),
            acc,
            start.elapsed()
        );
    }
    Ok(())
}
