//! Fits an NNGK classifier on raw blob coordinates and compares neighbour
//! counts on held-out samples.
//!
//! ```text
//! cargo run --release --example nngk_classifier
//! ```

use ensemble_forge::lab::{
    fit_nngk, generate_blobs, nngk_accuracy, stratified_split, BlobSpec, NngkFitConfig,
    SplitFractions,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_blobs(&BlobSpec::ring(4, 2, 2.5, 1.0, 120, 3))?;
    let [train, _, test] = stratified_split(&data, SplitFractions::default(), 3)?;

    for centers in [8, 40, train.len()] {
        let config = NngkFitConfig {
            weight_steps: 20,
            seed: 11,
            ..NngkFitConfig::new(centers, 1.0)
        };
        let set = fit_nngk(&train, &config)?;
        let zero = set.weights().iter().filter(|&&w| w == 0.0).count();
        print!("{centers:>3} centers ({zero} pruned to weight 0):");
        for k in [Some(1), Some(5), None] {
            let acc = nngk_accuracy(&set, k, &test)?;
            match k {
                Some(k) => print!("  k={k} {acc:.3}"),
                None => print!("  all {acc:.3}"),
            }
        }
        println!();
    }
    Ok(())
}
