//! UMDA ensemble selection against majority voting of the whole pool, on
//! five folds of a synthetic 24-classifier pool built from three families
//! with correlated errors.
//!
//! ```text
//! cargo run --release --example ensemble_selection
//! ```

use ensemble_forge::diversity_matrix;
use ensemble_forge::experiment::evaluate_folds;
use ensemble_forge::lab::{family_pool, FamilyPoolSpec};
use ensemble_forge::UmdaConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = FamilyPoolSpec::three_families(2024);
    let folds = (0..5)
        .map(|f| family_pool(&spec, f))
        .collect::<Result<Vec<_>, _>>()?;

    // family blocks show up along the diagonal of the correlation matrix
    let m = diversity_matrix(&folds[0].validation);
    for (name, row) in m.names.iter().zip(&m.scores).step_by(4) {
        let cells: Vec<String> = row.iter().step_by(4).map(|v| format!("{v:5.2}")).collect();
        println!("{name:<11} {}", cells.join(" "));
    }
    println!();

    let mut report = evaluate_folds(&folds, &UmdaConfig::new(24), 7)?;
    report.add_baseline("reference", 0.8737);
    print!("{}", report.to_markdown());
    for f in &report.folds {
        println!(
            "fold {}: UMDA picked {:?}",
            f.fold,
            f.umda_mask.selected_names(&folds[f.fold as usize].test)
        );
    }
    Ok(())
}
