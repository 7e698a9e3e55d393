//! The whole pipeline at desk scale: blobs, a six-loss pool per fold,
//! prediction tables and manifest on disk, diversity, and the MV against
//! UMDA report.
//!
//! ```text
//! cargo run --release --example desk_pipeline [out_dir]
//! ```

use std::path::PathBuf;

use ensemble_forge::experiment::{run_experiment, ReportFormat};
use ensemble_forge::lab::{
    build_pool, default_members, generate_blobs, stratified_split, BlobSpec, SplitFractions,
};
use ensemble_forge::table::FoldEntry;
use ensemble_forge::{diversity_matrix, FoldManifest, Split, UmdaConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ensemble-forge-desk"));
    std::fs::create_dir_all(&out)?;

    let data = generate_blobs(&BlobSpec::ring(4, 2, 2.0, 1.0, 60, 1))?;
    let mut entries = Vec::new();
    for fold in 0..5u32 {
        let seed = 100 + u64::from(fold);
        let [train, validation, test] = stratified_split(&data, SplitFractions::default(), seed)?;
        let mut members = default_members(train.len().min(30), 1.0, seed);
        for m in &mut members {
            m.train.steps = 60;
        }
        let pool = build_pool(&members, &train, &validation, &test)?;
        for (split, table) in [
            (Split::Validation, &pool.validation),
            (Split::Test, &pool.test),
        ] {
            let path = out.join(format!("fold{fold}_{split}.csv"));
            table.save(&path)?;
            entries.push(FoldEntry { fold, split, path });
        }
        if fold == 0 {
            println!(
                "fold 0 test diversity:\n{}",
                diversity_matrix(&pool.test).to_csv()
            );
        }
    }
    let manifest = FoldManifest::new(entries)?;
    std::fs::write(out.join("manifest.json"), manifest.to_json_string())?;

    let report = run_experiment(&manifest, &UmdaConfig::new(6), 5)?;
    print!("{}", report.emit(ReportFormat::Markdown));
    println!("\ntables and manifest in {}", out.display());
    Ok(())
}
