//! Correlation-coefficient diversity of a small prediction table.
//!
//! ```text
//! cargo run --example diversity_matrix
//! ```

use ensemble_forge::{correlation_coefficient, diversity_matrix, relationship, PredictionTable};

const TABLE: &str = "\
sample_id,truth,alpha,beta,gamma
0,0,0,0,1
1,1,1,0,1
2,2,2,2,2
3,0,0,1,0
4,1,1,1,0
5,2,0,2,2
6,0,0,0,0
7,1,2,1,1
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = PredictionTable::from_csv_str(TABLE)?;
    for i in 0..table.num_classifiers() {
        println!(
            "{:<6} accuracy {:.3}",
            table.classifier_names()[i],
            table.classifier_accuracy(i)?
        );
    }

    let rc = relationship(&table, 0, 1)?;
    println!(
        "\nalpha/beta: a={:.3} b={:.3} c={:.3} d={:.3} rho={:.4}",
        rc.a,
        rc.b,
        rc.c,
        rc.d,
        correlation_coefficient(&rc).value
    );

    println!("\n{}", diversity_matrix(&table).to_csv());
    Ok(())
}
