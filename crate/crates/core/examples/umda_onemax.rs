//! UMDA on OneMax with a generic fitness closure, printing the marginals as
//! they move toward all ones.
//!
//! ```text
//! cargo run --example umda_onemax
//! ```

use ensemble_forge::umda::run;
use ensemble_forge::UmdaConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 20;
    let config = UmdaConfig::new(n).with_seed(42);
    let trace = run(&config, |x| x.popcount() as f64 / n as f64)?;

    for rec in trace.generations.iter().step_by(5).take(6) {
        let p: String = rec
            .probabilities
            .iter()
            .map(|&v| char::from(b'0' + (v * 9.0).round() as u8))
            .collect();
        println!(
            "gen {:>3}  best {:.2}  mean {:.3}  p {p}",
            rec.generation, rec.best_fitness, rec.mean_fitness
        );
    }
    let first_hit = trace
        .generations
        .iter()
        .find(|r| r.best_fitness == 1.0)
        .map(|r| r.generation);
    println!(
        "\nbest {} = {:.2}, optimum first reached in generation {first_hit:?}",
        trace.best_mask.as_ref().expect("completed run"),
        trace.best_fitness
    );
    Ok(())
}
