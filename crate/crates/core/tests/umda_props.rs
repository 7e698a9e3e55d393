mod common;

use common::{exhaustive_optimum, random_table, table};
use ensemble_forge::umda::{
    marginal_bounds, run, sample_population, select_top, select_top_indices, try_run, update_model,
    RunError,
};
use ensemble_forge::{
    ensemble_accuracy, ensemble_fitness, select_ensemble, EnsembleMask, ProbabilityVector,
    UmdaConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn masks(rows: &[&str]) -> Vec<EnsembleMask> {
    rows.iter().map(|r| r.parse().unwrap()).collect()
}

#[test]
fn fixed_marginals_sample_a_fixed_string() {
    let model = ProbabilityVector {
        p: vec![1.0, 0.0, 1.0],
        generation: 0,
    };
    let pop = sample_population(&model, 50, &mut ChaCha8Rng::seed_from_u64(1));
    assert!(pop.iter().all(|x| x.to_string() == "101"));
}

#[test]
fn per_bit_frequencies_are_binomial() {
    let pop = sample_population(
        &ProbabilityVector::uniform(8),
        10_000,
        &mut ChaCha8Rng::seed_from_u64(2),
    );
    let sigma = (10_000.0f64 * 0.25).sqrt();
    for i in 0..8 {
        let ones = pop.iter().filter(|x| x.bits()[i]).count() as f64;
        assert!((ones - 5000.0).abs() <= 3.0 * sigma, "bit {i}: {ones}");
    }
}

#[test]
fn joint_frequencies_follow_product_law() {
    let model = ProbabilityVector {
        p: vec![0.2, 0.5, 0.7],
        generation: 0,
    };
    let samples = 10_000usize;
    let pop = sample_population(&model, samples, &mut ChaCha8Rng::seed_from_u64(3));
    let mut counts = [0usize; 8];
    for x in &pop {
        counts[x
            .bits()
            .iter()
            .enumerate()
            .map(|(i, &b)| (b as usize) << i)
            .sum::<usize>()] += 1;
    }
    let mut chi2 = 0.0;
    for (code, &observed) in counts.iter().enumerate() {
        let p = model.probability_of(&EnsembleMask::from_index(code as u64, 3));
        let expected = p * samples as f64;
        let sigma = (samples as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (observed as f64 - expected).abs() <= 3.0 * sigma,
            "cell {code}"
        );
        chi2 += (observed as f64 - expected).powi(2) / expected;
    }
    let critical = ChiSquared::new(7.0).unwrap().inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}

#[test]
fn selection_examples() {
    let pop = masks(&["00", "01", "10"]);
    assert_eq!(
        select_top(&pop, &[0.1, 0.9, 0.5], 1).unwrap(),
        masks(&["01"])
    );
    assert_eq!(
        select_top(&pop, &[0.5, 0.5, 0.5], 2).unwrap(),
        masks(&["00", "01"])
    );
    assert!(select_top(&pop, &[0.5], 1).is_err());
}

#[test]
fn update_examples() {
    let p = update_model(&masks(&["1011", "1101"]), 4, true).unwrap();
    assert_eq!(p.p, vec![0.75, 0.5, 0.5, 0.75]);
    let raw = update_model(&masks(&["1011", "1101"]), 4, false).unwrap();
    assert_eq!(raw.p, vec![1.0, 0.5, 0.5, 1.0]);
    let single = update_model(&masks(&["0110"]), 4, false).unwrap();
    assert_eq!(single.p, vec![0.0, 1.0, 1.0, 0.0]);
    let same = update_model(&masks(&["1100110011"; 5]), 10, true).unwrap();
    assert!(same.p.iter().all(|&v| v == 0.1 || v == 0.9));
    assert!(update_model(&[], 4, true).is_err());
    assert_eq!(marginal_bounds(4), (0.25, 0.75));
}

#[test]
fn onemax_is_solved() {
    let n = 20;
    let trace = run(&UmdaConfig::new(n).with_seed(7), |x| {
        x.popcount() as f64 / n as f64
    })
    .unwrap();
    assert_eq!(trace.best_fitness, 1.0);
    assert_eq!(trace.best_mask.unwrap(), EnsembleMask::full(n));
}

#[test]
fn constant_fitness_keeps_first_sample() {
    let config = UmdaConfig::new(6).with_seed(11);
    let trace = run(&config, |_| 0.5).unwrap();
    let first = sample_population(
        &ProbabilityVector::uniform(6),
        1,
        &mut ChaCha8Rng::seed_from_u64(11),
    );
    assert_eq!(trace.best_mask.unwrap(), first[0]);
}

#[test]
fn runs_are_deterministic() {
    let t = random_table(&mut ChaCha8Rng::seed_from_u64(4), &[0.6; 8], 100, 4);
    let f = ensemble_fitness(&t);
    let config = UmdaConfig::new(8).with_seed(99);
    let a = try_run(&config, |m| f.evaluate(m)).unwrap();
    let b = try_run(&config, |m| f.evaluate(m)).unwrap();
    assert_eq!(a.to_json_lines(), b.to_json_lines());
}

#[test]
fn failing_fitness_keeps_partial_trace() {
    let mut calls = 0;
    let config = UmdaConfig::new(4);
    let err = try_run(&config, |_| {
        calls += 1;
        if calls > 2 * config.lambda {
            Err(std::fmt::Error)
        } else {
            Ok(1.0)
        }
    })
    .unwrap_err();
    assert!(matches!(err, RunError::Fitness { generation: 2, .. }));
    assert_eq!(err.partial_trace().unwrap().generations.len(), 2);
    assert!(matches!(
        run(&config, |_| f64::NAN),
        Err(RunError::NonFiniteFitness { generation: 0, .. })
    ));
}

#[test]
fn fitness_wrapper() {
    let t = table(
        &[&[0, 1, 1, 0], &[0, 1, 0, 1], &[1, 1, 0, 0]],
        &[0, 1, 0, 0],
    );
    let f = ensemble_fitness(&t);
    assert_eq!(f.evaluate(&EnsembleMask::empty(3)).unwrap(), 0.0);
    assert_eq!(
        f.evaluate(&EnsembleMask::full(3)).unwrap(),
        ensemble_accuracy(&t, &EnsembleMask::full(3)).unwrap()
    );
    for i in 0..3 {
        assert_eq!(
            f.evaluate(&EnsembleMask::singleton(3, i)).unwrap(),
            t.classifier_accuracy(i).unwrap()
        );
    }
}

#[test]
fn matches_exhaustive_search_on_ten_classifiers() {
    let mut hits = 0;
    for inst in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + inst);
        let acc: Vec<f64> = (0..10).map(|_| rng.random_range(0.35..0.8)).collect();
        let t = random_table(&mut rng, &acc, 150, 4);
        let sel = select_ensemble(&t, &UmdaConfig::new(10).with_seed(inst)).unwrap();
        if sel.validation_fitness == exhaustive_optimum(&t) {
            hits += 1;
        }
    }
    assert!(hits >= 19, "{hits}/20");
}

proptest! {
    #[test]
    fn selection_agrees_with_sort(fit in prop::collection::vec(0u8..5, 20), mu in 1usize..=20) {
        let fit: Vec<f64> = fit.into_iter().map(f64::from).collect();
        let mut keyed: Vec<(f64, usize)> = fit.iter().copied().zip(0..).collect();
        keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let expect: Vec<usize> = keyed.iter().take(mu).map(|k| k.1).collect();
        prop_assert_eq!(select_top_indices(&fit, mu).unwrap(), expect);
    }

    #[test]
    fn trace_invariants(seed in any::<u64>(), n in 2usize..10) {
        let config = UmdaConfig { generations: 15, ..UmdaConfig::new(n).with_seed(seed) };
        let weights: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 5) as f64 - 2.0).collect();
        let trace = run(&config, |x| x.bits().iter().zip(&weights).map(|(&b, w)| if b { *w } else { 0.0 }).sum()).unwrap();
        let (lo, hi) = marginal_bounds(n);
        let mut last = f64::NEG_INFINITY;
        for g in &trace.generations {
            prop_assert!(g.probabilities.iter().all(|&p| p >= lo && p <= hi && p > 0.0 && p < 1.0));
            prop_assert!(g.best_fitness >= last);
            prop_assert!(g.best_fitness >= g.generation_best);
            last = g.best_fitness;
        }
        prop_assert_eq!(trace.best_fitness, last);
    }
}
