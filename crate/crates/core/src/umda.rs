//! Univariate Marginal Distribution Algorithm over bit-strings.
//!
//! Each generation samples `lambda` individuals bit-by-bit from the current
//! marginal vector, evaluates them, keeps the `mu` fittest and sets every
//! marginal to the frequency of ones among them. Fitness is maximized.
//!
//! The run is fully determined by `(config, fitness)`: sampling uses a
//! ChaCha stream seeded from `config.seed`, draws are made individual-major
//! and bit-minor, and selection ties go to the earlier-sampled individual.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::{ensemble_accuracy, EnsembleMask, FusionError};
use crate::table::PredictionTable;

#[derive(Debug, Error, PartialEq)]
pub enum UmdaError {
    #[error("invalid UMDA configuration: {0}")]
    InvalidConfig(String),
    #[error("{population} individuals but {fitnesses} fitness values")]
    LengthMismatch { population: usize, fitnesses: usize },
    #[error("cannot select {mu} of {lambda} individuals")]
    SelectionTooLarge { mu: usize, lambda: usize },
    #[error("model update needs at least one selected individual")]
    EmptySelection,
    #[error("selected individual has {found} bits, expected {expected}")]
    MaskLength { expected: usize, found: usize },
}

/// Run parameters. Defaults: `lambda = 40`, `mu = 10`, `generations = 100`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UmdaConfig {
    pub n: usize,
    pub lambda: usize,
    pub mu: usize,
    pub generations: usize,
    pub seed: u64,
    /// Keep every marginal inside `[1/n, 1 - 1/n]` after each update.
    pub clamp: bool,
}

impl UmdaConfig {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            lambda: 40,
            mu: 10,
            generations: 100,
            seed: 0,
            clamp: true,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), UmdaError> {
        if self.n == 0 {
            return Err(UmdaError::InvalidConfig("n must be at least 1".into()));
        }
        if self.mu == 0 || self.mu > self.lambda {
            return Err(UmdaError::InvalidConfig(format!(
                "need 1 <= mu <= lambda, got mu = {}, lambda = {}",
                self.mu, self.lambda
            )));
        }
        if self.generations == 0 {
            return Err(UmdaError::InvalidConfig(
                "generations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Marginal bounds used when clamping. For `n = 1` the interval `[1, 0]` is
/// empty, so the bounds collapse to `0.5`.
pub fn marginal_bounds(n: usize) -> (f64, f64) {
    let lo = (1.0 / n as f64).min(0.5);
    (lo, 1.0 - lo)
}

/// The UMDA model: one probability of sampling a one per bit position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    pub p: Vec<f64>,
    pub generation: usize,
}

impl ProbabilityVector {
    /// The uninformative starting model `(0.5, ..., 0.5)`.
    pub fn uniform(n: usize) -> Self {
        Self {
            p: vec![0.5; n],
            generation: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Product-form probability of drawing `x` from this model.
    pub fn probability_of(&self, x: &EnsembleMask) -> f64 {
        self.p
            .iter()
            .zip(x.bits())
            .map(|(&p, &bit)| if bit { p } else { 1.0 - p })
            .product()
    }
}

/// `lambda` independent individuals; bit `i` is one with probability `p[i]`.
pub fn sample_population<R: Rng + ?Sized>(
    model: &ProbabilityVector,
    lambda: usize,
    rng: &mut R,
) -> Vec<EnsembleMask> {
    (0..lambda)
        .map(|_| EnsembleMask::new(model.p.iter().map(|&p| rng.random::<f64>() < p).collect()))
        .collect()
}

/// Indices of the `mu` fittest individuals, best first; equal fitness keeps
/// sampling order.
pub fn select_top_indices(fitnesses: &[f64], mu: usize) -> Result<Vec<usize>, UmdaError> {
    if mu > fitnesses.len() {
        return Err(UmdaError::SelectionTooLarge {
            mu,
            lambda: fitnesses.len(),
        });
    }
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    // stable sort, so ties stay in sampling order
    order.sort_by(|&i, &j| fitnesses[j].total_cmp(&fitnesses[i]));
    order.truncate(mu);
    Ok(order)
}

pub fn select_top(
    population: &[EnsembleMask],
    fitnesses: &[f64],
    mu: usize,
) -> Result<Vec<EnsembleMask>, UmdaError> {
    if population.len() != fitnesses.len() {
        return Err(UmdaError::LengthMismatch {
            population: population.len(),
            fitnesses: fitnesses.len(),
        });
    }
    Ok(select_top_indices(fitnesses, mu)?
        .into_iter()
        .map(|i| population[i].clone())
        .collect())
}

/// Marginal frequencies of ones among `selected`, optionally clamped.
pub fn update_model(
    selected: &[EnsembleMask],
    n: usize,
    clamp: bool,
) -> Result<ProbabilityVector, UmdaError> {
    if selected.is_empty() {
        return Err(UmdaError::EmptySelection);
    }
    let mut ones = vec![0usize; n];
    for mask in selected {
        if mask.len() != n {
            return Err(UmdaError::MaskLength {
                expected: n,
                found: mask.len(),
            });
        }
        for (count, &bit) in ones.iter_mut().zip(mask.bits()) {
            *count += bit as usize;
        }
    }
    let mu = selected.len() as f64;
    let (lo, hi) = marginal_bounds(n);
    let p = ones
        .into_iter()
        .map(|c| {
            let freq = c as f64 / mu;
            if clamp {
                freq.clamp(lo, hi)
            } else {
                freq
            }
        })
        .collect();
    Ok(ProbabilityVector { p, generation: 0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best fitness sampled in this generation.
    pub generation_best: f64,
    pub mean_fitness: f64,
    /// Best fitness seen so far, over all generations.
    pub best_fitness: f64,
    pub best_mask: EnsembleMask,
    /// Model after this generation's update.
    pub probabilities: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub generations: Vec<GenerationRecord>,
    pub best_mask: Option<EnsembleMask>,
    pub best_fitness: f64,
}

impl RunTrace {
    fn empty() -> Self {
        Self {
            generations: Vec::new(),
            best_mask: None,
            best_fitness: f64::NEG_INFINITY,
        }
    }

    /// One JSON object per generation, newline separated.
    pub fn to_json_lines(&self) -> String {
        self.generations
            .iter()
            .map(|g| serde_json::to_string(g).expect("generation records always serialize") + "\n")
            .collect()
    }
}

/// Why a run stopped early. Carries the trace up to the last completed
/// generation.
#[derive(Debug, Error)]
pub enum RunError<E> {
    #[error(transparent)]
    Config(UmdaError),
    #[error("fitness evaluation failed in generation {generation}")]
    Fitness {
        generation: usize,
        #[source]
        source: E,
        partial: RunTrace,
    },
    #[error("fitness returned a non-finite value in generation {generation}")]
    NonFiniteFitness {
        generation: usize,
        partial: RunTrace,
    },
}

impl<E> RunError<E> {
    pub fn partial_trace(&self) -> Option<&RunTrace> {
        match self {
            RunError::Config(_) => None,
            RunError::Fitness { partial, .. } | RunError::NonFiniteFitness { partial, .. } => {
                Some(partial)
            }
        }
    }
}

/// Runs UMDA on an infallible fitness.
pub fn run<F>(
    config: &UmdaConfig,
    mut fitness: F,
) -> Result<RunTrace, RunError<std::convert::Infallible>>
where
    F: FnMut(&EnsembleMask) -> f64,
{
    try_run(config, |m| Ok(fitness(m)))
}

/// Runs UMDA, aborting on the first fitness error.
pub fn try_run<F, E>(config: &UmdaConfig, mut fitness: F) -> Result<RunTrace, RunError<E>>
where
    F: FnMut(&EnsembleMask) -> Result<f64, E>,
{
    config.validate().map_err(RunError::Config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = ProbabilityVector::uniform(config.n);
    let mut trace = RunTrace::empty();

    for generation in 0..config.generations {
        let population = sample_population(&model, config.lambda, &mut rng);
        let mut scores = Vec::with_capacity(population.len());
        for mask in &population {
            match fitness(mask) {
                Ok(v) if v.is_finite() => scores.push(v),
                Ok(_) => {
                    return Err(RunError::NonFiniteFitness {
                        generation,
                        partial: trace,
                    })
                }
                Err(source) => {
                    return Err(RunError::Fitness {
                        generation,
                        source,
                        partial: trace,
                    })
                }
            }
        }

        let top = select_top_indices(&scores, config.mu).map_err(RunError::Config)?;
        let leader = top[0];
        if scores[leader] > trace.best_fitness {
            trace.best_fitness = scores[leader];
            trace.best_mask = Some(population[leader].clone());
        }
        let selected: Vec<EnsembleMask> = top.iter().map(|&i| population[i].clone()).collect();
        model = update_model(&selected, config.n, config.clamp).map_err(RunError::Config)?;
        model.generation = generation + 1;

        trace.generations.push(GenerationRecord {
            generation,
            generation_best: scores[leader],
            mean_fitness: scores.iter().sum::<f64>() / scores.len() as f64,
            best_fitness: trace.best_fitness,
            best_mask: trace
                .best_mask
                .clone()
                .expect("set in the first generation"),
            probabilities: model.p.clone(),
        });
    }
    Ok(trace)
}

/// Fitness for ensemble selection: majority-vote accuracy on a validation
/// table. The all-zeros mask scores `0.0`.
#[derive(Clone, Copy, Debug)]
pub struct EnsembleFitness<'a> {
    validation: &'a PredictionTable,
}

impl<'a> EnsembleFitness<'a> {
    pub fn evaluate(&self, mask: &EnsembleMask) -> Result<f64, FusionError> {
        match ensemble_accuracy(self.validation, mask) {
            Err(FusionError::EmptyEnsemble) => Ok(0.0),
            other => other,
        }
    }

    pub fn table(&self) -> &'a PredictionTable {
        self.validation
    }
}

pub fn ensemble_fitness(validation: &PredictionTable) -> EnsembleFitness<'_> {
    EnsembleFitness { validation }
}

/// Outcome of selecting an ensemble with UMDA on a validation table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub mask: EnsembleMask,
    pub selected: Vec<String>,
    pub validation_fitness: f64,
    pub trace: RunTrace,
}

/// Runs UMDA with `config.n` forced to the pool size of `validation`.
pub fn select_ensemble(
    validation: &PredictionTable,
    config: &UmdaConfig,
) -> Result<Selection, RunError<FusionError>> {
    let config = UmdaConfig {
        n: validation.num_classifiers(),
        ..config.clone()
    };
    let fitness = ensemble_fitness(validation);
    let trace = try_run(&config, |m| fitness.evaluate(m))?;
    let mask = trace
        .best_mask
        .clone()
        .expect("a completed run has a best mask");
    Ok(Selection {
        selected: mask
            .selected_names(validation)
            .into_iter()
            .map(String::from)
            .collect(),
        validation_fitness: trace.best_fitness,
        mask,
        trace,
    })
}
