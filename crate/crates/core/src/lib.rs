//! Ensembles of classifiers selected by UMDA, with the metric-learning loss
//! kernels used to build the pool.
//!
//! * [`table`]: prediction tables and fold manifests
//! * [`diversity`]: hit/miss relationship counts and correlation coefficient
//! * [`fusion`]: majority voting over an [`EnsembleMask`]
//! * [`umda`]: the Univariate Marginal Distribution Algorithm
//! * [`losses`]: contrastive, triplet, NNGK, ProxyAnchor, SoftTriple, SupCon
//! * [`lab`]: blobs, embedding training, NNGK fitting and pool construction
//! * [`experiment`]: fold-by-fold MV vs UMDA evaluation and reports

pub mod diversity;
pub mod experiment;
pub mod fusion;
pub mod lab;
pub mod losses;
pub mod table;
pub mod umda;

pub use diversity::{
    correlation_coefficient, diversity_matrix, relationship, DiversityMatrix, RelationshipCounts,
};
pub use fusion::{ensemble_accuracy, majority_vote, EnsembleMask, FusionError};
pub use table::{FoldManifest, LabelId, PredictionTable, Split, TableError};
pub use umda::{ensemble_fitness, select_ensemble, ProbabilityVector, RunTrace, UmdaConfig};

/// Environment variable holding the default seed of the command-line tool.
pub const SEED_ENV: &str = "ENSEMBLE_FORGE_SEED";
