//! A desk-scale embedding lab: synthetic blobs, free-embedding training by
//! finite-difference gradient descent on any of the six losses, NNGK
//! fitting and prediction, and construction of classifier pools whose
//! prediction tables feed the ensemble tools.

mod blobs;
mod extension;
mod families;
mod io;
mod nngk_fit;
mod pool;
mod train;

pub use blobs::{generate_blobs, stratified_split, BlobSpec, SplitFractions};
pub use extension::AffineMap;
pub use families::{family_pool, FamilyPoolSpec, FamilySpec};
pub use io::{embeddings_from_csv, embeddings_to_csv};
pub use nngk_fit::{fit_nngk, nngk_accuracy, predict_nngk, NngkFitConfig};
pub use pool::{build_pool, default_members, PoolMember, PoolTables};
pub use train::{
    batch_objective, mean_inter_class_distance, mean_intra_class_distance, train_embeddings,
    LossKind, LossParams, TrainConfig, TrainOutcome,
};

use thiserror::Error;

use crate::losses::LossError;
use crate::table::TableError;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid lab configuration: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite at step {step}")]
    NonFiniteLoss { step: usize, trace: Vec<f64> },
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Table(#[from] TableError),
}
