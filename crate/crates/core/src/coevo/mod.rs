//! Two-population cooperative coevolution of SAMs and controllers.

mod aggregate;
mod config;
mod evaluate;
mod run;

use thiserror::Error;

pub use aggregate::{
    aggregate, aggregate_am, aggregate_gm, aggregate_hm, aggregate_wm, wm_weights, AggregationKind,
    HM_ZERO_GUARD, WM_WEIGHTS,
};
pub use config::CoevoConfig;
pub use evaluate::{
    decode_sam, evaluate_population, pair_displacement, select_collaborators, FitnessRecord, Role,
    SimCounter,
};
pub use run::{coevolve, Champion, GenLogRow, PopulationState, RunState, CHECKPOINT_VERSION};

use crate::neat::NeatError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoevoError {
    #[error("expected {expected} displacements for the weight row, got {actual}")]
    WeightArityMismatch { expected: usize, actual: usize },
    #[error("no weighted-mean row for n = {0}")]
    NoWeightRow(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Neat(#[from] NeatError),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
}
