//! CPPN-NEAT: mutation, crossover, speciation and reproduction.

mod config;
mod operators;
mod population;
mod registry;

use thiserror::Error;

pub use config::EvolutionConfig;
pub use operators::{
    add_connection, add_node, crossover, delete_connection, delete_node, genomic_distance,
    initial_genome, mutate, replace_activation, toggle_connection,
};
pub use population::{largest_remainder, reproduce, speciate, Population, ReproductionReport, Species};
pub use registry::{InnovationRegistry, SplitIds};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NeatError {
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error("genome {0} has no fitness")]
    MissingFitness(usize),
    #[error("population has not been speciated")]
    NotSpeciated,
}
