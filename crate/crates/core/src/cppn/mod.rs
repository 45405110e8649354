//! CPPN genomes and their feedforward evaluation.

mod activation;
mod genome;
mod network;

use thiserror::Error;

pub use activation::{evaluate_activation, Activation};
pub use genome::{
    validate_genome, ConnectionGene, Genome, Innovation, NodeGene, NodeId, NodeRole, Violation,
};
pub use network::{check_arity, feed_forward, saturate, topological_order, Cppn, FeedForwardNet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CppnError {
    #[error("enabled connections form a cycle")]
    CycleDetected,
    #[error(
        "arity mismatch: expected {expected_inputs} inputs / {expected_outputs} outputs, \
         got {actual_inputs} inputs / {actual_outputs} outputs"
    )]
    ArityMismatch {
        expected_inputs: usize,
        expected_outputs: usize,
        actual_inputs: usize,
        actual_outputs: usize,
    },
    #[error("connection refers to missing node {0}")]
    MissingNode(NodeId),
}
