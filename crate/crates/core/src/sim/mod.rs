//! Mass-spring voxel soft-body simulator.

mod engine;
mod lattice;
mod params;

use thiserror::Error;

pub use engine::{
    check_domain, displacement, displacement_yz, max_displacement_yz, rest_length_at, simulate,
    simulate_displacement, Simulator, Trace, TraceSample, BLOWUP_VOXELS,
};
pub use lattice::{build_lattice, Lattice, LatticeVoxel, Spring, Vec3, DIAGONAL_RATIO, EDGE_COMPLIANCE};
pub use params::{ActuationParams, DisplacementMode, MaterialParams, SimConfig, SimParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("morphology has no voxels")]
    EmptyMorphology,
    #[error("numerical blowup at step {step}")]
    NumericalBlowup { step: usize },
    #[error("time step {dt} exceeds the stability bound {bound}")]
    UnstableTimeStep { dt: f64, bound: f64 },
    #[error("controller does not match the contractile voxels ({missing} missing, {extra} extra)")]
    DomainMismatch { missing: usize, extra: usize },
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
}
