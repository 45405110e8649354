//! Coevolution of soft voxel morphologies and their controllers.

pub mod cppn;
pub mod neat;
pub mod decoder;
pub mod sim;
pub mod coevo;
pub mod robustness;
pub mod experiment;
