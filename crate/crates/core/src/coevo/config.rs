use serde::{Deserialize, Serialize};

use super::aggregate::{wm_weights, AggregationKind};
use super::CoevoError;
use crate::decoder::{connectivity_filter, Cell, Dims, VoxelGrid};
use crate::neat::EvolutionConfig;
use crate::sim::{build_lattice, ActuationParams, MaterialParams, SimConfig, SimParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoevoConfig {
    /// Individuals per population; overrides `population_size` of both
    /// evolution configs.
    pub pop_size: usize,
    /// Total evolving generations, alternating SAMs (even) and controllers (odd).
    pub generations: usize,
    pub n_collaborators: usize,
    pub aggregation: AggregationKind,
    pub canvas: Dims,
    pub enclosure: bool,
    pub sam_evo: EvolutionConfig,
    pub ctrl_evo: EvolutionConfig,
    pub material: MaterialParams,
    pub actuation: ActuationParams,
    pub sim: SimConfig,
    pub seed: u64,
}

impl Default for CoevoConfig {
    fn default() -> Self {
        CoevoConfig {
            pop_size: 25,
            generations: 200,
            n_collaborators: 2,
            aggregation: AggregationKind::WM,
            canvas: Dims::default(),
            enclosure: true,
            sam_evo: EvolutionConfig::default(),
            ctrl_evo: EvolutionConfig::default(),
            material: MaterialParams::default(),
            actuation: ActuationParams::default(),
            sim: SimConfig::default(),
            seed: 0,
        }
    }
}

impl CoevoConfig {
    /// Copy with both populations sized to `pop_size`.
    pub fn resolved(&self) -> CoevoConfig {
        let mut cfg = self.clone();
        cfg.sam_evo.population_size = cfg.pop_size;
        cfg.ctrl_evo.population_size = cfg.pop_size;
        cfg
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams { material: self.material.clone(), actuation: self.actuation.clone(), sim: self.sim.clone() }
    }

    pub fn validate(&self) -> Result<(), CoevoError> {
        let cfg = self.resolved();
        let invalid = |m: String| Err(CoevoError::InvalidConfig(m));
        if cfg.n_collaborators == 0 || cfg.n_collaborators > cfg.pop_size {
            return invalid(format!(
                "n_collaborators = {} must be in 1..={}",
                cfg.n_collaborators, cfg.pop_size
            ));
        }
        if cfg.aggregation == AggregationKind::WM && wm_weights(cfg.n_collaborators).is_none() {
            return invalid(format!("WM has no weight row for n = {}", cfg.n_collaborators));
        }
        if cfg.canvas.is_empty() {
            return invalid("canvas must have at least one voxel".into());
        }
        cfg.sam_evo.validate().map_err(|e| CoevoError::InvalidConfig(format!("sam_evo: {e}")))?;
        cfg.ctrl_evo.validate().map_err(|e| CoevoError::InvalidConfig(format!("ctrl_evo: {e}")))?;
        let params = cfg.sim_params();
        params.validate().map_err(|e| CoevoError::InvalidConfig(e.to_string()))?;
        // the full canvas has the heaviest springs and the lightest corners
        let full = connectivity_filter(VoxelGrid::filled(cfg.canvas, Cell::Passive)).expect("non-empty canvas");
        let bound = build_lattice(&full, &params.material)
            .expect("non-empty canvas")
            .stable_dt();
        if params.sim.dt > bound {
            return invalid(format!(
                "sim.dt = {} exceeds the stability bound {bound:.3e} for this material",
                params.sim.dt
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        CoevoConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_inconsistent_settings() {
        let too_many = CoevoConfig { n_collaborators: 30, ..Default::default() };
        assert!(too_many.validate().is_err());
        let no_row = CoevoConfig { n_collaborators: 4, ..Default::default() };
        assert!(no_row.validate().is_err());
        let am_four = CoevoConfig { n_collaborators: 4, aggregation: AggregationKind::AM, ..Default::default() };
        am_four.validate().unwrap();
        let mut light = CoevoConfig::default();
        light.material.density = 1000.0;
        assert!(light.validate().is_err());
    }

    #[test]
    fn pop_size_propagates() {
        let cfg = CoevoConfig { pop_size: 8, ..Default::default() }.resolved();
        assert_eq!(cfg.sam_evo.population_size, 8);
        assert_eq!(cfg.ctrl_evo.population_size, 8);
    }
}
