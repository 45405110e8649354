use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaterialParams {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// Carried for configuration fidelity; there is no contact model.
    pub static_friction: f64,
    pub dynamic_friction: f64,
    pub density: f64,
    pub voxel_size: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            youngs_modulus: 5e6,
            poisson_ratio: 0.35,
            static_friction: 1.0,
            dynamic_friction: 0.5,
            density: 1e6,
            voxel_size: 0.01,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("youngs_modulus", self.youngs_modulus),
            ("density", self.density),
            ("voxel_size", self.voxel_size),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::InvalidParams(format!("{name} must be finite and > 0")));
            }
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(SimError::InvalidParams("poisson_ratio must be in [0, 0.5)".into()));
        }
        if !(self.static_friction >= 0.0 && self.dynamic_friction >= 0.0) {
            return Err(SimError::InvalidParams("friction coefficients must be >= 0".into()));
        }
        Ok(())
    }

    pub fn voxel_mass(&self) -> f64 {
        self.density * self.voxel_size.powi(3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActuationParams {
    /// Peak fractional change of voxel volume.
    pub volumetric_amplitude: f64,
    /// Hz.
    pub frequency: f64,
}

impl Default for ActuationParams {
    fn default() -> Self {
        ActuationParams { volumetric_amplitude: 0.5, frequency: 4.0 }
    }
}

impl ActuationParams {
    /// Linear strain amplitude giving the volumetric amplitude under
    /// isotropic scaling.
    pub fn linear_amplitude(&self) -> f64 {
        (1.0 + self.volumetric_amplitude).cbrt() - 1.0
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.volumetric_amplitude.is_finite() && self.volumetric_amplitude > -1.0) {
            return Err(SimError::InvalidParams("volumetric_amplitude must be > -1".into()));
        }
        if !(self.frequency.is_finite() && self.frequency >= 0.0) {
            return Err(SimError::InvalidParams("frequency must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisplacementMode {
    /// Distance between the first and last sample.
    #[default]
    Final,
    /// Largest distance of any sample from the first.
    MaxOverTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    /// Per-second velocity damping coefficient.
    pub damping: f64,
    pub gravity: [f64; 3],
    pub record_every: usize,
    pub displacement_mode: DisplacementMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-4,
            duration: 1.0,
            damping: 2.0,
            gravity: [0.0; 3],
            record_every: 100,
            displacement_mode: DisplacementMode::Final,
        }
    }
}

impl SimConfig {
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn sample_count(&self) -> usize {
        self.steps() / self.record_every + 1
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SimError::InvalidParams("dt must be finite and > 0".into()));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(SimError::InvalidParams("duration must be finite and >= 0".into()));
        }
        if !(self.damping.is_finite() && self.damping >= 0.0 && self.damping * self.dt < 1.0) {
            return Err(SimError::InvalidParams("damping must satisfy 0 <= damping*dt < 1".into()));
        }
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return Err(SimError::InvalidParams("gravity must be finite".into()));
        }
        if self.record_every == 0 {
            return Err(SimError::InvalidParams("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Everything a simulation needs besides the body and its controller.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub material: MaterialParams,
    pub actuation: ActuationParams,
    pub sim: SimConfig,
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        self.material.validate()?;
        self.actuation.validate()?;
        self.sim.validate()
    }
}
