use serde::{Deserialize, Serialize};

use super::NeatError;

/// CPPN-NEAT parameters. Defaults reproduce the published rate table; the
/// weight-mutation and crossover settings are the usual NEAT defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    pub compat_threshold: f64,
    pub compat_disjoint_coeff: f64,
    pub compat_weight_coeff: f64,
    pub max_stagnation: u64,
    pub survival_threshold: f64,
    pub activation_mutate_rate: f64,
    pub add_conn_rate: f64,
    pub del_conn_rate: f64,
    pub toggle_conn_rate: f64,
    pub add_node_rate: f64,
    pub del_node_rate: f64,
    pub weight_mutate_rate: f64,
    pub weight_perturb_sigma: f64,
    pub weight_limit: f64,
    pub init_weight_limit: f64,
    pub crossover_rate: f64,
    pub disabled_inherit_rate: f64,
    pub population_size: usize,
    pub elitism: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            compat_threshold: 3.0,
            compat_disjoint_coeff: 1.0,
            compat_weight_coeff: 0.5,
            max_stagnation: 25,
            survival_threshold: 0.6,
            activation_mutate_rate: 0.4,
            add_conn_rate: 0.3,
            del_conn_rate: 0.2,
            toggle_conn_rate: 0.5,
            add_node_rate: 0.3,
            del_node_rate: 0.2,
            weight_mutate_rate: 0.8,
            weight_perturb_sigma: 0.5,
            weight_limit: 8.0,
            init_weight_limit: 3.0,
            crossover_rate: 0.75,
            disabled_inherit_rate: 0.75,
            population_size: 25,
            elitism: 1,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), NeatError> {
        let probabilities = [
            ("survival_threshold", self.survival_threshold),
            ("activation_mutate_rate", self.activation_mutate_rate),
            ("add_conn_rate", self.add_conn_rate),
            ("del_conn_rate", self.del_conn_rate),
            ("toggle_conn_rate", self.toggle_conn_rate),
            ("add_node_rate", self.add_node_rate),
            ("del_node_rate", self.del_node_rate),
            ("weight_mutate_rate", self.weight_mutate_rate),
            ("crossover_rate", self.crossover_rate),
            ("disabled_inherit_rate", self.disabled_inherit_rate),
        ];
        for (name, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(NeatError::InvalidConfig(format!("{name} = {p} is not in [0, 1]")));
            }
        }
        if self.population_size < 2 {
            return Err(NeatError::InvalidConfig("population_size must be at least 2".into()));
        }
        if self.elitism >= self.population_size {
            return Err(NeatError::InvalidConfig("elitism must be below population_size".into()));
        }
        let non_negative = [
            ("compat_threshold", self.compat_threshold),
            ("compat_disjoint_coeff", self.compat_disjoint_coeff),
            ("compat_weight_coeff", self.compat_weight_coeff),
            ("weight_perturb_sigma", self.weight_perturb_sigma),
            ("weight_limit", self.weight_limit),
            ("init_weight_limit", self.init_weight_limit),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(NeatError::InvalidConfig(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        EvolutionConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            EvolutionConfig { add_node_rate: 1.5, ..Default::default() },
            EvolutionConfig { population_size: 1, ..Default::default() },
            EvolutionConfig { elitism: 25, ..Default::default() },
            EvolutionConfig { weight_perturb_sigma: f64::NAN, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: EvolutionConfig = serde_json::from_str(r#"{"population_size": 8}"#).unwrap();
        assert_eq!(cfg.population_size, 8);
        assert_eq!(cfg.compat_threshold, 3.0);
    }
}
