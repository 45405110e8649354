//! Random phase-offset batteries for a fixed morphology.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{ControllerMap, Morphology};
use crate::sim::{simulate_displacement, SimError, SimParams};

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScenario {
    pub id: usize,
    pub controller: ControllerMap,
}

/// Draws `count` phase maps, each voxel uniform on `[-2π, 2π]`. Voxels are
/// visited in lexicographic coordinate order so the draws depend only on
/// the seed, the count and the contractile set.
pub fn generate_scenarios(morph: &Morphology, count: usize, seed: u64) -> Vec<PhaseScenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut voxels = morph.contractile_cells();
    voxels.sort();
    (0..count)
        .map(|id| {
            let phases: BTreeMap<_, _> = voxels
                .iter()
                .map(|&c| (c, rng.random_range(-TAU..=TAU)))
                .collect();
            PhaseScenario { id, controller: ControllerMap { phases } }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub blowup_count: usize,
}

/// Linear-interpolation quantile of sorted data (`p` in `[0, 1]`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Middle value, or the mean of the two middle values.
pub fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub fn summarize(deltas: &[f64], blowup_count: usize) -> Summary {
    let mut sorted = deltas.to_vec();
    sorted.sort_by(f64::total_cmp);
    Summary {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: median_sorted(&sorted),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        blowup_count,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub label: String,
    /// One displacement per scenario, in scenario-id order.
    pub deltas: Vec<f64>,
    pub summary: Summary,
}

impl RobustnessReport {
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scenario_id", "delta_yz"])?;
        for (id, d) in self.deltas.iter().enumerate() {
            w.write_record([id.to_string(), d.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("serializable")
    }
}

/// Simulates every scenario; a blowup scores zero and is counted. Other
/// simulator errors abort the battery.
pub fn evaluate_robustness(
    label: &str,
    morph: &Morphology,
    scenarios: &[PhaseScenario],
    params: &SimParams,
) -> Result<RobustnessReport, SimError> {
    assert!(!scenarios.is_empty(), "at least one scenario");
    let mut outcomes: Vec<(usize, Result<f64, SimError>)> = scenarios
        .par_iter()
        .map(|s| (s.id, simulate_displacement(morph, &s.controller, params)))
        .collect();
    outcomes.sort_by_key(|(id, _)| *id);
    let mut deltas = Vec::with_capacity(outcomes.len());
    let mut blowups = 0;
    for (_, outcome) in outcomes {
        match outcome {
            Ok(d) => deltas.push(d),
            Err(SimError::NumericalBlowup { .. }) => {
                blowups += 1;
                deltas.push(0.0);
            }
            Err(e) => return Err(e),
        }
    }
    let summary = summarize(&deltas, blowups);
    Ok(RobustnessReport { label: label.to_string(), deltas, summary })
}
