use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CoevoError;

/// Below this a displacement counts as zero for the harmonic mean.
pub const HM_ZERO_GUARD: f64 = 1e-12;

/// Weighted-mean rows, indexed by the number of collaborators.
pub const WM_WEIGHTS: [(usize, &[f64]); 5] = [
    (2, &[0.6, 0.4]),
    (3, &[0.5, 0.3, 0.2]),
    (5, &[0.4, 0.3, 0.15, 0.1, 0.05]),
    (7, &[0.35, 0.25, 0.15, 0.12, 0.07, 0.04, 0.02]),
    (10, &[0.3, 0.2, 0.15, 0.12, 0.08, 0.05, 0.04, 0.03, 0.02, 0.01]),
];

pub fn wm_weights(n: usize) -> Option<&'static [f64]> {
    WM_WEIGHTS.iter().find(|(k, _)| *k == n).map(|(_, w)| *w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AggregationKind {
    AM,
    WM,
    GM,
    HM,
}

impl AggregationKind {
    pub const ALL: [AggregationKind; 4] =
        [AggregationKind::AM, AggregationKind::WM, AggregationKind::GM, AggregationKind::HM];

    pub fn name(self) -> &'static str {
        match self {
            AggregationKind::AM => "AM",
            AggregationKind::WM => "WM",
            AggregationKind::GM => "GM",
            AggregationKind::HM => "HM",
        }
    }
}

impl fmt::Display for AggregationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggregationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AggregationKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown aggregation {s:?} (expected AM, WM, GM or HM)"))
    }
}

pub fn aggregate_am(deltas: &[f64]) -> f64 {
    deltas.iter().sum::<f64>() / deltas.len() as f64
}

/// Sorts `deltas` in descending order and takes the dot product with `weights`.
pub fn aggregate_wm(deltas: &[f64], weights: &[f64]) -> Result<f64, CoevoError> {
    if deltas.len() != weights.len() {
        return Err(CoevoError::WeightArityMismatch { expected: weights.len(), actual: deltas.len() });
    }
    let mut sorted = deltas.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted.iter().zip(weights).map(|(d, w)| d * w).sum())
}

/// Geometric mean in log space; a zero anywhere gives zero.
pub fn aggregate_gm(deltas: &[f64]) -> f64 {
    if deltas.iter().any(|&d| d <= 0.0) {
        return 0.0;
    }
    (deltas.iter().map(|d| d.ln()).sum::<f64>() / deltas.len() as f64).exp()
}

pub fn aggregate_hm(deltas: &[f64]) -> f64 {
    if deltas.iter().any(|&d| d <= HM_ZERO_GUARD) {
        return 0.0;
    }
    deltas.len() as f64 / deltas.iter().map(|d| 1.0 / d).sum::<f64>()
}

/// Applies `kind`, looking up the weight row for WM from `deltas.len()`.
pub fn aggregate(kind: AggregationKind, deltas: &[f64]) -> Result<f64, CoevoError> {
    Ok(match kind {
        AggregationKind::AM => aggregate_am(deltas),
        AggregationKind::WM => {
            let weights = wm_weights(deltas.len()).ok_or(CoevoError::NoWeightRow(deltas.len()))?;
            aggregate_wm(deltas, weights)?
        }
        AggregationKind::GM => aggregate_gm(deltas),
        AggregationKind::HM => aggregate_hm(deltas),
    })
}
