use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::aggregate;
use super::config::CoevoConfig;
use crate::cppn::Genome;
use crate::decoder::{build_morphology, decode_controller, Morphology};
use crate::sim::{simulate_displacement, SimParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Sam,
    Controller,
}

impl Role {
    pub fn other(self) -> Role {
        match self {
            Role::Sam => Role::Controller,
            Role::Controller => Role::Sam,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Sam => "sam",
            Role::Controller => "controller",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    pub id: usize,
    /// One displacement per collaborator, in collaborator order.
    pub deltas: Vec<f64>,
    pub aptitude: f64,
    /// Collaborator index with the largest displacement (lowest on ties).
    pub best_collaborator: usize,
}

/// Counts simulator invocations across threads.
#[derive(Debug, Default)]
pub struct SimCounter {
    calls: AtomicU64,
    degenerate: AtomicU64,
}

impl SimCounter {
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Calls that produced a zero displacement without a valid simulation.
    pub fn degenerate(&self) -> u64 {
        self.degenerate.load(Ordering::Relaxed)
    }
}

/// Indices of the `n` fittest entries, ties broken by lower index.
pub fn select_collaborators(fitness: &[f64], n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    order.truncate(n);
    order
}

/// Simulates one SAM/controller pair; any degenerate outcome scores zero.
pub fn pair_displacement(
    morph: Option<&Morphology>,
    controller: &Genome,
    params: &SimParams,
    counter: &SimCounter,
) -> f64 {
    counter.calls.fetch_add(1, Ordering::Relaxed);
    let delta = morph.and_then(|m| {
        if m.contractile_cells().is_empty() {
            return None;
        }
        let ctrl = decode_controller(controller, m).ok()?;
        simulate_displacement(m, &ctrl, params).ok()
    });
    match delta {
        Some(d) if d.is_finite() => d,
        _ => {
            counter.degenerate.fetch_add(1, Ordering::Relaxed);
            0.0
        }
    }
}

/// Decodes a SAM genome with the run's canvas settings; `None` if nothing
/// survives decoding.
pub fn decode_sam(genome: &Genome, cfg: &CoevoConfig) -> Option<Morphology> {
    build_morphology(genome, cfg.canvas, cfg.enclosure).ok()
}

/// Pairs every evolving genome with every collaborator and aggregates the
/// displacements. Simulations run in parallel; records come back in id
/// order.
pub fn evaluate_population(
    evolving: &[Genome],
    collaborators: &[Genome],
    role: Role,
    cfg: &CoevoConfig,
    counter: &SimCounter,
) -> Vec<FitnessRecord> {
    let params = cfg.sim_params();
    let sams = match role {
        Role::Sam => evolving,
        Role::Controller => collaborators,
    };
    let morphs: Vec<Option<Morphology>> = sams.par_iter().map(|g| decode_sam(g, cfg)).collect();
    let n = collaborators.len();
    let deltas: Vec<f64> = (0..evolving.len() * n)
        .into_par_iter()
        .map(|p| {
            let (i, c) = (p / n, p % n);
            let (sam, ctrl) = match role {
                Role::Sam => (i, &collaborators[c]),
                Role::Controller => (c, &evolving[i]),
            };
            pair_displacement(morphs[sam].as_ref(), ctrl, &params, counter)
        })
        .collect();
    deltas
        .chunks(n.max(1))
        .take(evolving.len())
        .enumerate()
        .map(|(id, ds)| {
            let aptitude = aggregate(cfg.aggregation, ds).expect("config validated");
            let best_collaborator = (0..ds.len())
                .max_by(|&a, &b| ds[a].total_cmp(&ds[b]).then(b.cmp(&a)))
                .unwrap_or(0);
            FitnessRecord { id, deltas: ds.to_vec(), aptitude, best_collaborator }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collaborators_are_top_n_with_id_ties() {
        assert_eq!(select_collaborators(&[1.0, 5.0, 3.0, 5.0], 2), vec![1, 3]);
        assert_eq!(select_collaborators(&[2.0; 5], 3), vec![0, 1, 2]);
        assert_eq!(select_collaborators(&[0.1, 0.2], 2), vec![1, 0]);
    }

    #[test]
    fn role_names() {
        assert_eq!(Role::Sam.to_string(), "sam");
        assert_eq!(Role::Sam.other(), Role::Controller);
    }
}
