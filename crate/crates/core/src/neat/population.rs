use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::EvolutionConfig;
use super::operators::{crossover, genomic_distance, initial_genome_with_limit, mutate};
use super::registry::InnovationRegistry;
use super::NeatError;
use crate::cppn::Genome;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Species {
    pub id: u64,
    pub representative: Genome,
    /// Indices into `Population::genomes`.
    pub members: Vec<usize>,
    pub best_fitness_ever: f64,
    pub last_improved: u64,
}

impl Species {
    pub fn stagnation(&self, generation: u64) -> u64 {
        generation.saturating_sub(self.last_improved)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Population {
    pub genomes: Vec<Genome>,
    pub species: Vec<Species>,
    pub generation: u64,
    pub registry: InnovationRegistry,
    pub next_species_id: u64,
}

/// What `reproduce` decided, for logging and tests.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReproductionReport {
    pub removed_species: Vec<u64>,
    /// `(species id, offspring count)` for every surviving species.
    pub quotas: Vec<(u64, usize)>,
}

impl Population {
    pub fn new<R: Rng + ?Sized>(
        num_inputs: usize,
        num_outputs: usize,
        cfg: &EvolutionConfig,
        rng: &mut R,
    ) -> Self {
        let genomes = (0..cfg.population_size)
            .map(|_| initial_genome_with_limit(num_inputs, num_outputs, cfg.init_weight_limit, rng))
            .collect();
        Population {
            genomes,
            species: Vec::new(),
            generation: 0,
            registry: InnovationRegistry::new(num_inputs, num_outputs),
            next_species_id: 0,
        }
    }

    pub fn species_of(&self, genome_index: usize) -> Option<u64> {
        self.species
            .iter()
            .find(|s| s.members.contains(&genome_index))
            .map(|s| s.id)
    }

    pub fn best_fitness(&self) -> Option<f64> {
        self.genomes
            .iter()
            .filter_map(|g| g.fitness)
            .fold(None, |acc, f| Some(acc.map_or(f, |a: f64| a.max(f))))
    }
}

fn fitness_of(g: &Genome) -> f64 {
    g.fitness.unwrap_or(0.0)
}

/// Indices sorted by descending fitness, ties by lower index.
fn ranked(genomes: &[Genome], members: &[usize]) -> Vec<usize> {
    let mut order = members.to_vec();
    order.sort_by(|&a, &b| {
        fitness_of(&genomes[b])
            .total_cmp(&fitness_of(&genomes[a]))
            .then(a.cmp(&b))
    });
    order
}

/// Assigns every genome to the first species whose representative is closer
/// than the compatibility threshold, opening a new species otherwise.
/// Afterwards each species' representative becomes the member closest to
/// the previous representative, and stagnation records are updated.
pub fn speciate(pop: &mut Population, cfg: &EvolutionConfig) -> Result<(), NeatError> {
    if let Some(i) = pop.genomes.iter().position(|g| g.fitness.is_none()) {
        return Err(NeatError::MissingFitness(i));
    }
    for s in pop.species.iter_mut() {
        s.members.clear();
    }
    for (idx, genome) in pop.genomes.iter().enumerate() {
        let home = pop
            .species
            .iter()
            .position(|s| genomic_distance(&s.representative, genome, cfg) < cfg.compat_threshold);
        match home {
            Some(si) => pop.species[si].members.push(idx),
            None => {
                pop.species.push(Species {
                    id: pop.next_species_id,
                    representative: genome.clone(),
                    members: vec![idx],
                    best_fitness_ever: f64::NEG_INFINITY,
                    last_improved: pop.generation,
                });
                pop.next_species_id += 1;
            }
        }
    }
    pop.species.retain(|s| !s.members.is_empty());

    let generation = pop.generation;
    for s in pop.species.iter_mut() {
        let closest = s
            .members
            .iter()
            .copied()
            .map(|m| (genomic_distance(&s.representative, &pop.genomes[m], cfg), m))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, m)| m)
            .expect("species has members");
        s.representative = pop.genomes[closest].clone();
        s.representative.fitness = None;

        let best = s
            .members
            .iter()
            .map(|&m| fitness_of(&pop.genomes[m]))
            .fold(f64::NEG_INFINITY, f64::max);
        if best > s.best_fitness_ever {
            s.best_fitness_ever = best;
            s.last_improved = generation;
        }
    }
    Ok(())
}

/// Splits `total` slots proportionally to `weights` by the largest-remainder
/// method; remainders tie toward the earlier entry.
pub fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    if weights.is_empty() {
        return Vec::new();
    }
    let sum: f64 = weights.iter().sum();
    let shares: Vec<f64> = if sum > 0.0 && sum.is_finite() {
        weights.iter().map(|w| w / sum * total as f64).collect()
    } else {
        vec![total as f64 / weights.len() as f64; weights.len()]
    };
    let mut quotas: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        quotas[i] += 1;
    }
    quotas
}

/// Produces the next generation from a speciated, evaluated population.
///
/// Stagnant species are dropped (the best species survives if all are
/// stagnant). Every surviving species first receives up to `elitism` slots,
/// in order of its best member; the remaining slots are split in proportion
/// to the species' mean adjusted fitness. Elites are copied unchanged, the
/// rest are bred from the top `survival_threshold` fraction of each species
/// and mutated. The innovation registry is reset when the generation ends.
pub fn reproduce<R: Rng + ?Sized>(
    pop: &mut Population,
    cfg: &EvolutionConfig,
    rng: &mut R,
) -> Result<ReproductionReport, NeatError> {
    if pop.species.is_empty() {
        return Err(NeatError::NotSpeciated);
    }
    let generation = pop.generation;
    let mut report = ReproductionReport::default();

    let species_best = |s: &Species| {
        s.members
            .iter()
            .map(|&m| fitness_of(&pop.genomes[m]))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut survivors: Vec<Species> = Vec::new();
    let mut stagnant: Vec<Species> = Vec::new();
    for s in pop.species.drain(..) {
        if s.stagnation(generation) > cfg.max_stagnation {
            stagnant.push(s);
        } else {
            survivors.push(s);
        }
    }
    if survivors.is_empty() {
        let keep = (0..stagnant.len())
            .max_by(|&a, &b| {
                species_best(&stagnant[a])
                    .total_cmp(&species_best(&stagnant[b]))
                    .then(stagnant[b].id.cmp(&stagnant[a].id))
            })
            .expect("at least one species");
        survivors.push(stagnant.remove(keep));
    }
    report.removed_species = stagnant.iter().map(|s| s.id).collect();
    survivors.sort_by_key(|s| s.id);

    let total = cfg.population_size;
    let mut reserved = vec![0usize; survivors.len()];
    let mut by_best: Vec<usize> = (0..survivors.len()).collect();
    by_best.sort_by(|&a, &b| {
        species_best(&survivors[b])
            .total_cmp(&species_best(&survivors[a]))
            .then(survivors[a].id.cmp(&survivors[b].id))
    });
    let mut budget = total;
    for &si in &by_best {
        let r = cfg.elitism.min(survivors[si].members.len()).min(budget);
        reserved[si] = r;
        budget -= r;
    }

    let min_fitness = pop
        .genomes
        .iter()
        .map(fitness_of)
        .fold(f64::INFINITY, f64::min);
    let shift = if min_fitness < 0.0 { -min_fitness } else { 0.0 };
    let mut weights: Vec<f64> = survivors
        .iter()
        .map(|s| {
            let size = s.members.len() as f64;
            let mean = s
                .members
                .iter()
                .map(|&m| fitness_of(&pop.genomes[m]) + shift)
                .sum::<f64>()
                / size;
            mean / size
        })
        .collect();
    if weights.iter().sum::<f64>() <= 0.0 {
        weights = survivors.iter().map(|s| s.members.len() as f64).collect();
    }
    let shares = largest_remainder(&weights, budget);

    let mut offspring: Vec<Genome> = Vec::with_capacity(total);
    for (si, s) in survivors.iter().enumerate() {
        let quota = reserved[si] + shares[si];
        report.quotas.push((s.id, quota));
        if quota == 0 {
            continue;
        }
        let order = ranked(&pop.genomes, &s.members);
        let elites = cfg.elitism.min(quota).min(order.len());
        for &m in &order[..elites] {
            let mut g = pop.genomes[m].clone();
            g.fitness = None;
            offspring.push(g);
        }
        let parent_count = ((cfg.survival_threshold * order.len() as f64).ceil() as usize)
            .clamp(1, order.len());
        let parents = &order[..parent_count];
        for _ in elites..quota {
            let mut child = if parents.len() >= 2 && rng.random::<f64>() < cfg.crossover_rate {
                let ia = rng.random_range(0..parents.len());
                let mut ib = rng.random_range(0..parents.len() - 1);
                if ib >= ia {
                    ib += 1;
                }
                let (ga, gb) = (&pop.genomes[parents[ia]], &pop.genomes[parents[ib]]);
                if fitness_of(gb) > fitness_of(ga) {
                    crossover(gb, ga, cfg, rng)
                } else {
                    crossover(ga, gb, cfg, rng)
                }
            } else {
                let p = parents[rng.random_range(0..parents.len())];
                let mut g = pop.genomes[p].clone();
                g.fitness = None;
                g
            };
            mutate(&mut child, cfg, &mut pop.registry, rng);
            offspring.push(child);
        }
    }
    debug_assert_eq!(offspring.len(), total);

    for s in survivors.iter_mut() {
        s.members.clear();
    }
    pop.species = survivors;
    pop.genomes = offspring;
    pop.generation += 1;
    pop.registry.end_generation();
    Ok(report)
}
