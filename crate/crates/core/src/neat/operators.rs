//! Genome-level NEAT operators: minimal initialization, compatibility
//! distance, mutation and crossover.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::config::EvolutionConfig;
use super::registry::InnovationRegistry;
use crate::cppn::{Activation, ConnectionGene, Genome, NodeGene, NodeId, NodeRole};

fn clamped_normal<R: Rng + ?Sized>(rng: &mut R, limit: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z.clamp(-limit, limit)
}

/// A fully connected genome without hidden nodes.
///
/// Connection `(input i, output o)` gets innovation `i * num_outputs + o` so
/// every initial genome of a population aligns gene for gene.
pub fn initial_genome<R: Rng + ?Sized>(num_inputs: usize, num_outputs: usize, rng: &mut R) -> Genome {
    initial_genome_with_limit(num_inputs, num_outputs, 3.0, rng)
}

pub(crate) fn initial_genome_with_limit<R: Rng + ?Sized>(
    num_inputs: usize,
    num_outputs: usize,
    weight_limit: f64,
    rng: &mut R,
) -> Genome {
    assert!(num_inputs >= 1 && num_outputs >= 1, "a CPPN needs inputs and outputs");
    let mut g = Genome::bare(num_inputs, num_outputs, Activation::Identity);
    for node in g.nodes.iter_mut().filter(|n| n.role == NodeRole::Output) {
        node.activation = Activation::random(rng);
    }
    for i in 0..num_inputs {
        for o in 0..num_outputs {
            g.connections.push(ConnectionGene {
                innovation: (i * num_outputs + o) as u64,
                from: i as NodeId,
                to: (num_inputs + o) as NodeId,
                weight: clamped_normal(rng, weight_limit),
                enabled: true,
            });
        }
    }
    g
}

/// Compatibility distance between two genomes.
///
/// `c_disjoint * (disjoint + excess) / N + c_weight * (mean |dw| + mean |db| +
/// activation mismatch fraction)`, where genes are aligned by innovation
/// number (connections) and node id (non-input nodes), and `N` is the larger
/// gene count.
pub fn genomic_distance(a: &Genome, b: &Genome, cfg: &EvolutionConfig) -> f64 {
    let mut unmatched = 0usize;

    let (mut bias_diff, mut act_mismatch, mut node_matches) = (0.0, 0usize, 0usize);
    let b_nodes: HashMap<NodeId, &NodeGene> = b
        .nodes
        .iter()
        .filter(|n| n.role != NodeRole::Input)
        .map(|n| (n.id, n))
        .collect();
    let mut a_node_count = 0;
    for na in a.nodes.iter().filter(|n| n.role != NodeRole::Input) {
        a_node_count += 1;
        match b_nodes.get(&na.id) {
            Some(nb) => {
                node_matches += 1;
                bias_diff += (na.bias - nb.bias).abs();
                if na.activation != nb.activation {
                    act_mismatch += 1;
                }
            }
            None => unmatched += 1,
        }
    }
    unmatched += b_nodes.len() - node_matches;

    let (mut weight_diff, mut conn_matches) = (0.0, 0usize);
    let b_conns: HashMap<u64, &ConnectionGene> =
        b.connections.iter().map(|c| (c.innovation, c)).collect();
    for ca in &a.connections {
        match b_conns.get(&ca.innovation) {
            Some(cb) => {
                conn_matches += 1;
                weight_diff += (ca.weight - cb.weight).abs();
            }
            None => unmatched += 1,
        }
    }
    unmatched += b.connections.len() - conn_matches;

    let n = (a_node_count + a.connections.len())
        .max(b_nodes.len() + b.connections.len())
        .max(1) as f64;
    let mut attribute = 0.0;
    if conn_matches > 0 {
        attribute += weight_diff / conn_matches as f64;
    }
    if node_matches > 0 {
        attribute += bias_diff / node_matches as f64;
        attribute += act_mismatch as f64 / node_matches as f64;
    }
    cfg.compat_disjoint_coeff * unmatched as f64 / n + cfg.compat_weight_coeff * attribute
}

/// Applies each structural and parametric mutation independently with its
/// configured probability. Inapplicable mutations are skipped.
pub fn mutate<R: Rng + ?Sized>(
    genome: &mut Genome,
    cfg: &EvolutionConfig,
    registry: &mut InnovationRegistry,
    rng: &mut R,
) {
    if rng.random::<f64>() < cfg.add_node_rate {
        add_node(genome, registry, rng);
    }
    if rng.random::<f64>() < cfg.del_node_rate {
        delete_node(genome, rng);
    }
    if rng.random::<f64>() < cfg.add_conn_rate {
        add_connection(genome, cfg, registry, rng);
    }
    if rng.random::<f64>() < cfg.del_conn_rate {
        delete_connection(genome, rng);
    }
    if rng.random::<f64>() < cfg.toggle_conn_rate {
        toggle_connection(genome, rng);
    }
    if rng.random::<f64>() < cfg.activation_mutate_rate {
        replace_activation(genome, rng);
    }
    perturb_parameters(genome, cfg, rng);
}

/// Splits a random enabled connection with a new hidden node.
pub fn add_node<R: Rng + ?Sized>(genome: &mut Genome, registry: &mut InnovationRegistry, rng: &mut R) -> bool {
    let enabled: Vec<usize> = (0..genome.connections.len())
        .filter(|&i| genome.connections[i].enabled)
        .collect();
    if enabled.is_empty() {
        return false;
    }
    let idx = enabled[rng.random_range(0..enabled.len())];
    let (from, to, weight) = {
        let c = &mut genome.connections[idx];
        c.enabled = false;
        (c.from, c.to, c.weight)
    };
    let mut ids = registry.split(from, to);
    if genome.contains_node(ids.node)
        || genome.connection(ids.in_innovation).is_some()
        || genome.connection(ids.out_innovation).is_some()
    {
        ids = registry.fresh_split();
    }
    genome.insert_node(NodeGene {
        id: ids.node,
        role: NodeRole::Hidden,
        activation: Activation::random(rng),
        bias: 0.0,
    });
    genome.insert_connection(ConnectionGene {
        innovation: ids.in_innovation,
        from,
        to: ids.node,
        weight: 1.0,
        enabled: true,
    });
    genome.insert_connection(ConnectionGene {
        innovation: ids.out_innovation,
        from: ids.node,
        to,
        weight,
        enabled: true,
    });
    true
}

pub fn delete_node<R: Rng + ?Sized>(genome: &mut Genome, rng: &mut R) -> bool {
    let hidden: Vec<NodeId> = genome.hidden_ids().collect();
    if hidden.is_empty() {
        return false;
    }
    let victim = hidden[rng.random_range(0..hidden.len())];
    genome.nodes.retain(|n| n.id != victim);
    genome.connections.retain(|c| c.from != victim && c.to != victim);
    true
}

/// Adds a connection between a random unconnected pair that keeps the graph
/// acyclic.
pub fn add_connection<R: Rng + ?Sized>(
    genome: &mut Genome,
    cfg: &EvolutionConfig,
    registry: &mut InnovationRegistry,
    rng: &mut R,
) -> bool {
    let sources: Vec<NodeId> = genome
        .nodes
        .iter()
        .filter(|n| n.role != NodeRole::Output)
        .map(|n| n.id)
        .collect();
    let targets: Vec<NodeId> = genome
        .nodes
        .iter()
        .filter(|n| n.role != NodeRole::Input)
        .map(|n| n.id)
        .collect();
    let mut candidates = Vec::new();
    for &from in &sources {
        for &to in &targets {
            if from != to && !genome.has_connection(from, to) && !genome.would_create_cycle(from, to) {
                candidates.push((from, to));
            }
        }
    }
    if candidates.is_empty() {
        return false;
    }
    let (from, to) = candidates[rng.random_range(0..candidates.len())];
    let innovation = registry.connection_innovation(from, to);
    if genome.connection(innovation).is_some() {
        return false;
    }
    genome.insert_connection(ConnectionGene {
        innovation,
        from,
        to,
        weight: clamped_normal(rng, cfg.init_weight_limit),
        enabled: true,
    });
    true
}

pub fn delete_connection<R: Rng + ?Sized>(genome: &mut Genome, rng: &mut R) -> bool {
    if genome.connections.is_empty() {
        return false;
    }
    let idx = rng.random_range(0..genome.connections.len());
    genome.connections.remove(idx);
    true
}

pub fn toggle_connection<R: Rng + ?Sized>(genome: &mut Genome, rng: &mut R) -> bool {
    if genome.connections.is_empty() {
        return false;
    }
    let idx = rng.random_range(0..genome.connections.len());
    let c = &mut genome.connections[idx];
    c.enabled = !c.enabled;
    true
}

pub fn replace_activation<R: Rng + ?Sized>(genome: &mut Genome, rng: &mut R) -> bool {
    let candidates: Vec<usize> = (0..genome.nodes.len())
        .filter(|&i| genome.nodes[i].role != NodeRole::Input)
        .collect();
    if candidates.is_empty() {
        return false;
    }
    let idx = candidates[rng.random_range(0..candidates.len())];
    genome.nodes[idx].activation = Activation::random(rng);
    true
}

fn perturb_parameters<R: Rng + ?Sized>(genome: &mut Genome, cfg: &EvolutionConfig, rng: &mut R) {
    if cfg.weight_mutate_rate <= 0.0 {
        return;
    }
    let noise = Normal::new(0.0, cfg.weight_perturb_sigma).expect("sigma validated as finite, >= 0");
    let limit = cfg.weight_limit;
    for c in genome.connections.iter_mut() {
        if rng.random::<f64>() < cfg.weight_mutate_rate {
            c.weight = (c.weight + noise.sample(rng)).clamp(-limit, limit);
        }
    }
    for n in genome.nodes.iter_mut().filter(|n| n.role != NodeRole::Input) {
        if rng.random::<f64>() < cfg.weight_mutate_rate {
            n.bias = (n.bias + noise.sample(rng)).clamp(-limit, limit);
        }
    }
}

/// Recombines two parents. `fitter` supplies the structure: its disjoint and
/// excess genes are kept and those of `other` dropped; matching genes take
/// their attributes from either parent at random.
pub fn crossover<R: Rng + ?Sized>(
    fitter: &Genome,
    other: &Genome,
    cfg: &EvolutionConfig,
    rng: &mut R,
) -> Genome {
    let mut child = Genome {
        num_inputs: fitter.num_inputs,
        num_outputs: fitter.num_outputs,
        nodes: Vec::with_capacity(fitter.nodes.len()),
        connections: Vec::with_capacity(fitter.connections.len()),
        fitness: None,
    };

    for n in &fitter.nodes {
        let gene = match other.node(n.id) {
            Some(m) if n.role != NodeRole::Input && rng.random::<bool>() => m.clone(),
            _ => n.clone(),
        };
        child.nodes.push(gene);
    }

    for c in &fitter.connections {
        let matching = other.connection(c.innovation);
        let mut gene = match matching {
            Some(m) if rng.random::<bool>() => m.clone(),
            _ => c.clone(),
        };
        let disabled_somewhere = !c.enabled || matching.is_some_and(|m| !m.enabled);
        if disabled_somewhere {
            gene.enabled = rng.random::<f64>() >= cfg.disabled_inherit_rate;
        }
        if !child.contains_node(gene.from) || !child.contains_node(gene.to) {
            continue;
        }
        if child.has_connection(gene.from, gene.to) || child.would_create_cycle(gene.from, gene.to) {
            continue;
        }
        child.connections.push(gene);
    }
    child
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cppn::{topological_order, validate_genome};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quiet() -> EvolutionConfig {
        EvolutionConfig {
            activation_mutate_rate: 0.0,
            add_conn_rate: 0.0,
            del_conn_rate: 0.0,
            toggle_conn_rate: 0.0,
            add_node_rate: 0.0,
            del_node_rate: 0.0,
            weight_mutate_rate: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn initial_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = initial_genome(3, 2, &mut rng);
        assert_eq!((g.nodes.len(), g.connections.len()), (5, 6));
        assert!(g.connections.iter().all(|c| c.enabled && c.weight.abs() <= 3.0));
        assert!(g.hidden_ids().next().is_none());
        let g = initial_genome(4, 1, &mut rng);
        assert_eq!((g.nodes.len(), g.connections.len()), (5, 4));
        assert!(validate_genome(&g).is_empty());
    }

    #[test]
    fn initial_is_seed_deterministic() {
        let a = initial_genome(3, 2, &mut ChaCha8Rng::seed_from_u64(9));
        let b = initial_genome(3, 2, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn distance_examples() {
        let cfg = EvolutionConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = initial_genome(3, 2, &mut rng);
        assert_eq!(genomic_distance(&g, &g, &cfg), 0.0);

        let mut h = g.clone();
        h.connections[4].weight += 1.0;
        let d = genomic_distance(&g, &h, &cfg);
        assert!((d - 0.5 * (1.0 / 6.0)).abs() < 1e-12, "{d}");
    }

    #[test]
    fn distance_counts_split_genes_as_unmatched() {
        let cfg = EvolutionConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = initial_genome(3, 2, &mut rng);
        let mut h = g.clone();
        let mut reg = InnovationRegistry::new(3, 2);
        assert!(add_node(&mut h, &mut reg, &mut rng));
        // one node + two connections are new; N = 3 + 8 = 11 genes
        let d = genomic_distance(&g, &h, &cfg);
        assert!((d - 3.0 / 11.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn forced_add_node_trace() {
        let cfg = EvolutionConfig { add_node_rate: 1.0, ..quiet() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut g = initial_genome(3, 2, &mut rng);
        let mut reg = InnovationRegistry::new(3, 2);
        mutate(&mut g, &cfg, &mut reg, &mut rng);
        assert_eq!(g.hidden_ids().count(), 1);
        assert_eq!(g.connections.len(), 8);
        let disabled: Vec<_> = g.connections.iter().filter(|c| !c.enabled).collect();
        assert_eq!(disabled.len(), 1);
        let split = disabled[0];
        let hidden = g.hidden_ids().next().unwrap();
        let into = g.connections.iter().find(|c| c.to == hidden).unwrap();
        let out = g.connections.iter().find(|c| c.from == hidden).unwrap();
        assert_eq!((into.from, into.weight), (split.from, 1.0));
        assert_eq!((out.to, out.weight), (split.to, split.weight));
    }

    #[test]
    fn no_events_leaves_genome_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = initial_genome(3, 2, &mut rng);
        let mut h = g.clone();
        let mut reg = InnovationRegistry::new(3, 2);
        for _ in 0..20 {
            mutate(&mut h, &quiet(), &mut reg, &mut rng);
        }
        assert_eq!(g, h);
    }

    #[test]
    fn identical_add_connection_shares_innovation() {
        let cfg = EvolutionConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let base = initial_genome(2, 1, &mut rng);
        let mut reg = InnovationRegistry::new(2, 1);
        let mut a = base.clone();
        add_node(&mut a, &mut reg, &mut rng);
        let mut b = a.clone();
        // the only missing edge in both is input -> hidden for the other input
        assert!(add_connection(&mut a, &cfg, &mut reg, &mut rng));
        assert!(add_connection(&mut b, &cfg, &mut reg, &mut rng));
        let new_a = a.connections.iter().max_by_key(|c| c.innovation).unwrap();
        let new_b = b.connections.iter().max_by_key(|c| c.innovation).unwrap();
        assert_eq!((new_a.from, new_a.to), (new_b.from, new_b.to));
        assert_eq!(new_a.innovation, new_b.innovation);
    }

    #[test]
    fn crossover_with_self_is_structural_clone() {
        let cfg = EvolutionConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut g = initial_genome(3, 2, &mut rng);
        let mut reg = InnovationRegistry::new(3, 2);
        for _ in 0..10 {
            mutate(&mut g, &cfg, &mut reg, &mut rng);
        }
        g.connections.iter_mut().for_each(|c| c.enabled = true);
        let child = crossover(&g, &g, &cfg, &mut rng);
        assert_eq!(child.nodes, g.nodes);
        assert_eq!(child.connections, g.connections);
    }

    #[test]
    fn crossover_keeps_fitter_excess_node() {
        let cfg = EvolutionConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let other = initial_genome(3, 2, &mut rng);
        let mut fitter = other.clone();
        let mut reg = InnovationRegistry::new(3, 2);
        add_node(&mut fitter, &mut reg, &mut rng);
        let hidden = fitter.hidden_ids().next().unwrap();
        for _ in 0..50 {
            let child = crossover(&fitter, &other, &cfg, &mut rng);
            assert!(child.contains_node(hidden));
            assert!(validate_genome(&child).is_empty());
            topological_order(&child).unwrap();
        }
    }

    #[test]
    fn disabled_gene_inheritance_rate() {
        let cfg = EvolutionConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = initial_genome(3, 2, &mut rng);
        let mut b = a.clone();
        b.connections[0].enabled = false;
        let trials = 10_000;
        let disabled = (0..trials)
            .filter(|_| !crossover(&a, &b, &cfg, &mut rng).connections[0].enabled)
            .count();
        let rate = disabled as f64 / trials as f64;
        assert!((rate - 0.75).abs() < 0.02, "{rate}");
    }
}
