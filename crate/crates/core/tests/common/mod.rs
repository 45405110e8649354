#![allow(dead_code)]

use std::collections::HashMap;

use neurocoevo::cppn::{
    evaluate_activation, saturate, Activation, ConnectionGene, Genome, NodeGene, NodeId, NodeRole,
};
use neurocoevo::decoder::{apply_enclosure, connectivity_filter, Cell, Coord, Dims, Morphology, VoxelGrid};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random acyclic genome with at most `max_nodes` nodes. Hidden ids are
/// shuffled so id order says nothing about evaluation order, and some
/// connections are disabled.
pub fn random_acyclic_genome<R: Rng>(rng: &mut R, max_nodes: usize) -> Genome {
    let num_inputs = rng.random_range(1..=4);
    let num_outputs = rng.random_range(1..=3);
    let hidden = rng.random_range(0..=max_nodes - num_inputs - num_outputs);
    let mut g = Genome::bare(num_inputs, num_outputs, Activation::Identity);
    for id in g.output_ids().collect::<Vec<_>>() {
        let node = g.node_mut(id).unwrap();
        node.activation = Activation::ALL[rng.random_range(0..Activation::ALL.len())];
        node.bias = rng.random_range(-3.0..3.0);
    }
    let base = (num_inputs + num_outputs) as NodeId;
    let mut hidden_ids: Vec<NodeId> = (0..hidden as NodeId).map(|h| base + 3 * h + 1).collect();
    hidden_ids.shuffle(rng);
    for &id in &hidden_ids {
        g.insert_node(NodeGene {
            id,
            role: NodeRole::Hidden,
            activation: Activation::ALL[rng.random_range(0..Activation::ALL.len())],
            bias: rng.random_range(-3.0..3.0),
        });
    }

    // rank: inputs, then hidden in shuffled order, then outputs
    let mut ranked: Vec<NodeId> = g.input_ids().collect();
    ranked.extend(&hidden_ids);
    ranked.extend(g.output_ids());
    let mut innovation = 0;
    for (a, &from) in ranked.iter().enumerate() {
        if g.role_of(from) == Some(NodeRole::Output) {
            continue;
        }
        for &to in &ranked[a + 1..] {
            if g.role_of(to) == Some(NodeRole::Input) || !rng.random_bool(0.45) {
                continue;
            }
            g.insert_connection(ConnectionGene {
                innovation,
                from,
                to,
                weight: rng.random_range(-4.0..4.0),
                enabled: rng.random_bool(0.85),
            });
            innovation += 1;
        }
    }
    g
}

/// Evaluates `genome` by recursion from each output, memoising node values.
/// Incoming terms are summed in innovation order.
pub fn recursive_eval(genome: &Genome, inputs: &[f64]) -> Vec<f64> {
    fn value(genome: &Genome, id: NodeId, inputs: &[f64], memo: &mut HashMap<NodeId, f64>) -> f64 {
        if let Some(&v) = memo.get(&id) {
            return v;
        }
        let node = genome.node(id).expect("node exists");
        let v = if node.role == NodeRole::Input {
            inputs[id as usize]
        } else {
            let mut sum = node.bias;
            for c in genome.connections.iter().filter(|c| c.enabled && c.to == id) {
                sum += c.weight * value(genome, c.from, inputs, memo);
            }
            saturate(evaluate_activation(node.activation, saturate(sum)))
        };
        memo.insert(id, v);
        v
    }
    let mut memo = HashMap::new();
    genome
        .output_ids()
        .map(|o| value(genome, o, inputs, &mut memo))
        .collect()
}

/// Enclosed canvas with the given interior cells made contractile.
pub fn enclosed_body(dims: Dims, contractile: &[Coord]) -> Morphology {
    let mut grid = apply_enclosure(VoxelGrid::empty(dims));
    for &c in contractile {
        grid.set(c, Cell::Contractile);
    }
    connectivity_filter(grid).expect("shell is connected")
}

pub fn single_voxel(cell: Cell) -> Morphology {
    let mut grid = VoxelGrid::empty(Dims::new(1, 1, 1));
    grid.set((0, 0, 0), cell);
    connectivity_filter(grid).expect("one voxel")
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}
