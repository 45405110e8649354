use std::collections::{BTreeSet, HashMap};

use super::activation::Activation;
use super::genome::{Genome, NodeId};
use super::CppnError;

// Node values are kept inside this range so that weighted sums of them can
// never overflow to infinity or produce NaN.
const VALUE_LIMIT: f64 = 1e300;

/// Clamps a node's pre-activation sum into the finite range.
pub fn saturate(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-VALUE_LIMIT, VALUE_LIMIT)
    }
}

/// A queryable spatial function: a compiled CPPN or any stand-in with the
/// same shape.
pub trait Cppn {
    fn num_inputs(&self) -> usize;
    fn num_outputs(&self) -> usize;
    fn query(&self, inputs: &[f64]) -> Result<Vec<f64>, CppnError>;
}

/// Orders node ids so every enabled connection points forward.
///
/// Inputs come first and outputs last, each in id order; hidden nodes are
/// placed by Kahn's algorithm with the lowest ready id taken first.
pub fn topological_order(genome: &Genome) -> Result<Vec<NodeId>, CppnError> {
    let hidden: BTreeSet<NodeId> = genome.hidden_ids().collect();
    let mut indegree: HashMap<NodeId, usize> = hidden.iter().map(|&h| (h, 0)).collect();
    let mut successors: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for c in genome.connections.iter().filter(|c| c.enabled) {
        if hidden.contains(&c.to) && hidden.contains(&c.from) {
            *indegree.get_mut(&c.to).expect("hidden node") += 1;
            successors.entry(c.from).or_default().push(c.to);
        }
    }

    let mut order: Vec<NodeId> = genome.input_ids().collect();
    let mut ready: BTreeSet<NodeId> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&n, _)| n)
        .collect();
    let mut placed = 0;
    while let Some(n) = ready.pop_first() {
        order.push(n);
        placed += 1;
        if let Some(next) = successors.get(&n) {
            for m in next {
                let d = indegree.get_mut(m).expect("hidden node");
                *d -= 1;
                if *d == 0 {
                    ready.insert(*m);
                }
            }
        }
    }
    if placed != hidden.len() {
        return Err(CppnError::CycleDetected);
    }
    order.extend(genome.output_ids());
    Ok(order)
}

#[derive(Debug, Clone)]
struct CompiledNode {
    activation: Activation,
    bias: f64,
    // (slot of the upstream node, weight), in innovation order
    incoming: Vec<(usize, f64)>,
}

/// A genome flattened into evaluation order for repeated queries.
#[derive(Debug, Clone)]
pub struct FeedForwardNet {
    num_inputs: usize,
    num_outputs: usize,
    nodes: Vec<CompiledNode>,
    output_slots: Vec<usize>,
}

impl FeedForwardNet {
    pub fn compile(genome: &Genome) -> Result<Self, CppnError> {
        let order = topological_order(genome)?;
        let slot: HashMap<NodeId, usize> = order.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut nodes: Vec<CompiledNode> = order
            .iter()
            .map(|&id| {
                let gene = genome
                    .node(id)
                    .ok_or(CppnError::MissingNode(id))?;
                Ok(CompiledNode {
                    activation: gene.activation,
                    bias: gene.bias,
                    incoming: Vec::new(),
                })
            })
            .collect::<Result<_, CppnError>>()?;
        for c in genome.connections.iter().filter(|c| c.enabled) {
            let (&from, &to) = match (slot.get(&c.from), slot.get(&c.to)) {
                (Some(f), Some(t)) => (f, t),
                (None, _) => return Err(CppnError::MissingNode(c.from)),
                (_, None) => return Err(CppnError::MissingNode(c.to)),
            };
            if from >= to {
                return Err(CppnError::CycleDetected);
            }
            nodes[to].incoming.push((from, c.weight));
        }
        let output_slots = genome.output_ids().map(|id| slot[&id]).collect();
        Ok(FeedForwardNet {
            num_inputs: genome.num_inputs,
            num_outputs: genome.num_outputs,
            nodes,
            output_slots,
        })
    }

    pub fn evaluate(&self, inputs: &[f64]) -> Result<Vec<f64>, CppnError> {
        let mut scratch = vec![0.0; self.nodes.len()];
        self.evaluate_into(inputs, &mut scratch)
    }

    /// Evaluates using a caller-provided buffer of at least `node_count()`
    /// slots.
    pub fn evaluate_into(&self, inputs: &[f64], values: &mut [f64]) -> Result<Vec<f64>, CppnError> {
        if inputs.len() != self.num_inputs {
            return Err(CppnError::ArityMismatch {
                expected_inputs: self.num_inputs,
                expected_outputs: self.num_outputs,
                actual_inputs: inputs.len(),
                actual_outputs: self.num_outputs,
            });
        }
        values[..self.num_inputs].copy_from_slice(inputs);
        for (slot, node) in self.nodes.iter().enumerate().skip(self.num_inputs) {
            let mut sum = node.bias;
            for &(from, w) in &node.incoming {
                sum += w * values[from];
            }
            values[slot] = saturate(node.activation.apply(saturate(sum)));
        }
        Ok(self.output_slots.iter().map(|&s| values[s]).collect())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

impl Cppn for FeedForwardNet {
    fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    fn num_outputs(&self) -> usize {
        self.num_outputs
    }

    fn query(&self, inputs: &[f64]) -> Result<Vec<f64>, CppnError> {
        self.evaluate(inputs)
    }
}

/// Evaluates `genome` once at `inputs`.
pub fn feed_forward(genome: &Genome, inputs: &[f64]) -> Result<Vec<f64>, CppnError> {
    if inputs.len() != genome.num_inputs {
        return Err(CppnError::ArityMismatch {
            expected_inputs: genome.num_inputs,
            expected_outputs: genome.num_outputs,
            actual_inputs: inputs.len(),
            actual_outputs: genome.num_outputs,
        });
    }
    FeedForwardNet::compile(genome)?.evaluate(inputs)
}

/// Checks that `genome` has the input/output shape a decoder expects.
pub fn check_arity(genome: &Genome, inputs: usize, outputs: usize) -> Result<(), CppnError> {
    if genome.num_inputs != inputs || genome.num_outputs != outputs {
        return Err(CppnError::ArityMismatch {
            expected_inputs: inputs,
            expected_outputs: outputs,
            actual_inputs: genome.num_inputs,
            actual_outputs: genome.num_outputs,
        });
    }
    Ok(())
}
