use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::activation::Activation;

pub type NodeId = u64;
pub type Innovation = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Input,
    Hidden,
    Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: NodeId,
    pub role: NodeRole,
    pub activation: Activation,
    pub bias: f64,
}

impl NodeGene {
    pub fn input(id: NodeId) -> Self {
        NodeGene {
            id,
            role: NodeRole::Input,
            activation: Activation::Identity,
            bias: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGene {
    pub innovation: Innovation,
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
    pub enabled: bool,
}

/// A CPPN genotype.
///
/// Node ids `0..num_inputs` are the inputs and `num_inputs..num_inputs +
/// num_outputs` the outputs; hidden nodes take ids handed out by the
/// innovation registry. `nodes` is kept sorted by id and `connections` by
/// innovation number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub num_inputs: usize,
    pub num_outputs: usize,
    pub nodes: Vec<NodeGene>,
    pub connections: Vec<ConnectionGene>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Violation {
    DuplicateNodeId(NodeId),
    DuplicateInnovation(Innovation),
    DuplicateConnection { from: NodeId, to: NodeId },
    MissingEndpoint { innovation: Innovation, node: NodeId },
    IllegalEndpoint { innovation: Innovation },
    MalformedInput(NodeId),
    IoLayout,
    Cycle,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNodeId(id) => write!(f, "node id {id} appears more than once"),
            Violation::DuplicateInnovation(i) => write!(f, "innovation {i} appears more than once"),
            Violation::DuplicateConnection { from, to } => {
                write!(f, "connection {from}->{to} appears more than once")
            }
            Violation::MissingEndpoint { innovation, node } => {
                write!(f, "connection {innovation} refers to missing node {node}")
            }
            Violation::IllegalEndpoint { innovation } => write!(
                f,
                "connection {innovation} leaves an output node or enters an input node"
            ),
            Violation::MalformedInput(id) => {
                write!(f, "input node {id} must use identity activation and zero bias")
            }
            Violation::IoLayout => write!(
                f,
                "input/output nodes do not match num_inputs/num_outputs id layout"
            ),
            Violation::Cycle => write!(f, "enabled connections contain a cycle"),
        }
    }
}

impl Genome {
    /// A genome with the given inputs and outputs and no connections.
    pub fn bare(num_inputs: usize, num_outputs: usize, output_activation: Activation) -> Self {
        let mut nodes: Vec<NodeGene> = (0..num_inputs as NodeId).map(NodeGene::input).collect();
        nodes.extend((0..num_outputs).map(|o| NodeGene {
            id: (num_inputs + o) as NodeId,
            role: NodeRole::Output,
            activation: output_activation,
            bias: 0.0,
        }));
        Genome {
            num_inputs,
            num_outputs,
            nodes,
            connections: Vec::new(),
            fitness: None,
        }
    }

    pub fn input_ids(&self) -> impl Iterator<Item = NodeId> {
        0..self.num_inputs as NodeId
    }

    pub fn output_ids(&self) -> impl Iterator<Item = NodeId> {
        let start = self.num_inputs as NodeId;
        start..start + self.num_outputs as NodeId
    }

    pub fn hidden_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .filter(|n| n.role == NodeRole::Hidden)
            .map(|n| n.id)
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeGene> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut NodeGene> {
        match self.nodes.binary_search_by_key(&id, |n| n.id) {
            Ok(i) => Some(&mut self.nodes[i]),
            Err(_) => None,
        }
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.node(id).is_some()
    }

    pub fn role_of(&self, id: NodeId) -> Option<NodeRole> {
        self.node(id).map(|n| n.role)
    }

    pub fn has_connection(&self, from: NodeId, to: NodeId) -> bool {
        self.connections.iter().any(|c| c.from == from && c.to == to)
    }

    pub fn connection(&self, innovation: Innovation) -> Option<&ConnectionGene> {
        self.connections
            .binary_search_by_key(&innovation, |c| c.innovation)
            .ok()
            .map(|i| &self.connections[i])
    }

    pub fn insert_node(&mut self, node: NodeGene) {
        match self.nodes.binary_search_by_key(&node.id, |n| n.id) {
            Ok(i) => self.nodes[i] = node,
            Err(i) => self.nodes.insert(i, node),
        }
    }

    pub fn insert_connection(&mut self, conn: ConnectionGene) {
        match self
            .connections
            .binary_search_by_key(&conn.innovation, |c| c.innovation)
        {
            Ok(i) => self.connections[i] = conn,
            Err(i) => self.connections.insert(i, conn),
        }
    }

    /// Whether adding `from -> to` would close a cycle through any existing
    /// connection, enabled or not.
    pub fn would_create_cycle(&self, from: NodeId, to: NodeId) -> bool {
        if from == to {
            return true;
        }
        let mut adjacency: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        for c in &self.connections {
            adjacency.entry(c.from).or_default().push(c.to);
        }
        let mut stack = vec![to];
        let mut seen = HashSet::new();
        while let Some(n) = stack.pop() {
            if n == from {
                return true;
            }
            if seen.insert(n) {
                if let Some(next) = adjacency.get(&n) {
                    stack.extend(next.iter().copied());
                }
            }
        }
        false
    }

    /// Number of genes that take part in alignment: non-input nodes plus
    /// connections.
    pub fn gene_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.role != NodeRole::Input).count() + self.connections.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("genome serialization is infallible")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        let mut g: Genome = serde_json::from_str(s)?;
        g.nodes.sort_by_key(|n| n.id);
        g.connections.sort_by_key(|c| c.innovation);
        Ok(g)
    }
}

/// Lists every broken structural invariant of `genome`.
pub fn validate_genome(genome: &Genome) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut ids = HashSet::new();
    for n in &genome.nodes {
        if !ids.insert(n.id) {
            out.push(Violation::DuplicateNodeId(n.id));
        }
        if n.role == NodeRole::Input && (n.activation != Activation::Identity || n.bias != 0.0) {
            out.push(Violation::MalformedInput(n.id));
        }
    }

    let expected_inputs: BTreeSet<NodeId> = genome.input_ids().collect();
    let expected_outputs: BTreeSet<NodeId> = genome.output_ids().collect();
    let inputs: BTreeSet<NodeId> = genome
        .nodes
        .iter()
        .filter(|n| n.role == NodeRole::Input)
        .map(|n| n.id)
        .collect();
    let outputs: BTreeSet<NodeId> = genome
        .nodes
        .iter()
        .filter(|n| n.role == NodeRole::Output)
        .map(|n| n.id)
        .collect();
    if inputs != expected_inputs || outputs != expected_outputs {
        out.push(Violation::IoLayout);
    }

    let roles: HashMap<NodeId, NodeRole> = genome.nodes.iter().map(|n| (n.id, n.role)).collect();
    let mut innovations = HashSet::new();
    let mut pairs = HashSet::new();
    let mut legal_enabled = Vec::new();
    for c in &genome.connections {
        if !innovations.insert(c.innovation) {
            out.push(Violation::DuplicateInnovation(c.innovation));
        }
        if !pairs.insert((c.from, c.to)) {
            out.push(Violation::DuplicateConnection {
                from: c.from,
                to: c.to,
            });
        }
        let mut endpoints_ok = true;
        for node in [c.from, c.to] {
            if !roles.contains_key(&node) {
                out.push(Violation::MissingEndpoint {
                    innovation: c.innovation,
                    node,
                });
                endpoints_ok = false;
            }
        }
        if !endpoints_ok {
            continue;
        }
        if roles[&c.from] == NodeRole::Output || roles[&c.to] == NodeRole::Input {
            out.push(Violation::IllegalEndpoint {
                innovation: c.innovation,
            });
            continue;
        }
        if c.enabled {
            legal_enabled.push((c.from, c.to));
        }
    }

    if has_cycle(&legal_enabled) {
        out.push(Violation::Cycle);
    }
    out
}

fn has_cycle(edges: &[(NodeId, NodeId)]) -> bool {
    let mut indegree: HashMap<NodeId, usize> = HashMap::new();
    let mut adjacency: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for &(a, b) in edges {
        indegree.entry(a).or_insert(0);
        *indegree.entry(b).or_insert(0) += 1;
        adjacency.entry(a).or_default().push(b);
    }
    let mut ready: Vec<NodeId> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&n, _)| n)
        .collect();
    let mut visited = 0;
    while let Some(n) = ready.pop() {
        visited += 1;
        if let Some(next) = adjacency.get(&n) {
            for m in next {
                let d = indegree.get_mut(m).expect("endpoint registered");
                *d -= 1;
                if *d == 0 {
                    ready.push(*m);
                }
            }
        }
    }
    visited != indegree.len()
}
