use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cppn::{Innovation, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum StructuralKind {
    AddConnection,
    AddNode,
}

#[derive(Debug, Clone, Copy)]
enum Assigned {
    Connection(Innovation),
    Split(SplitIds),
}

/// Ids handed out when a connection is split by a new node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitIds {
    pub node: NodeId,
    pub in_innovation: Innovation,
    pub out_innovation: Innovation,
}

/// Global innovation bookkeeping for one population.
///
/// Within a generation the same structural mutation always receives the same
/// numbers. `end_generation` forgets the per-generation table; only the
/// counters persist, so the table never needs to be checkpointed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnovationRegistry {
    next_innovation: Innovation,
    next_node_id: NodeId,
    #[serde(skip)]
    seen: HashMap<(NodeId, NodeId, StructuralKind), Assigned>,
}

impl InnovationRegistry {
    /// Starts numbering after the fully connected minimal topology, whose
    /// connection `(input i, output o)` carries innovation
    /// `i * num_outputs + o`.
    pub fn new(num_inputs: usize, num_outputs: usize) -> Self {
        InnovationRegistry {
            next_innovation: (num_inputs * num_outputs) as Innovation,
            next_node_id: (num_inputs + num_outputs) as NodeId,
            seen: HashMap::new(),
        }
    }

    pub fn next_innovation(&self) -> Innovation {
        self.next_innovation
    }

    pub fn next_node_id(&self) -> NodeId {
        self.next_node_id
    }

    pub fn pending(&self) -> usize {
        self.seen.len()
    }

    pub fn connection_innovation(&mut self, from: NodeId, to: NodeId) -> Innovation {
        let key = (from, to, StructuralKind::AddConnection);
        if let Some(Assigned::Connection(i)) = self.seen.get(&key) {
            return *i;
        }
        let i = self.bump_innovation();
        self.seen.insert(key, Assigned::Connection(i));
        i
    }

    pub fn split(&mut self, from: NodeId, to: NodeId) -> SplitIds {
        let key = (from, to, StructuralKind::AddNode);
        if let Some(Assigned::Split(ids)) = self.seen.get(&key) {
            return *ids;
        }
        let ids = self.fresh_split();
        self.seen.insert(key, Assigned::Split(ids));
        ids
    }

    /// Unshared split ids, for a genome that already carries the node the
    /// shared entry would give it.
    pub fn fresh_split(&mut self) -> SplitIds {
        let node = self.next_node_id;
        self.next_node_id += 1;
        SplitIds {
            node,
            in_innovation: self.bump_innovation(),
            out_innovation: self.bump_innovation(),
        }
    }

    pub fn end_generation(&mut self) {
        self.seen.clear();
    }

    fn bump_innovation(&mut self) -> Innovation {
        let i = self.next_innovation;
        self.next_innovation += 1;
        i
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_mutations_share_numbers_within_a_generation() {
        let mut reg = InnovationRegistry::new(3, 2);
        assert_eq!(reg.next_innovation(), 6);
        let a = reg.connection_innovation(0, 7);
        let b = reg.connection_innovation(0, 7);
        let c = reg.connection_innovation(1, 7);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let s1 = reg.split(0, 3);
        let s2 = reg.split(0, 3);
        assert_eq!(s1, s2);
        assert_eq!(s1.node, 5);
    }

    #[test]
    fn numbers_are_fresh_after_generation_end() {
        let mut reg = InnovationRegistry::new(3, 2);
        let a = reg.connection_innovation(0, 7);
        reg.end_generation();
        assert_eq!(reg.pending(), 0);
        let b = reg.connection_innovation(0, 7);
        assert!(b > a);
    }
}
