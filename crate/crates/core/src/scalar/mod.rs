//! Scalar instruction graph.
//!
//! A fully unrolled static kernel is a DAG whose leaves are `Set` (constant)
//! and `Load` nodes and whose sinks are `Store` nodes. Local variables do not
//! exist at this level: a copy into a local is invisible, only the dataflow
//! from memory (or constants) to memory remains.
//!
//! Loads observe memory as it was on kernel entry. The builder forwards stored
//! values to later reads of the same element and keeps only the final store
//! per element, so the graph has no memory ordering of its own.

mod build;
mod dedup;
mod interp;
mod serial;

pub use build::build_graph;
pub use dedup::dedup;
pub use interp::{interpret_scalar, interpret_scalar_with_order};
pub use serial::{GraphJson, NodeJson};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::GraphError;

pub type NodeId = usize;
pub type ArrayId = usize;

/// Arithmetic operator carried by `Operation` and `Reduce` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Opcode {
    Add,
    Sub,
    Mul,
    Div,
}

impl Opcode {
    pub const ALL: [Opcode; 4] = [Opcode::Add, Opcode::Sub, Opcode::Mul, Opcode::Div];

    pub fn commutative(self) -> bool {
        matches!(self, Opcode::Add | Opcode::Mul)
    }

    pub fn arity(self) -> usize {
        2
    }

    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Opcode::Add => a + b,
            Opcode::Sub => a - b,
            Opcode::Mul => a * b,
            Opcode::Div => a / b,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Opcode::Add => "add",
            Opcode::Sub => "sub",
            Opcode::Mul => "mul",
            Opcode::Div => "div",
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Opcode::Add => '+',
            Opcode::Sub => '-',
            Opcode::Mul => '*',
            Opcode::Div => '/',
        }
    }

    pub fn from_name(s: &str) -> Option<Opcode> {
        Opcode::ALL.into_iter().find(|op| op.name() == s)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayRole {
    Input,
    Output,
    Inout,
}

impl ArrayRole {
    pub fn name(self) -> &'static str {
        match self {
            ArrayRole::Input => "input",
            ArrayRole::Output => "output",
            ArrayRole::Inout => "inout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayDecl {
    pub name: String,
    pub role: ArrayRole,
    pub len: usize,
}

/// What a scalar node does. `Reduce` only appears after the reduction pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeKind {
    Set { constant: f64 },
    Load { array: ArrayId, index: usize },
    Operation { opcode: Opcode },
    Reduce { opcode: Opcode },
    Store { array: ArrayId, index: usize },
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Set { .. } => "set",
            NodeKind::Load { .. } => "load",
            NodeKind::Operation { .. } => "operation",
            NodeKind::Reduce { .. } => "reduce",
            NodeKind::Store { .. } => "store",
        }
    }

    pub fn opcode(&self) -> Option<Opcode> {
        match *self {
            NodeKind::Operation { opcode } | NodeKind::Reduce { opcode } => Some(opcode),
            _ => None,
        }
    }

    pub fn memory(&self) -> Option<(ArrayId, usize)> {
        match *self {
            NodeKind::Load { array, index } | NodeKind::Store { array, index } => Some((array, index)),
            _ => None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, NodeKind::Set { .. } | NodeKind::Load { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub inputs: Vec<NodeId>,
}

impl ScalarNode {
    pub fn commutative(&self) -> bool {
        self.kind.opcode().is_some_and(Opcode::commutative)
    }
}

/// Derived per-node facts, indexed by node id.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub topo: Vec<NodeId>,
    pub depth: Vec<usize>,
    pub consumers: Vec<Vec<NodeId>>,
}

#[derive(Clone, Debug, Default)]
pub struct ScalarGraph {
    pub name: String,
    arrays: Vec<ArrayDecl>,
    nodes: BTreeMap<NodeId, ScalarNode>,
    next_id: NodeId,
    analysis: OnceLock<Analysis>,
}

impl ScalarGraph {
    pub fn new(name: impl Into<String>, arrays: Vec<ArrayDecl>) -> Self {
        ScalarGraph {
            name: name.into(),
            arrays,
            ..Default::default()
        }
    }

    pub fn arrays(&self) -> &[ArrayDecl] {
        &self.arrays
    }

    pub fn array_id(&self, name: &str) -> Option<ArrayId> {
        self.arrays.iter().position(|a| a.name == name)
    }

    /// Appends a node and returns its id. Ids are dense in insertion order.
    pub fn push(&mut self, kind: NodeKind, inputs: Vec<NodeId>) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        self.nodes.insert(id, ScalarNode { id, kind, inputs });
        self.analysis = OnceLock::new();
        id
    }

    pub(crate) fn insert_node(&mut self, node: ScalarNode) {
        self.next_id = self.next_id.max(node.id + 1);
        self.nodes.insert(node.id, node);
        self.analysis = OnceLock::new();
    }

    pub(crate) fn remove_node(&mut self, id: NodeId) -> Option<ScalarNode> {
        self.analysis = OnceLock::new();
        self.nodes.remove(&id)
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> Option<&mut ScalarNode> {
        self.analysis = OnceLock::new();
        self.nodes.get_mut(&id)
    }

    pub fn node(&self, id: NodeId) -> &ScalarNode {
        &self.nodes[&id]
    }

    pub fn get(&self, id: NodeId) -> Option<&ScalarNode> {
        self.nodes.get(&id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &ScalarNode> + '_ {
        self.nodes.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// One past the largest id ever assigned; sizes id-indexed tables.
    pub fn id_bound(&self) -> usize {
        self.next_id
    }

    pub fn analysis(&self) -> &Analysis {
        self.analysis.get_or_init(|| self.compute_analysis())
    }

    pub fn depth(&self, id: NodeId) -> usize {
        self.analysis().depth[id]
    }

    pub fn consumers(&self, id: NodeId) -> &[NodeId] {
        &self.analysis().consumers[id]
    }

    pub fn topo_order(&self) -> &[NodeId] {
        &self.analysis().topo
    }

    fn compute_analysis(&self) -> Analysis {
        let bound = self.next_id;
        let mut consumers = vec![Vec::new(); bound];
        let mut pending = vec![0usize; bound];
        for node in self.nodes.values() {
            pending[node.id] = node.inputs.len();
            for &input in &node.inputs {
                consumers[input].push(node.id);
            }
        }
        // Kahn with a min-heap so the order is deterministic and id-biased.
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<NodeId>> = self
            .nodes
            .values()
            .filter(|n| n.inputs.is_empty())
            .map(|n| std::cmp::Reverse(n.id))
            .collect();
        let mut topo = Vec::with_capacity(self.nodes.len());
        let mut depth = vec![0usize; bound];
        while let Some(std::cmp::Reverse(id)) = ready.pop() {
            topo.push(id);
            let node = &self.nodes[&id];
            depth[id] = node.inputs.iter().map(|&i| depth[i] + 1).max().unwrap_or(0);
            for &c in &consumers[id] {
                pending[c] -= 1;
                if pending[c] == 0 {
                    ready.push(std::cmp::Reverse(c));
                }
            }
        }
        for list in &mut consumers {
            list.sort_unstable();
            list.dedup();
        }
        Analysis { topo, depth, consumers }
    }

    /// Checks the structural invariants of the node taxonomy.
    pub fn validate(&self) -> Result<(), GraphError> {
        for node in self.nodes.values() {
            for &input in &node.inputs {
                if !self.nodes.contains_key(&input) {
                    return Err(GraphError::DanglingInput { node: node.id, input });
                }
                if matches!(self.nodes[&input].kind, NodeKind::Store { .. }) {
                    return Err(GraphError::StoreHasConsumer { node: input });
                }
            }
            let arity_ok = match node.kind {
                NodeKind::Set { .. } | NodeKind::Load { .. } => node.inputs.is_empty(),
                NodeKind::Operation { .. } => (1..=2).contains(&node.inputs.len()),
                NodeKind::Reduce { .. } => node.inputs.len() >= 2,
                NodeKind::Store { .. } => node.inputs.len() == 1,
            };
            if !arity_ok {
                return Err(GraphError::Arity {
                    node: node.id,
                    kind: node.kind.name(),
                    got: node.inputs.len(),
                });
            }
            if let NodeKind::Reduce { opcode } = node.kind {
                if !opcode.commutative() {
                    return Err(GraphError::NonCommutativeReduce { node: node.id });
                }
            }
            if let Some((array, index)) = node.kind.memory() {
                let decl = self
                    .arrays
                    .get(array)
                    .ok_or(GraphError::UnknownArray { node: node.id, array })?;
                if index >= decl.len {
                    return Err(GraphError::IndexOutOfBounds {
                        array: decl.name.clone(),
                        index: index as i64,
                        len: decl.len,
                    });
                }
            }
        }
        if self.analysis().topo.len() != self.nodes.len() {
            return Err(GraphError::Cycle);
        }
        Ok(())
    }

    /// Node counts as (loads incl. sets, stores, operations incl. reductions).
    pub fn census(&self) -> ScalarCensus {
        let mut c = ScalarCensus::default();
        for node in self.nodes.values() {
            match node.kind {
                NodeKind::Set { .. } => c.sets += 1,
                NodeKind::Load { .. } => c.loads += 1,
                NodeKind::Operation { .. } => c.operations += 1,
                NodeKind::Reduce { .. } => c.reductions += 1,
                NodeKind::Store { .. } => c.stores += 1,
            }
        }
        c
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarCensus {
    pub sets: usize,
    pub loads: usize,
    pub operations: usize,
    pub reductions: usize,
    pub stores: usize,
}

impl ScalarCensus {
    pub fn total(&self) -> usize {
        self.sets + self.loads + self.operations + self.reductions + self.stores
    }
}

/// Per-array buffers of doubles, aligned with a graph's array declarations.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryImage {
    pub buffers: Vec<Vec<f64>>,
}

impl MemoryImage {
    pub fn zeroed(arrays: &[ArrayDecl]) -> Self {
        MemoryImage {
            buffers: arrays.iter().map(|a| vec![0.0; a.len]).collect(),
        }
    }

    /// Fills every buffer with values drawn uniformly from `[lo, hi)`.
    pub fn random(arrays: &[ArrayDecl], seed: u64, lo: f64, hi: f64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        MemoryImage {
            buffers: arrays
                .iter()
                .map(|a| (0..a.len).map(|_| rng.gen_range(lo..hi)).collect())
                .collect(),
        }
    }

    /// Small integers in `[0, 16)`, so sums and products stay exact.
    pub fn random_integers(arrays: &[ArrayDecl], seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        MemoryImage {
            buffers: arrays
                .iter()
                .map(|a| (0..a.len).map(|_| rng.gen_range(0..16) as f64).collect())
                .collect(),
        }
    }

    pub fn check_covers(&self, arrays: &[ArrayDecl]) -> Result<(), GraphError> {
        if self.buffers.len() != arrays.len() {
            return Err(GraphError::MemoryShape);
        }
        for (buf, decl) in self.buffers.iter().zip(arrays) {
            if buf.len() < decl.len {
                return Err(GraphError::MemoryShape);
            }
        }
        Ok(())
    }

    /// Bitwise equality, so NaNs with equal payloads compare equal.
    pub fn bit_eq(&self, other: &MemoryImage) -> bool {
        self.buffers.len() == other.buffers.len()
            && self
                .buffers
                .iter()
                .zip(&other.buffers)
                .all(|(a, b)| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()))
    }

    /// Largest relative difference `|a-b| / max(|a|, tiny)` over all elements.
    pub fn max_rel_diff(&self, other: &MemoryImage) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, b) in self.buffers.iter().zip(&other.buffers) {
            for (&x, &y) in a.iter().zip(b) {
                if x.to_bits() == y.to_bits() {
                    continue;
                }
                let diff = (x - y).abs() / x.abs().max(f64::MIN_POSITIVE);
                worst = worst.max(if diff.is_nan() { f64::INFINITY } else { diff });
            }
        }
        worst
    }
}
