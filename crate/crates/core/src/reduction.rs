//! Rewriting of serial commutative chains into parallel partial chains.
//!
//! A chain such as `((((t0 + t1) + t2) + t3) + t4) + t5` serializes every add.
//! When the chain has more than `vec_size` nodes its operands are dealt
//! round-robin into `vec_size` independent sub-chains whose tails feed one
//! `Reduce` node, which the backend lowers to a horizontal vector reduction.

use crate::error::ReductionError;
use crate::scalar::{NodeId, NodeKind, Opcode, ScalarGraph, ScalarNode};

/// Consecutive nodes of one commutative opcode, each consuming the previous.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionPath {
    pub opcode: Opcode,
    pub nodes: Vec<NodeId>,
}

impl ReductionPath {
    /// Leaf operands in chain order: both inputs of the first node, then the
    /// off-chain input of every later node.
    pub fn operands(&self, graph: &ScalarGraph) -> Vec<NodeId> {
        let mut out = graph.node(self.nodes[0]).inputs.clone();
        for w in self.nodes.windows(2) {
            out.push(other_input(graph.node(w[1]), w[0]));
        }
        out
    }
}

/// Result of rewriting one path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rewrite {
    pub reduce: NodeId,
    /// Operands of each sub-chain, in fold order.
    pub chains: Vec<Vec<NodeId>>,
}

fn other_input(node: &ScalarNode, chained: NodeId) -> NodeId {
    if node.inputs[0] == chained {
        node.inputs[1]
    } else {
        node.inputs[0]
    }
}

/// The input of `v` that continues a chain into `v`, if any.
///
/// Candidates share `v`'s commutative opcode and have `v` as their only
/// consumer. When both inputs qualify, the strictly deeper one is the chain;
/// equal depths leave `v` as a chain start.
fn chain_pred(graph: &ScalarGraph, v: &ScalarNode) -> Option<NodeId> {
    let NodeKind::Operation { opcode } = v.kind else {
        return None;
    };
    if !opcode.commutative() || v.inputs.len() != 2 || v.inputs[0] == v.inputs[1] {
        return None;
    }
    let qualifies = |u: NodeId| {
        let n = graph.node(u);
        n.kind == NodeKind::Operation { opcode } && n.inputs.len() == 2 && graph.consumers(u) == [v.id]
    };
    let (a, b) = (v.inputs[0], v.inputs[1]);
    let (da, db) = (graph.depth(a), graph.depth(b));
    match (qualifies(a), qualifies(b)) {
        (true, false) if da > db => Some(a),
        (false, true) if db > da => Some(b),
        (true, true) if da != db => Some(if da > db { a } else { b }),
        _ => None,
    }
}

/// Maximal chains longer than `vec_size` nodes. Paths are node-disjoint and
/// listed by ascending first node id.
pub fn find_reduction_paths(graph: &ScalarGraph, vec_size: usize) -> Vec<ReductionPath> {
    let bound = graph.id_bound();
    let mut pred = vec![None; bound];
    let mut next = vec![None; bound];
    for node in graph.nodes() {
        if let Some(u) = chain_pred(graph, node) {
            pred[node.id] = Some(u);
            next[u] = Some(node.id);
        }
    }
    let mut paths = Vec::new();
    for node in graph.nodes() {
        if pred[node.id].is_some() || next[node.id].is_none() {
            continue;
        }
        let mut nodes = vec![node.id];
        while let Some(n) = next[*nodes.last().unwrap()] {
            nodes.push(n);
        }
        if nodes.len() > vec_size {
            paths.push(ReductionPath {
                opcode: node.kind.opcode().unwrap(),
                nodes,
            });
        }
    }
    paths
}

fn check_path(graph: &ScalarGraph, path: &ReductionPath) -> Result<(), ReductionError> {
    for (k, &id) in path.nodes.iter().enumerate() {
        let node = graph.get(id).ok_or(ReductionError::StalePath(id))?;
        if node.kind != (NodeKind::Operation { opcode: path.opcode }) || node.inputs.len() != 2 {
            return Err(ReductionError::StalePath(id));
        }
        if k > 0 {
            let prev = path.nodes[k - 1];
            if !node.inputs.contains(&prev) || graph.consumers(prev) != [id] {
                return Err(ReductionError::StalePath(id));
            }
        }
    }
    Ok(())
}

/// Replaces `path` by `vec_size` round-robin sub-chains joined by a reduction.
pub fn apply_reduction(
    graph: &ScalarGraph,
    path: &ReductionPath,
    vec_size: usize,
) -> Result<(ScalarGraph, Rewrite), ReductionError> {
    if vec_size < 2 {
        return Err(ReductionError::VecSize(vec_size));
    }
    if path.nodes.is_empty() {
        return Err(ReductionError::StalePath(0));
    }
    check_path(graph, path)?;
    let operands = path.operands(graph);
    let tail = *path.nodes.last().unwrap();
    let consumers = graph.consumers(tail).to_vec();

    let mut out = graph.clone();
    for &id in &path.nodes {
        out.remove_node(id);
    }
    let lanes = vec_size.min(operands.len());
    let mut chains = vec![Vec::new(); lanes];
    for (j, &op) in operands.iter().enumerate() {
        chains[j % lanes].push(op);
    }
    let tails: Vec<NodeId> = chains
        .iter()
        .map(|chain| {
            chain[1..].iter().fold(chain[0], |acc, &x| {
                out.push(NodeKind::Operation { opcode: path.opcode }, vec![acc, x])
            })
        })
        .collect();
    let reduce = out.push(NodeKind::Reduce { opcode: path.opcode }, tails);
    for c in consumers {
        for input in &mut out.node_mut(c).unwrap().inputs {
            if *input == tail {
                *input = reduce;
            }
        }
    }
    Ok((out, Rewrite { reduce, chains }))
}

/// Rewrites every path found by [`find_reduction_paths`].
pub fn apply_all(graph: &ScalarGraph, vec_size: usize) -> Result<(ScalarGraph, Vec<Rewrite>), ReductionError> {
    let mut g = graph.clone();
    let mut rewrites = Vec::new();
    for path in find_reduction_paths(graph, vec_size) {
        let (next, rw) = apply_reduction(&g, &path, vec_size)?;
        g = next;
        rewrites.push(rw);
    }
    Ok((g, rewrites))
}
