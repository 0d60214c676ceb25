use std::collections::HashMap;

use crate::scalar::{NodeId, NodeKind, ScalarGraph, ScalarNode};

#[derive(Clone, PartialEq, Eq, Hash)]
struct Key {
    tag: u8,
    a: u64,
    b: u64,
    inputs: Vec<usize>,
}

/// Merges structurally equivalent nodes.
///
/// Two nodes are equivalent when they have the same kind and payload and
/// equivalent inputs; inputs of commutative nodes are compared as a
/// multiset. The lowest id of each class survives and keeps its id.
pub fn dedup(graph: &ScalarGraph) -> ScalarGraph {
    let bound = graph.id_bound();
    // class[id] is a dense class number; keys are built from input classes so
    // they are stable regardless of which member is visited first.
    let mut class = vec![usize::MAX; bound];
    let mut classes: HashMap<Key, usize> = HashMap::new();
    for &id in graph.topo_order() {
        let node = graph.node(id);
        let (tag, a, b) = match node.kind {
            NodeKind::Set { constant } => (0, constant.to_bits(), 0),
            NodeKind::Load { array, index } => (1, array as u64, index as u64),
            NodeKind::Operation { opcode } => (2, opcode as u64, 0),
            NodeKind::Reduce { opcode } => (3, opcode as u64, 0),
            NodeKind::Store { array, index } => (4, array as u64, index as u64),
        };
        let mut inputs: Vec<usize> = node.inputs.iter().map(|&i| class[i]).collect();
        if node.commutative() {
            inputs.sort_unstable();
        }
        let next = classes.len();
        class[id] = *classes.entry(Key { tag, a, b, inputs }).or_insert(next);
    }
    let mut lowest = vec![NodeId::MAX; classes.len()];
    for id in graph.ids() {
        lowest[class[id]] = lowest[class[id]].min(id);
    }
    let rep = |id: NodeId| lowest[class[id]];
    let mut out = ScalarGraph::new(graph.name.clone(), graph.arrays().to_vec());
    for node in graph.nodes() {
        if rep(node.id) != node.id {
            continue;
        }
        out.insert_node(ScalarNode {
            id: node.id,
            kind: node.kind,
            inputs: node.inputs.iter().map(|&i| rep(i)).collect(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{interpret_scalar, ArrayDecl, ArrayRole, MemoryImage, Opcode};

    fn arrays() -> Vec<ArrayDecl> {
        vec![
            ArrayDecl {
                name: "a".into(),
                role: ArrayRole::Input,
                len: 2,
            },
            ArrayDecl {
                name: "d".into(),
                role: ArrayRole::Output,
                len: 2,
            },
        ]
    }

    #[test]
    fn shared_square_merges() {
        let mut g = ScalarGraph::new("sq", arrays());
        let a = g.push(NodeKind::Load { array: 0, index: 0 }, vec![]);
        let b = g.push(NodeKind::Operation { opcode: Opcode::Mul }, vec![a, a]);
        let c = g.push(NodeKind::Operation { opcode: Opcode::Mul }, vec![a, a]);
        let d = g.push(NodeKind::Operation { opcode: Opcode::Add }, vec![b, c]);
        g.push(NodeKind::Store { array: 1, index: 0 }, vec![d]);
        let out = dedup(&g);
        assert_eq!(out.len(), 4);
        assert_eq!(out.node(d).inputs, vec![b, b]);
        let mem = MemoryImage::random(g.arrays(), 3, -1.0, 1.0);
        assert!(interpret_scalar(&g, &mem)
            .unwrap()
            .bit_eq(&interpret_scalar(&out, &mem).unwrap()));
    }

    #[test]
    fn commutative_inputs_ignore_order() {
        let mut g = ScalarGraph::new("c", arrays());
        let p = g.push(NodeKind::Load { array: 0, index: 0 }, vec![]);
        let q = g.push(NodeKind::Load { array: 0, index: 1 }, vec![]);
        let x = g.push(NodeKind::Operation { opcode: Opcode::Add }, vec![p, q]);
        let y = g.push(NodeKind::Operation { opcode: Opcode::Add }, vec![q, p]);
        let s = g.push(NodeKind::Operation { opcode: Opcode::Sub }, vec![p, q]);
        let t = g.push(NodeKind::Operation { opcode: Opcode::Sub }, vec![q, p]);
        let u = g.push(NodeKind::Operation { opcode: Opcode::Mul }, vec![x, y]);
        let v = g.push(NodeKind::Operation { opcode: Opcode::Mul }, vec![s, t]);
        g.push(NodeKind::Store { array: 1, index: 0 }, vec![u]);
        g.push(NodeKind::Store { array: 1, index: 1 }, vec![v]);
        let out = dedup(&g);
        assert!(!out.contains(y));
        assert!(out.contains(s) && out.contains(t));
        assert_eq!(out.node(u).inputs, vec![x, x]);
    }

    #[test]
    fn no_duplicates_is_identity() {
        let mut g = ScalarGraph::new("i", arrays());
        let p = g.push(NodeKind::Load { array: 0, index: 0 }, vec![]);
        g.push(NodeKind::Store { array: 1, index: 0 }, vec![p]);
        let out = dedup(&g);
        assert_eq!(out.nodes().collect::<Vec<_>>(), g.nodes().collect::<Vec<_>>());
    }
}
