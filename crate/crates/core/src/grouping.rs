//! Meta-graph of same-kind instructions that may share a vector instruction.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::scalar::{ArrayId, NodeId, NodeKind, Opcode, ScalarGraph};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GroupKind {
    Set { constant: f64 },
    Load { array: ArrayId },
    Op { opcode: Opcode, depth: usize },
    Reduce { opcode: Opcode, depth: usize },
    Store { array: ArrayId },
}

impl GroupKind {
    fn of(graph: &ScalarGraph, id: NodeId) -> GroupKind {
        match graph.node(id).kind {
            NodeKind::Set { constant } => GroupKind::Set { constant },
            NodeKind::Load { array, .. } => GroupKind::Load { array },
            NodeKind::Operation { opcode } => GroupKind::Op {
                opcode,
                depth: graph.depth(id),
            },
            NodeKind::Reduce { opcode } => GroupKind::Reduce {
                opcode,
                depth: graph.depth(id),
            },
            NodeKind::Store { array, .. } => GroupKind::Store { array },
        }
    }

    fn rank(&self) -> u8 {
        match self {
            GroupKind::Set { .. } => 0,
            GroupKind::Load { .. } => 1,
            GroupKind::Op { .. } => 2,
            GroupKind::Reduce { .. } => 3,
            GroupKind::Store { .. } => 4,
        }
    }

    fn cmp_key(&self, other: &GroupKind) -> Ordering {
        use GroupKind::*;
        self.rank().cmp(&other.rank()).then_with(|| match (self, other) {
            (Set { constant: a }, Set { constant: b }) => a.total_cmp(b),
            (Load { array: a }, Load { array: b }) | (Store { array: a }, Store { array: b }) => a.cmp(b),
            (Op { opcode: a, depth: x }, Op { opcode: b, depth: y })
            | (Reduce { opcode: a, depth: x }, Reduce { opcode: b, depth: y }) => a.cmp(b).then(x.cmp(y)),
            _ => Ordering::Equal,
        })
    }

    pub fn label(&self, graph: &ScalarGraph) -> String {
        let array = |a: ArrayId| graph.arrays()[a].name.as_str();
        match *self {
            GroupKind::Set { constant } => format!("set {constant}"),
            GroupKind::Load { array: a } => format!("load {}", array(a)),
            GroupKind::Op { opcode, depth } => format!("{opcode} d{depth}"),
            GroupKind::Reduce { opcode, depth } => format!("reduce:{opcode} d{depth}"),
            GroupKind::Store { array: a } => format!("store {}", array(a)),
        }
    }

    pub fn is_memory(&self) -> bool {
        matches!(self, GroupKind::Load { .. } | GroupKind::Store { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    pub id: usize,
    pub kind: GroupKind,
    /// Ascending scalar node ids.
    pub members: Vec<NodeId>,
}

#[derive(Clone, Debug)]
pub struct GroupGraph {
    pub groups: Vec<Group>,
    /// `(from, to)` group pairs joined by at least one scalar edge.
    pub edges: BTreeSet<(usize, usize)>,
    group_of: BTreeMap<NodeId, usize>,
}

impl GroupGraph {
    pub fn group_of(&self, node: NodeId) -> usize {
        self.group_of[&node]
    }

    pub fn predecessors(&self, group: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == group).map(|e| e.0)
    }

    pub fn successors(&self, group: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.0 == group).map(|e| e.1)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Groups loads and stores by array, constants by value and operations by
/// opcode and depth from the leaves. Group ids follow
/// `(kind, array/opcode/constant, depth)`.
pub fn build_group_graph(graph: &ScalarGraph) -> GroupGraph {
    let mut groups: Vec<Group> = Vec::new();
    for id in graph.ids() {
        let kind = GroupKind::of(graph, id);
        match groups.iter_mut().find(|g| g.kind.cmp_key(&kind) == Ordering::Equal) {
            Some(g) => g.members.push(id),
            None => groups.push(Group {
                id: 0,
                kind,
                members: vec![id],
            }),
        }
    }
    groups.sort_by(|a, b| a.kind.cmp_key(&b.kind));
    let mut group_of = BTreeMap::new();
    for (i, g) in groups.iter_mut().enumerate() {
        g.id = i;
        for &m in &g.members {
            group_of.insert(m, i);
        }
    }
    let mut edges = BTreeSet::new();
    for node in graph.nodes() {
        for &input in &node.inputs {
            edges.insert((group_of[&input], group_of[&node.id]));
        }
    }
    GroupGraph {
        groups,
        edges,
        group_of,
    }
}
