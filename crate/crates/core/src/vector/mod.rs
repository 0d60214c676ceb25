//! Vector instruction graph, its interpreter, scheduler and emitters.

mod emit;
mod interp;
mod schedule;
mod stack;
mod text;

pub use emit::{emit_intrinsics, function_name, Target};
pub use interp::{interpret_vector, interpret_vector_with_order};
pub use schedule::{id_order, invdepth, sched_cost, schedule, ScheduleResult};
pub use stack::simulate_stack_accesses;
pub use text::{parse_vector_ir, to_vector_ir};

use serde::{Deserialize, Serialize};

use crate::error::VectorError;
use crate::scalar::{ArrayDecl, ArrayId, Opcode};

#[derive(Clone, Debug, PartialEq)]
pub enum VKind {
    /// Lanes `0..count` from `array[start..start + count]`.
    Load {
        array: ArrayId,
        start: usize,
        count: usize,
    },
    /// Writes lane `l` to `array[start + l]` where `mask[l]`.
    Store {
        array: ArrayId,
        start: usize,
        count: usize,
        mask: Vec<bool>,
    },
    Op(Opcode),
    /// Same constant in every lane.
    Broadcast(f64),
    /// `out[l] = in[pattern[l]]`, every lane defined.
    Permute(Vec<usize>),
    /// Like `Permute`, lanes marked `None` are left undefined.
    Extract(Vec<Option<usize>>),
    /// Two-input selection: index `i < vec` reads the first input, `vec + i`
    /// the second.
    Merge(Vec<Option<usize>>),
    /// Horizontal reduction over masked lanes; the result fills every lane.
    Reduce {
        opcode: Opcode,
        mask: Vec<bool>,
    },
}

impl VKind {
    pub fn name(&self) -> &'static str {
        match self {
            VKind::Load { .. } => "vload",
            VKind::Store { .. } => "vstore",
            VKind::Op(_) => "vop",
            VKind::Broadcast(_) => "broadcast",
            VKind::Permute(_) => "permute",
            VKind::Extract(_) => "extract",
            VKind::Merge(_) => "merge",
            VKind::Reduce { .. } => "reduce",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            VKind::Load { .. } | VKind::Broadcast(_) => 0,
            VKind::Store { .. } | VKind::Permute(_) | VKind::Extract(_) | VKind::Reduce { .. } => 1,
            VKind::Op(_) | VKind::Merge(_) => 2,
        }
    }

    pub fn is_data_transform(&self) -> bool {
        matches!(self, VKind::Permute(_) | VKind::Extract(_) | VKind::Merge(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VNode {
    pub id: usize,
    pub kind: VKind,
    pub inputs: Vec<usize>,
    /// Memory-order predecessors: nodes that must run before this one
    /// without passing it a value.
    pub after: Vec<usize>,
}

/// Node counts in the four reporting categories.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorCensus {
    /// Vector loads and broadcasts.
    pub loads: usize,
    pub stores: usize,
    /// Element-wise operations and reductions.
    pub operations: usize,
    /// Permutes, extracts and merges.
    pub data_transformations: usize,
}

impl VectorCensus {
    pub fn total(&self) -> usize {
        self.loads + self.stores + self.operations + self.data_transformations
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorGraph {
    pub name: String,
    pub vec_size: usize,
    pub arrays: Vec<ArrayDecl>,
    /// Dense: `nodes[i].id == i`.
    pub nodes: Vec<VNode>,
}

impl VectorGraph {
    pub fn new(name: impl Into<String>, vec_size: usize, arrays: Vec<ArrayDecl>) -> Self {
        VectorGraph {
            name: name.into(),
            vec_size,
            arrays,
            nodes: Vec::new(),
        }
    }

    pub fn push(&mut self, kind: VKind, inputs: Vec<usize>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(VNode {
            id,
            kind,
            inputs,
            after: Vec::new(),
        });
        id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn census(&self) -> VectorCensus {
        let mut c = VectorCensus::default();
        for n in &self.nodes {
            match n.kind {
                VKind::Load { .. } | VKind::Broadcast(_) => c.loads += 1,
                VKind::Store { .. } => c.stores += 1,
                VKind::Op(_) | VKind::Reduce { .. } => c.operations += 1,
                VKind::Permute(_) | VKind::Extract(_) | VKind::Merge(_) => c.data_transformations += 1,
            }
        }
        c
    }

    /// Data and ordering predecessors of every node.
    pub fn preds(&self) -> Vec<Vec<usize>> {
        self.nodes
            .iter()
            .map(|n| {
                let mut p: Vec<usize> = n.inputs.iter().chain(&n.after).copied().collect();
                p.sort_unstable();
                p.dedup();
                p
            })
            .collect()
    }

    /// Data and ordering successors of every node, ascending.
    pub fn succs(&self) -> Vec<Vec<usize>> {
        let mut s = vec![Vec::new(); self.nodes.len()];
        for (id, preds) in self.preds().into_iter().enumerate() {
            for p in preds {
                s[p].push(id);
            }
        }
        s
    }

    /// Data consumers only, ascending and deduplicated.
    pub fn consumers(&self) -> Vec<Vec<usize>> {
        let mut s = vec![Vec::new(); self.nodes.len()];
        for n in &self.nodes {
            for &p in &n.inputs {
                if s[p].last() != Some(&n.id) {
                    s[p].push(n.id);
                }
            }
        }
        s
    }

    /// Checks arities, lane patterns, bounds and acyclicity.
    pub fn validate(&self) -> Result<(), VectorError> {
        let v = self.vec_size;
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(VectorError::BadOrder(format!("node at {i} has id {}", n.id)));
            }
            if n.inputs.len() != n.kind.arity() {
                return Err(VectorError::Arity {
                    node: i,
                    got: n.inputs.len(),
                    expected: n.kind.arity(),
                });
            }
            for &p in n.inputs.iter().chain(&n.after) {
                if p >= self.nodes.len() {
                    return Err(VectorError::DanglingInput { node: i, input: p });
                }
            }
            let bad = |what: &str| VectorError::Parse {
                line: 0,
                message: format!("node {i}: {what}"),
            };
            match &n.kind {
                VKind::Load { array, start, count }
                | VKind::Store {
                    array, start, count, ..
                } => {
                    let decl = self.arrays.get(*array).ok_or_else(|| bad("unknown array"))?;
                    if *count == 0 || *count > v {
                        return Err(bad("lane count out of range"));
                    }
                    if start + count > decl.len {
                        return Err(VectorError::OutOfBounds {
                            node: i,
                            array: decl.name.clone(),
                            index: start + count - 1,
                            len: decl.len,
                        });
                    }
                    if let VKind::Store { mask, .. } = &n.kind {
                        if mask.len() != *count {
                            return Err(bad("store mask length differs from count"));
                        }
                    }
                }
                VKind::Permute(p) if p.len() != v || p.iter().any(|&x| x >= v) => {
                    return Err(bad("bad permute pattern"));
                }
                VKind::Extract(p) if p.len() != v || p.iter().flatten().any(|&x| x >= v) => {
                    return Err(bad("bad extract pattern"));
                }
                VKind::Merge(p) if p.len() != v || p.iter().flatten().any(|&x| x >= 2 * v) => {
                    return Err(bad("bad merge pattern"));
                }
                VKind::Reduce { mask, .. } if mask.len() != v => {
                    return Err(bad("bad reduce mask"));
                }
                _ => {}
            }
        }
        if id_order_checked(self).is_none() {
            return Err(VectorError::Cycle);
        }
        Ok(())
    }
}

/// Kahn order with lowest id first, `None` on a cycle.
fn id_order_checked(vg: &VectorGraph) -> Option<Vec<usize>> {
    let preds = vg.preds();
    let succs = vg.succs();
    let mut pending: Vec<usize> = preds.iter().map(Vec::len).collect();
    let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = pending
        .iter()
        .enumerate()
        .filter(|(_, &p)| p == 0)
        .map(|(i, _)| std::cmp::Reverse(i))
        .collect();
    let mut order = Vec::with_capacity(vg.len());
    while let Some(std::cmp::Reverse(i)) = ready.pop() {
        order.push(i);
        for &s in &succs[i] {
            pending[s] -= 1;
            if pending[s] == 0 {
                ready.push(std::cmp::Reverse(s));
            }
        }
    }
    (order.len() == vg.len()).then_some(order)
}

/// Checks that `order` is a permutation of the nodes respecting all edges.
pub fn check_order(vg: &VectorGraph, order: &[usize]) -> Result<(), VectorError> {
    if order.len() != vg.len() {
        return Err(VectorError::BadOrder(format!(
            "{} entries for {} nodes",
            order.len(),
            vg.len()
        )));
    }
    let mut pos = vec![usize::MAX; vg.len()];
    for (k, &id) in order.iter().enumerate() {
        if id >= vg.len() || pos[id] != usize::MAX {
            return Err(VectorError::BadOrder(format!("node {id} repeated or unknown")));
        }
        pos[id] = k;
    }
    for (id, preds) in vg.preds().iter().enumerate() {
        for &p in preds {
            if pos[p] > pos[id] {
                return Err(VectorError::BadOrder(format!("{p} must precede {id}")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ArrayRole;

    pub(crate) fn copy_graph() -> VectorGraph {
        let arrays = vec![
            ArrayDecl {
                name: "s".into(),
                role: ArrayRole::Input,
                len: 4,
            },
            ArrayDecl {
                name: "d".into(),
                role: ArrayRole::Output,
                len: 4,
            },
        ];
        let mut vg = VectorGraph::new("copy", 4, arrays);
        let l = vg.push(
            VKind::Load {
                array: 0,
                start: 0,
                count: 4,
            },
            vec![],
        );
        vg.push(
            VKind::Store {
                array: 1,
                start: 0,
                count: 4,
                mask: vec![true; 4],
            },
            vec![l],
        );
        vg
    }

    #[test]
    fn census_partitions_nodes() {
        let mut vg = copy_graph();
        let p = vg.push(VKind::Permute(vec![3, 2, 1, 0]), vec![0]);
        vg.push(VKind::Op(Opcode::Add), vec![0, p]);
        let c = vg.census();
        assert_eq!(c.total(), vg.len());
        assert_eq!((c.loads, c.stores, c.operations, c.data_transformations), (1, 1, 1, 1));
        vg.validate().unwrap();
        assert_eq!(VectorGraph::new("e", 4, vec![]).census(), VectorCensus::default());
    }

    #[test]
    fn validate_catches_bad_patterns() {
        let mut vg = copy_graph();
        vg.push(VKind::Permute(vec![4, 0, 0, 0]), vec![0]);
        assert!(vg.validate().is_err());
        let mut vg = copy_graph();
        vg.push(
            VKind::Load {
                array: 0,
                start: 2,
                count: 4,
            },
            vec![],
        );
        assert!(matches!(vg.validate(), Err(VectorError::OutOfBounds { .. })));
    }
}
