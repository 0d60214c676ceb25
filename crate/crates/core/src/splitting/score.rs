use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::SplitError;
use crate::grouping::{Group, GroupGraph};
use crate::scalar::{NodeId, NodeKind, ScalarGraph};

/// Dense symmetric affinity matrix over the members of one group.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    /// Node id of each row/column.
    pub members: Vec<NodeId>,
    data: Vec<f64>,
}

impl ScoreMatrix {
    /// Builds a matrix over positions `0..n`; rows are labeled `0..n`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = f(i, j);
            }
        }
        ScoreMatrix {
            members: (0..n).collect(),
            data,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.members.len() + j]
    }

    /// CSV with member ids as header row and first column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for m in &self.members {
            write!(out, ",{m}").unwrap();
        }
        out.push('\n');
        for (i, m) in self.members.iter().enumerate() {
            write!(out, "{m}").unwrap();
            for j in 0..self.members.len() {
                write!(out, ",{}", self.get(i, j)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// What is already placed when a group is scored.
pub struct ScoreContext<'a> {
    pub graph: &'a ScalarGraph,
    pub groups: &'a GroupGraph,
    pub vec_size: usize,
    /// Vector holding each placed node, indexed by node id.
    pub holder: &'a [Option<usize>],
    /// Store slot of each store node under the current split choice.
    pub store_slot: &'a [Option<usize>],
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Dest {
    StoreSlot(usize),
    Group(usize),
}

/// Pairwise scores for the members of an operation group.
///
/// Off the diagonal, each operand position whose sources sit in the same
/// vector adds 1. On the diagonal, each present source adds 1. Shared
/// destinations add 1 for a store slot, 1 for an operation group that fits
/// one vector and `1/size` for a larger one.
pub fn compute_score_matrix(group: &Group, ctx: &ScoreContext) -> Result<ScoreMatrix, SplitError> {
    let n = group.members.len();
    let mut sources = Vec::with_capacity(n);
    let mut dests: Vec<BTreeMap<Dest, f64>> = Vec::with_capacity(n);
    for &m in &group.members {
        let node = ctx.graph.node(m);
        let mut src = [None, None];
        for (k, &input) in node.inputs.iter().take(2).enumerate() {
            let h = ctx.holder[input].ok_or(SplitError::UnsplitPredecessor {
                node: m,
                operand: input,
            })?;
            src[k] = Some(h);
        }
        sources.push(src);
        let mut d = BTreeMap::new();
        for &c in ctx.graph.consumers(m) {
            match ctx.graph.node(c).kind {
                NodeKind::Store { .. } => {
                    if let Some(slot) = ctx.store_slot[c] {
                        d.insert(Dest::StoreSlot(slot), 1.0);
                    }
                }
                _ => {
                    let g = ctx.groups.group_of(c);
                    let size = ctx.groups.groups[g].members.len();
                    let w = if size <= ctx.vec_size { 1.0 } else { 1.0 / size as f64 };
                    d.insert(Dest::Group(g), w);
                }
            }
        }
        dests.push(d);
    }
    let same = |a: Option<usize>, b: Option<usize>| matches!((a, b), (Some(x), Some(y)) if x == y);
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut s = if i == j {
                sources[i].iter().filter(|s| s.is_some()).count() as f64
            } else {
                (same(sources[i][0], sources[j][0]) as u8 + same(sources[i][1], sources[j][1]) as u8) as f64
            };
            for (dest, w) in &dests[i] {
                if dests[j].contains_key(dest) {
                    s += w;
                }
            }
            data[i * n + j] = s;
            data[j * n + i] = s;
        }
    }
    Ok(ScoreMatrix {
        members: group.members.clone(),
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::build_group_graph;
    use crate::scalar::{ArrayDecl, ArrayRole, Opcode};

    /// Two adds over loads, each stored; `shared_store` decides whether both
    /// stores land in one slot.
    fn fixture() -> (ScalarGraph, GroupGraph) {
        let arrays = vec![
            ArrayDecl {
                name: "a".into(),
                role: ArrayRole::Input,
                len: 4,
            },
            ArrayDecl {
                name: "d".into(),
                role: ArrayRole::Output,
                len: 2,
            },
        ];
        let mut g = ScalarGraph::new("f", arrays);
        let l: Vec<_> = (0..4)
            .map(|i| g.push(NodeKind::Load { array: 0, index: i }, vec![]))
            .collect();
        let x = g.push(NodeKind::Operation { opcode: Opcode::Add }, vec![l[0], l[1]]);
        let y = g.push(NodeKind::Operation { opcode: Opcode::Add }, vec![l[2], l[3]]);
        g.push(NodeKind::Store { array: 1, index: 0 }, vec![x]);
        g.push(NodeKind::Store { array: 1, index: 1 }, vec![y]);
        let gg = build_group_graph(&g);
        (g, gg)
    }

    #[test]
    fn diagonal_counts_sources_and_store() {
        let (g, gg) = fixture();
        let holder = vec![Some(0), Some(1), Some(0), Some(1), None, None, None, None];
        let store_slot = vec![None, None, None, None, None, None, Some(0), Some(0)];
        let ctx = ScoreContext {
            graph: &g,
            groups: &gg,
            vec_size: 4,
            holder: &holder,
            store_slot: &store_slot,
        };
        let op = gg.groups.iter().find(|gr| gr.members == [4, 5]).unwrap();
        let d = compute_score_matrix(op, &ctx).unwrap();
        assert_eq!(d.get(0, 0), 3.0);
        // src1 of both in vector 0, src2 of both in vector 1, shared slot
        assert_eq!(d.get(0, 1), 3.0);
        assert_eq!(d.get(1, 0), d.get(0, 1));
    }

    #[test]
    fn disjoint_members_score_zero() {
        let (g, gg) = fixture();
        let holder = vec![Some(0), Some(1), Some(2), Some(3), None, None, None, None];
        let store_slot = vec![None, None, None, None, None, None, Some(0), Some(1)];
        let ctx = ScoreContext {
            graph: &g,
            groups: &gg,
            vec_size: 4,
            holder: &holder,
            store_slot: &store_slot,
        };
        let op = gg.groups.iter().find(|gr| gr.members == [4, 5]).unwrap();
        assert_eq!(compute_score_matrix(op, &ctx).unwrap().get(0, 1), 0.0);
    }

    #[test]
    fn unsplit_predecessor_is_an_error() {
        let (g, gg) = fixture();
        let holder = vec![None; 8];
        let ctx = ScoreContext {
            graph: &g,
            groups: &gg,
            vec_size: 4,
            holder: &holder,
            store_slot: &holder,
        };
        let op = gg.groups.iter().find(|gr| gr.members == [4, 5]).unwrap();
        assert_eq!(
            compute_score_matrix(op, &ctx),
            Err(SplitError::UnsplitPredecessor { node: 4, operand: 0 })
        );
    }
}
