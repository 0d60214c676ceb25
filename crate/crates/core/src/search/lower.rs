//! Builds the vector graph for one configuration.

use std::collections::{BTreeSet, HashMap};

use crate::error::{SearchError, SplitError};
use crate::grouping::{GroupGraph, GroupKind};
use crate::ordering::{fix_order, plan_gather, MemberLinks, MoveInput, OrderProblem, Request, ValueLoc};
use crate::scalar::{NodeId, NodeKind, ScalarGraph};
use crate::splitting::{
    compute_score_matrix, split_group, LoadStoreSplitChoice, ScoreContext, ScoreMatrix, Slot, Strategy,
};
use crate::vector::{VKind, VectorGraph};

/// Members of one vector instruction, `(scalar node, lane)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubGroup {
    pub group: usize,
    pub vector: usize,
    pub lanes: Vec<(NodeId, usize)>,
}

#[derive(Clone, Debug)]
pub struct Lowered {
    pub vector: VectorGraph,
    /// Where each scalar value ended up; `None` for stores.
    pub location: Vec<Option<ValueLoc>>,
    pub subgroups: Vec<SubGroup>,
    /// Score matrix of every operation group split with a heuristic.
    pub scores: Vec<(usize, ScoreMatrix)>,
}

struct Builder<'a> {
    graph: &'a ScalarGraph,
    vg: VectorGraph,
    location: Vec<Option<ValueLoc>>,
    gathers: HashMap<Request, usize>,
    subgroups: Vec<SubGroup>,
}

impl Builder<'_> {
    fn loc(&self, node: NodeId, operand: NodeId) -> Result<ValueLoc, SearchError> {
        self.location[operand].ok_or(SearchError::Split(SplitError::UnsplitPredecessor { node, operand }))
    }

    /// Vector holding exactly `request`, reusing an identical earlier gather.
    fn gather(&mut self, request: Request) -> usize {
        if let Some(&id) = self.gathers.get(&request) {
            return id;
        }
        let plan = plan_gather(&request, self.vg.vec_size).expect("request names at least one lane");
        let mut made = Vec::with_capacity(plan.moves.len());
        let resolve = |m: MoveInput, made: &[usize]| match m {
            MoveInput::Vector(v) => v,
            MoveInput::Move(k) => made[k],
        };
        for mv in plan.moves {
            let inputs = mv.inputs.iter().map(|&i| resolve(i, &made)).collect();
            made.push(self.vg.push(mv.kind, inputs));
        }
        let id = resolve(plan.result, &made);
        self.gathers.insert(request, id);
        id
    }

    fn operands(&self, node: NodeId) -> Vec<NodeId> {
        let inputs = &self.graph.node(node).inputs;
        if inputs.len() == 1 {
            vec![inputs[0], inputs[0]]
        } else {
            inputs.clone()
        }
    }
}

/// Lowers `graph` with the given slot layout and operation split strategy.
///
/// Groups are processed constants first, then loads, then operations and
/// reductions by depth, then stores, so every operand is placed before it
/// is needed.
pub fn lower(
    graph: &ScalarGraph,
    groups: &GroupGraph,
    choice: &LoadStoreSplitChoice,
    strategy: Strategy,
    vec_size: usize,
) -> Result<Lowered, SearchError> {
    let v = vec_size;
    let mut b = Builder {
        graph,
        vg: VectorGraph::new(graph.name.clone(), v, graph.arrays().to_vec()),
        location: vec![None; graph.id_bound()],
        gathers: HashMap::new(),
        subgroups: Vec::new(),
    };
    let mut scores = Vec::new();

    // Global id for every store slot, and the slot of each store node.
    let mut store_slots: Vec<(usize, Slot)> = Vec::new();
    let mut store_slot = vec![None; graph.id_bound()];
    for g in &groups.groups {
        if let GroupKind::Store { .. } = g.kind {
            for &slot in choice.slots_of(g.id) {
                for &m in &g.members {
                    let (_, idx) = graph.node(m).kind.memory().unwrap();
                    if slot.contains(idx) {
                        store_slot[m] = Some(store_slots.len());
                    }
                }
                store_slots.push((g.id, slot));
            }
        }
    }

    let mut vloads: Vec<(usize, Slot, usize)> = Vec::new();
    for g in &groups.groups {
        match g.kind {
            GroupKind::Set { constant } => {
                let id = b.vg.push(VKind::Broadcast(constant), vec![]);
                for &m in &g.members {
                    b.location[m] = Some(ValueLoc::splat(id));
                }
                b.subgroups.push(SubGroup {
                    group: g.id,
                    vector: id,
                    lanes: g.members.iter().map(|&m| (m, 0)).collect(),
                });
            }
            GroupKind::Load { array } => {
                for &slot in choice.slots_of(g.id) {
                    let id = b.vg.push(
                        VKind::Load {
                            array,
                            start: slot.start,
                            count: slot.count,
                        },
                        vec![],
                    );
                    vloads.push((array, slot, id));
                    let mut lanes = Vec::new();
                    for &m in &g.members {
                        let (_, idx) = graph.node(m).kind.memory().unwrap();
                        if slot.contains(idx) {
                            b.location[m] = Some(ValueLoc::at(id, idx - slot.start));
                            lanes.push((m, idx - slot.start));
                        }
                    }
                    b.subgroups.push(SubGroup {
                        group: g.id,
                        vector: id,
                        lanes,
                    });
                }
            }
            _ => {}
        }
    }

    let mut compute: Vec<usize> = groups
        .groups
        .iter()
        .filter(|g| matches!(g.kind, GroupKind::Op { .. } | GroupKind::Reduce { .. }))
        .map(|g| g.id)
        .collect();
    let depth = |gid: usize| match groups.groups[gid].kind {
        GroupKind::Op { depth, .. } | GroupKind::Reduce { depth, .. } => depth,
        _ => 0,
    };
    compute.sort_by_key(|&gid| (depth(gid), gid));

    for gid in compute {
        let g = &groups.groups[gid];
        match g.kind {
            GroupKind::Op { opcode, .. } => {
                let matrix = if strategy == Strategy::Identity {
                    None
                } else {
                    let holder: Vec<Option<usize>> = b.location.iter().map(|l| l.map(|l| l.vector)).collect();
                    let ctx = ScoreContext {
                        graph,
                        groups,
                        vec_size: v,
                        holder: &holder,
                        store_slot: &store_slot,
                    };
                    Some(compute_score_matrix(g, &ctx)?)
                };
                let parts = split_group(&g.members, matrix.as_ref(), v, strategy);
                if let Some(m) = matrix {
                    scores.push((gid, m));
                }
                for part in parts {
                    let lanes = if strategy == Strategy::Identity {
                        (0..part.len()).collect()
                    } else {
                        fix_order(&order_problem(&b, &part, &store_slot, &store_slots, v)?)
                    };
                    let arity = part.iter().map(|&m| b.operands(m).len()).max().unwrap_or(2);
                    let mut inputs = Vec::with_capacity(arity);
                    for k in 0..arity {
                        let mut request = vec![None; v];
                        for (&m, &l) in part.iter().zip(&lanes) {
                            let src = b.operands(m)[k];
                            request[l] = Some(b.loc(m, src)?);
                        }
                        inputs.push(b.gather(request));
                    }
                    let id = b.vg.push(VKind::Op(opcode), inputs);
                    for (&m, &l) in part.iter().zip(&lanes) {
                        b.location[m] = Some(ValueLoc::at(id, l));
                    }
                    b.subgroups.push(SubGroup {
                        group: gid,
                        vector: id,
                        lanes: part.iter().copied().zip(lanes).collect(),
                    });
                }
            }
            GroupKind::Reduce { opcode, .. } => {
                for &m in &g.members {
                    let inputs = &graph.node(m).inputs;
                    let mut request = vec![None; v];
                    for &i in inputs {
                        let loc = b.loc(m, i)?;
                        let lane = match loc.lane {
                            crate::ordering::Lane::At(l) if request[l].is_none() => l,
                            _ => (0..v).find(|&l| request[l].is_none()).expect("reduction fits a vector"),
                        };
                        request[lane] = Some(loc);
                    }
                    let mask: Vec<bool> = request.iter().map(Option::is_some).collect();
                    let src = b.gather(request);
                    let id = b.vg.push(VKind::Reduce { opcode, mask }, vec![src]);
                    b.location[m] = Some(ValueLoc::splat(id));
                    b.subgroups.push(SubGroup {
                        group: gid,
                        vector: id,
                        lanes: vec![(m, 0)],
                    });
                }
            }
            _ => unreachable!(),
        }
    }

    for (sid, &(gid, slot)) in store_slots.iter().enumerate() {
        let GroupKind::Store { array } = groups.groups[gid].kind else {
            unreachable!()
        };
        let mut request = vec![None; v];
        let mut lanes = Vec::new();
        for &m in &groups.groups[gid].members {
            if store_slot[m] == Some(sid) {
                let (_, idx) = graph.node(m).kind.memory().unwrap();
                let lane = idx - slot.start;
                request[lane] = Some(b.loc(m, graph.node(m).inputs[0])?);
                lanes.push((m, lane));
            }
        }
        let mask = (0..slot.count).map(|l| request[l].is_some()).collect();
        let src = b.gather(request);
        let id = b.vg.push(
            VKind::Store {
                array,
                start: slot.start,
                count: slot.count,
                mask,
            },
            vec![src],
        );
        let overlap = |s: &Slot| s.start < slot.start + slot.count && slot.start < s.start + s.count;
        b.vg.nodes[id].after = vloads
            .iter()
            .filter(|(a, s, _)| *a == array && overlap(s))
            .map(|&(_, _, l)| l)
            .collect();
        b.subgroups.push(SubGroup {
            group: gid,
            vector: id,
            lanes,
        });
    }

    b.vg.validate()?;
    Ok(Lowered {
        vector: b.vg,
        location: b.location,
        subgroups: b.subgroups,
        scores,
    })
}

fn order_problem(
    b: &Builder,
    part: &[NodeId],
    store_slot: &[Option<usize>],
    store_slots: &[(usize, Slot)],
    v: usize,
) -> Result<OrderProblem, SearchError> {
    let members: BTreeSet<NodeId> = part.iter().copied().collect();
    let mut links = Vec::with_capacity(part.len());
    let mut touched = BTreeSet::new();
    for &m in part {
        let operands = b
            .operands(m)
            .iter()
            .map(|&i| b.loc(m, i).map(Some))
            .collect::<Result<Vec<_>, _>>()?;
        let mut stores = Vec::new();
        for &c in b.graph.consumers(m) {
            if let (NodeKind::Store { index, .. }, Some(sid)) = (b.graph.node(c).kind, store_slot[c]) {
                stores.push((sid, index - store_slots[sid].1.start));
                touched.insert(sid);
            }
        }
        links.push(MemberLinks { operands, stores });
    }
    // A slot only depends on this order if nothing else feeds it.
    let exclusive_slots = touched
        .into_iter()
        .filter(|&sid| {
            b.graph
                .ids()
                .filter(|&n| store_slot[n] == Some(sid))
                .all(|n| members.contains(&b.graph.node(n).inputs[0]))
        })
        .collect();
    Ok(OrderProblem {
        vec_size: v,
        members: links,
        exclusive_slots,
    })
}
