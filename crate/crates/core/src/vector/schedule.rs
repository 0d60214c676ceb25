//! Register-pressure-aware list scheduling.

use std::cmp::Ordering;

use serde::Serialize;

use super::{id_order_checked, VectorGraph};

/// Cost differences below this are ties.
const EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScheduleResult {
    pub order: Vec<usize>,
    pub stack_accesses: usize,
}

/// Lowest-id-first topological order: the order nodes were built in.
pub fn id_order(vg: &VectorGraph) -> Vec<usize> {
    id_order_checked(vg).expect("vector graph is acyclic")
}

/// Longest distance from each node to a sink, over data and order edges.
pub fn invdepth(vg: &VectorGraph) -> Vec<usize> {
    let succs = vg.succs();
    let mut d = vec![0usize; vg.len()];
    for &id in id_order(vg).iter().rev() {
        d[id] = succs[id].iter().map(|&s| d[s] + 1).max().unwrap_or(0);
    }
    d
}

/// Register benefit of running `node` next: one register for a result that
/// has consumers, minus for each operand the share of it released here.
pub fn sched_cost(vg: &VectorGraph, consumers: &[Vec<usize>], node: usize, done: &[bool]) -> f64 {
    let mut cost = if consumers[node].is_empty() { 0.0 } else { 1.0 };
    let mut preds = vg.nodes[node].inputs.clone();
    preds.sort_unstable();
    preds.dedup();
    for p in preds {
        let counter = consumers[p].iter().filter(|&&s| !done[s]).count();
        cost -= 1.0 / counter.max(1) as f64;
    }
    cost
}

fn components(vg: &VectorGraph) -> Vec<Vec<usize>> {
    let n = vg.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (id, preds) in vg.preds().iter().enumerate() {
        for &p in preds {
            let (a, b) = (find(&mut parent, id), find(&mut parent, p));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut index = vec![usize::MAX; n];
    for id in 0..n {
        let r = find(&mut parent, id);
        if index[r] == usize::MAX {
            index[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[index[r]].push(id);
    }
    comps
}

/// Schedules each weakly connected component in turn (by lowest member id)
/// with a ready list sorted by cost, then larger invdepth, then id.
pub fn schedule(vg: &VectorGraph) -> Vec<usize> {
    let preds = vg.preds();
    let succs = vg.succs();
    let consumers = vg.consumers();
    let inv = invdepth(vg);
    let mut pending: Vec<usize> = preds.iter().map(Vec::len).collect();
    let mut done = vec![false; vg.len()];
    let mut order = Vec::with_capacity(vg.len());
    for comp in components(vg) {
        let mut ready: Vec<usize> = comp.iter().copied().filter(|&i| pending[i] == 0).collect();
        while !ready.is_empty() {
            let mut keyed: Vec<(f64, usize)> = ready
                .iter()
                .map(|&i| (sched_cost(vg, &consumers, i, &done), i))
                .collect();
            keyed.sort_by(|a, b| {
                let by_cost = if (a.0 - b.0).abs() < EPS {
                    Ordering::Equal
                } else {
                    a.0.total_cmp(&b.0)
                };
                by_cost.then(inv[b.1].cmp(&inv[a.1])).then(a.1.cmp(&b.1))
            });
            let next = keyed[0].1;
            ready.retain(|&i| i != next);
            done[next] = true;
            order.push(next);
            for &s in &succs[next] {
                pending[s] -= 1;
                if pending[s] == 0 {
                    ready.push(s);
                }
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ArrayDecl, ArrayRole, Opcode};
    use crate::vector::{check_order, VKind};

    fn arrays() -> Vec<ArrayDecl> {
        vec![
            ArrayDecl {
                name: "s".into(),
                role: ArrayRole::Input,
                len: 8,
            },
            ArrayDecl {
                name: "d".into(),
                role: ArrayRole::Output,
                len: 8,
            },
        ]
    }

    #[test]
    fn chain_has_one_order() {
        let mut vg = VectorGraph::new("c", 4, arrays());
        let a = vg.push(
            VKind::Load {
                array: 0,
                start: 0,
                count: 4,
            },
            vec![],
        );
        let b = vg.push(VKind::Permute(vec![1, 0, 3, 2]), vec![a]);
        vg.push(
            VKind::Store {
                array: 1,
                start: 0,
                count: 4,
                mask: vec![true; 4],
            },
            vec![b],
        );
        assert_eq!(schedule(&vg), [0, 1, 2]);
    }

    #[test]
    fn hand_evaluated_costs() {
        let mut vg = VectorGraph::new("c", 4, arrays());
        let a = vg.push(
            VKind::Load {
                array: 0,
                start: 0,
                count: 4,
            },
            vec![],
        );
        let b = vg.push(VKind::Permute(vec![1, 0, 3, 2]), vec![a]);
        let s = vg.push(
            VKind::Store {
                array: 1,
                start: 0,
                count: 4,
                mask: vec![true; 4],
            },
            vec![b],
        );
        let cons = vg.consumers();
        let mut done = vec![false; 3];
        assert_eq!(sched_cost(&vg, &cons, a, &done), 1.0);
        done[a] = true;
        assert_eq!(sched_cost(&vg, &cons, b, &done), 0.0);
        done[b] = true;
        assert_eq!(sched_cost(&vg, &cons, s, &done), -1.0);
    }

    #[test]
    fn components_run_back_to_back() {
        let mut vg = VectorGraph::new("c", 4, arrays());
        let a = vg.push(
            VKind::Load {
                array: 0,
                start: 0,
                count: 4,
            },
            vec![],
        );
        let b = vg.push(
            VKind::Load {
                array: 0,
                start: 4,
                count: 4,
            },
            vec![],
        );
        let x = vg.push(VKind::Op(Opcode::Add), vec![a, a]);
        let y = vg.push(VKind::Op(Opcode::Add), vec![b, b]);
        vg.push(
            VKind::Store {
                array: 1,
                start: 0,
                count: 4,
                mask: vec![true; 4],
            },
            vec![x],
        );
        vg.push(
            VKind::Store {
                array: 1,
                start: 4,
                count: 4,
                mask: vec![true; 4],
            },
            vec![y],
        );
        let order = schedule(&vg);
        check_order(&vg, &order).unwrap();
        assert_eq!(order, [0, 2, 4, 1, 3, 5]);
    }
}
