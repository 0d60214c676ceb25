use super::{check_order, id_order_checked, VKind, VectorGraph};
use crate::error::VectorError;
use crate::scalar::MemoryImage;

/// Evaluates the graph lane by lane in lowest-id topological order.
pub fn interpret_vector(vg: &VectorGraph, mem: &MemoryImage) -> Result<MemoryImage, VectorError> {
    vg.validate()?;
    let order = id_order_checked(vg).ok_or(VectorError::Cycle)?;
    run(vg, mem, &order)
}

/// Evaluates in a caller-supplied topological order.
///
/// Memory is live: a load sees stores that ran before it. Undefined lanes may
/// flow through element-wise nodes but must not reach a store or reduction.
pub fn interpret_vector_with_order(
    vg: &VectorGraph,
    mem: &MemoryImage,
    order: &[usize],
) -> Result<MemoryImage, VectorError> {
    vg.validate()?;
    check_order(vg, order)?;
    run(vg, mem, order)
}

fn run(vg: &VectorGraph, mem: &MemoryImage, order: &[usize]) -> Result<MemoryImage, VectorError> {
    if mem.check_covers(&vg.arrays).is_err() {
        return Err(VectorError::MemoryShape);
    }
    let v = vg.vec_size;
    let mut out = mem.clone();
    let mut lanes: Vec<Vec<Option<f64>>> = vec![Vec::new(); vg.len()];
    for &id in order {
        let node = &vg.nodes[id];
        let arg = |k: usize| &lanes[node.inputs[k]];
        let undefined = |src: usize, lane: usize| VectorError::UninitializedLane {
            node: id,
            source_node: node.inputs[src],
            lane,
        };
        let value: Vec<Option<f64>> = match &node.kind {
            VKind::Load { array, start, count } => (0..v)
                .map(|l| (l < *count).then(|| out.buffers[*array][start + l]))
                .collect(),
            VKind::Broadcast(c) => vec![Some(*c); v],
            VKind::Op(op) => arg(0)
                .iter()
                .zip(arg(1))
                .map(|(a, b)| Some(op.apply((*a)?, (*b)?)))
                .collect(),
            VKind::Permute(p) => p.iter().map(|&s| arg(0)[s]).collect(),
            VKind::Extract(p) => p.iter().map(|s| s.and_then(|s| arg(0)[s])).collect(),
            VKind::Merge(p) => p
                .iter()
                .map(|s| s.and_then(|s| if s < v { arg(0)[s] } else { arg(1)[s - v] }))
                .collect(),
            VKind::Reduce { opcode, mask } => {
                let mut acc: Option<f64> = None;
                for (l, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
                    let x = arg(0)[l].ok_or_else(|| undefined(0, l))?;
                    acc = Some(match acc {
                        None => x,
                        Some(a) => opcode.apply(a, x),
                    });
                }
                vec![acc; v]
            }
            VKind::Store { array, start, mask, .. } => {
                for (l, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
                    out.buffers[*array][start + l] = arg(0)[l].ok_or_else(|| undefined(0, l))?;
                }
                arg(0).clone()
            }
        };
        lanes[id] = value;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ArrayDecl, ArrayRole, Opcode};

    fn arrays() -> Vec<ArrayDecl> {
        vec![
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
        ]
    }

    #[test]
    fn roundtrip_copies() {
        let mut vg = VectorGraph::new("c", 4, arrays());
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
        let mem = MemoryImage::random(&vg.arrays, 9, 0.0, 1.0);
        let out = interpret_vector(&vg, &mem).unwrap();
        assert_eq!(out.buffers[1], mem.buffers[0]);
    }

    #[test]
    fn partial_lanes_must_not_reach_store() {
        let mut vg = VectorGraph::new("p", 4, arrays());
        let l = vg.push(
            VKind::Load {
                array: 0,
                start: 0,
                count: 2,
            },
            vec![],
        );
        vg.push(
            VKind::Store {
                array: 1,
                start: 0,
                count: 3,
                mask: vec![true; 3],
            },
            vec![l],
        );
        let mem = MemoryImage::zeroed(&vg.arrays);
        assert_eq!(
            interpret_vector(&vg, &mem),
            Err(VectorError::UninitializedLane {
                node: 1,
                source_node: 0,
                lane: 2
            })
        );
    }

    #[test]
    fn merge_reduce_and_permute() {
        let mut vg = VectorGraph::new("m", 4, arrays());
        let a = vg.push(
            VKind::Load {
                array: 0,
                start: 0,
                count: 4,
            },
            vec![],
        );
        let b = vg.push(VKind::Broadcast(10.0), vec![]);
        let m = vg.push(VKind::Merge(vec![Some(3), Some(4), None, Some(0)]), vec![a, b]);
        let r = vg.push(
            VKind::Reduce {
                opcode: Opcode::Add,
                mask: vec![true, true, false, true],
            },
            vec![m],
        );
        let p = vg.push(VKind::Permute(vec![1, 0, 3, 2]), vec![a]);
        let s = vg.push(VKind::Op(Opcode::Mul), vec![p, r]);
        vg.push(
            VKind::Store {
                array: 1,
                start: 0,
                count: 4,
                mask: vec![true; 4],
            },
            vec![s],
        );
        let mem = MemoryImage {
            buffers: vec![vec![1.0, 2.0, 3.0, 4.0], vec![0.0; 4]],
        };
        let out = interpret_vector(&vg, &mem).unwrap();
        // reduce: 4 + 10 + 1 = 15
        assert_eq!(out.buffers[1], [30.0, 15.0, 60.0, 45.0]);
    }
}
