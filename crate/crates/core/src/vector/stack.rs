//! Stack-traffic proxy: a Belady register allocator over a fixed order.

use super::{check_order, VKind, VectorGraph};
use crate::error::VectorError;

/// Counts spill stores plus reloads when `order` runs with `registers`
/// vector registers.
///
/// Every non-store node defines a value that lives until its last consumer.
/// Operands are freed before the result is allocated. When no register is
/// free the resident value with the farthest next use is evicted; the first
/// eviction of a value costs one store, every reload costs one access.
pub fn simulate_stack_accesses(vg: &VectorGraph, order: &[usize], registers: usize) -> Result<usize, VectorError> {
    check_order(vg, order)?;
    let operands: Vec<Vec<usize>> = vg
        .nodes
        .iter()
        .map(|n| {
            let mut p = n.inputs.clone();
            p.sort_unstable();
            p.dedup();
            p
        })
        .collect();
    let needed = operands.iter().map(|p| p.len() + 1).max().unwrap_or(1);
    if registers < needed {
        return Err(VectorError::TooFewRegisters { needed, got: registers });
    }
    let n = vg.len();
    // Positions (in `order`) at which each value is read, ascending.
    let mut uses: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (pos, &id) in order.iter().enumerate() {
        for &p in &operands[id] {
            uses[p].push(pos);
        }
    }
    let mut cursor = vec![0usize; n];
    let next_use = |v: usize, cursor: &[usize]| uses[v].get(cursor[v]).copied().unwrap_or(usize::MAX);

    let mut resident: Vec<usize> = Vec::new();
    let mut in_memory = vec![false; n];
    let mut accesses = 0;

    let evict = |resident: &mut Vec<usize>,
                 in_memory: &mut [bool],
                 accesses: &mut usize,
                 cursor: &[usize],
                 pinned: &[usize]| {
        let (k, _) = resident
            .iter()
            .enumerate()
            .filter(|(_, v)| !pinned.contains(v))
            .max_by_key(|&(_, &v)| (next_use(v, cursor), std::cmp::Reverse(v)))
            .expect("enough registers for one instruction");
        let v = resident.swap_remove(k);
        if !in_memory[v] {
            in_memory[v] = true;
            *accesses += 1;
        }
    };

    for &id in order {
        let ops = &operands[id];
        for &p in ops {
            if !resident.contains(&p) {
                if resident.len() == registers {
                    evict(&mut resident, &mut in_memory, &mut accesses, &cursor, ops);
                }
                resident.push(p);
                accesses += 1;
            }
        }
        for &p in ops {
            cursor[p] += 1;
        }
        resident.retain(|&v| next_use(v, &cursor) != usize::MAX);
        if !matches!(vg.nodes[id].kind, VKind::Store { .. }) && !uses[id].is_empty() {
            if resident.len() == registers {
                evict(&mut resident, &mut in_memory, &mut accesses, &cursor, &[]);
            }
            resident.push(id);
        }
    }
    Ok(accesses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ArrayDecl, ArrayRole, Opcode};
    use crate::vector::id_order;

    fn fan(width: usize) -> VectorGraph {
        let arrays = vec![
            ArrayDecl {
                name: "s".into(),
                role: ArrayRole::Input,
                len: 4 * width,
            },
            ArrayDecl {
                name: "d".into(),
                role: ArrayRole::Output,
                len: 4,
            },
        ];
        let mut vg = VectorGraph::new("fan", 4, arrays);
        let loads: Vec<_> = (0..width)
            .map(|i| {
                vg.push(
                    VKind::Load {
                        array: 0,
                        start: 4 * i,
                        count: 4,
                    },
                    vec![],
                )
            })
            .collect();
        let acc = loads[1..]
            .iter()
            .fold(loads[0], |acc, &l| vg.push(VKind::Op(Opcode::Add), vec![acc, l]));
        vg.push(
            VKind::Store {
                array: 1,
                start: 0,
                count: 4,
                mask: vec![true; 4],
            },
            vec![acc],
        );
        vg
    }

    #[test]
    fn chain_needs_no_stack() {
        let vg = fan(1);
        assert_eq!(simulate_stack_accesses(&vg, &id_order(&vg), 2).unwrap(), 0);
    }

    #[test]
    fn many_registers_means_no_traffic() {
        let vg = fan(10);
        assert_eq!(simulate_stack_accesses(&vg, &id_order(&vg), vg.len()).unwrap(), 0);
    }

    #[test]
    fn loads_first_spill() {
        // ten loads live at once with four registers
        let vg = fan(10);
        let order = id_order(&vg);
        let spills = simulate_stack_accesses(&vg, &order, 4).unwrap();
        assert!(spills > 0);
        // interleaving each load with its add needs none
        let mut inter = vec![0];
        for i in 1..10 {
            inter.push(i);
            inter.push(9 + i);
        }
        inter.push(19);
        assert_eq!(simulate_stack_accesses(&vg, &inter, 4).unwrap(), 0);
    }

    #[test]
    fn too_few_registers() {
        let vg = fan(3);
        assert_eq!(
            simulate_stack_accesses(&vg, &id_order(&vg), 2),
            Err(VectorError::TooFewRegisters { needed: 3, got: 2 })
        );
    }
}
