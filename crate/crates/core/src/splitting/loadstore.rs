use serde::Serialize;

use crate::grouping::{GroupGraph, GroupKind};
use crate::scalar::{ArrayId, NodeKind, ScalarGraph};

/// A contiguous run of array elements held by one vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Slot {
    pub start: usize,
    pub count: usize,
}

impl Slot {
    pub fn contains(&self, index: usize) -> bool {
        (self.start..self.start + self.count).contains(&index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct MemGroup {
    group: usize,
    array: ArrayId,
    /// One slot layout per possible position of the partial vector.
    options: Vec<Vec<Slot>>,
}

/// Every slot layout of every load and store group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitSpace {
    groups: Vec<MemGroup>,
}

/// One point of the load/store split space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LoadStoreSplitChoice {
    pub index: usize,
    /// Per memory group: `(group id, array, slots)`.
    pub slots: Vec<(usize, ArrayId, Vec<Slot>)>,
}

impl LoadStoreSplitChoice {
    pub fn slots_of(&self, group: usize) -> &[Slot] {
        self.slots
            .iter()
            .find(|s| s.0 == group)
            .map(|s| s.2.as_slice())
            .unwrap_or(&[])
    }
}

/// Slot layouts for the accessed index range `lo..=hi`.
///
/// With `L = k * vec_size + r` elements there is one layout when `r == 0`
/// and `k + 1` layouts otherwise, one per position of the partial slot.
/// Slots covering no accessed element are dropped.
fn layouts(indices: &[usize], vec_size: usize) -> Vec<Vec<Slot>> {
    let (lo, hi) = (indices[0], *indices.last().unwrap());
    let len = hi - lo + 1;
    let (k, r) = (len / vec_size, len % vec_size);
    let positions = if r == 0 { 1 } else { k + 1 };
    (0..positions)
        .map(|p| {
            let mut slots = Vec::new();
            let mut start = lo;
            for j in 0..(if r == 0 { k } else { k + 1 }) {
                let count = if r != 0 && j == p { r } else { vec_size };
                let slot = Slot { start, count };
                if indices.iter().any(|&i| slot.contains(i)) {
                    slots.push(slot);
                }
                start += count;
            }
            slots
        })
        .collect()
}

impl SplitSpace {
    pub fn new(graph: &ScalarGraph, gg: &GroupGraph, vec_size: usize) -> Self {
        let groups = gg
            .groups
            .iter()
            .filter_map(|g| {
                let array = match g.kind {
                    GroupKind::Load { array } | GroupKind::Store { array } => array,
                    _ => return None,
                };
                let mut indices: Vec<usize> = g
                    .members
                    .iter()
                    .filter_map(|&m| match graph.node(m).kind {
                        NodeKind::Load { index, .. } | NodeKind::Store { index, .. } => Some(index),
                        _ => None,
                    })
                    .collect();
                indices.sort_unstable();
                indices.dedup();
                Some(MemGroup {
                    group: g.id,
                    array,
                    options: layouts(&indices, vec_size),
                })
            })
            .collect();
        SplitSpace { groups }
    }

    /// Number of choices per memory group, in group order.
    pub fn radices(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.options.len()).collect()
    }

    /// Product of the radices, saturating.
    pub fn total(&self) -> u128 {
        self.groups
            .iter()
            .fold(1u128, |acc, g| acc.saturating_mul(g.options.len() as u128))
    }

    /// The `k`-th choice in lexicographic order, first group most significant.
    pub fn choice(&self, k: usize) -> LoadStoreSplitChoice {
        let mut rest = k;
        let mut picks = vec![0; self.groups.len()];
        for (i, g) in self.groups.iter().enumerate().rev() {
            picks[i] = rest % g.options.len();
            rest /= g.options.len();
        }
        LoadStoreSplitChoice {
            index: k,
            slots: self
                .groups
                .iter()
                .zip(picks)
                .map(|(g, p)| (g.group, g.array, g.options[p].clone()))
                .collect(),
        }
    }

    /// Choices `0..min(total, c_max)`.
    pub fn enumerate(&self, c_max: usize) -> Vec<LoadStoreSplitChoice> {
        let n = self.total().min(c_max as u128) as usize;
        (0..n).map(|k| self.choice(k)).collect()
    }
}

/// All load/store slot layouts, truncated to the first `c_max` in
/// lexicographic order.
pub fn enumerate_load_store_splits(
    graph: &ScalarGraph,
    gg: &GroupGraph,
    vec_size: usize,
    c_max: usize,
) -> Vec<LoadStoreSplitChoice> {
    SplitSpace::new(graph, gg, vec_size).enumerate(c_max)
}
