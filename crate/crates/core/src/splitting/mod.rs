//! Division of groups into vector-sized sub-groups.
//!
//! Load and store groups are cut into contiguous memory slots, every
//! combination of slot layouts is a separate search branch. Operation groups
//! are split with a score matrix and one of two heuristics.

mod cluster;
mod loadstore;
mod partition;
mod score;

pub use cluster::split_by_clustering;
pub use loadstore::{enumerate_load_store_splits, LoadStoreSplitChoice, Slot, SplitSpace};
pub use partition::split_by_partitioning;
pub use score::{compute_score_matrix, ScoreContext, ScoreMatrix};

use serde::{Deserialize, Serialize};

use crate::scalar::NodeId;

/// How operation groups larger than one vector are divided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Chunks in id order; lanes follow member order.
    Identity,
    Partitioning,
    Clustering,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Identity, Strategy::Partitioning, Strategy::Clustering];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Identity => "identity",
            Strategy::Partitioning => "partitioning",
            Strategy::Clustering => "clustering",
        }
    }

    pub fn from_name(s: &str) -> Option<Strategy> {
        Strategy::ALL.into_iter().find(|st| st.name() == s)
    }
}

/// Splits `members` into sub-groups of at most `vec_size` nodes.
///
/// Heuristic strategies return each sub-group with ascending ids; lane order
/// is decided later.
pub fn split_group(
    members: &[NodeId],
    scores: Option<&ScoreMatrix>,
    vec_size: usize,
    strategy: Strategy,
) -> Vec<Vec<NodeId>> {
    if members.len() <= vec_size {
        return vec![members.to_vec()];
    }
    let parts = match (strategy, scores) {
        (Strategy::Partitioning, Some(d)) => split_by_partitioning(d, vec_size),
        (Strategy::Clustering, Some(d)) => split_by_clustering(d, vec_size),
        _ => return members.chunks(vec_size).map(<[_]>::to_vec).collect(),
    };
    parts
        .into_iter()
        .map(|p| {
            let mut ids: Vec<NodeId> = p.into_iter().map(|i| members[i]).collect();
            ids.sort_unstable();
            ids
        })
        .collect()
}

/// Sum of `d(i, j)` over unordered pairs placed in the same sub-group.
pub fn intra_score(d: &ScoreMatrix, parts: &[Vec<usize>]) -> f64 {
    parts
        .iter()
        .map(|p| {
            let mut s = 0.0;
            for (k, &i) in p.iter().enumerate() {
                for &j in &p[k + 1..] {
                    s += d.get(i, j);
                }
            }
            s
        })
        .sum()
}
