//! Lane order of operation sub-groups and the data moves it implies.
//!
//! Predecessor vectors and store slots have fixed lane positions. Placing an
//! operation in a lane that disagrees with where its operands live (or where
//! its result must be stored) costs a permute, extract or merge. Moves are
//! counted per gathered vector, so one permute fixes any number of lanes
//! coming from a single source.

use std::collections::BTreeSet;

use crate::vector::VKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lane {
    At(usize),
    /// The value fills every lane (broadcasts, reductions).
    Splat,
}

/// Where a scalar value lives in the vector graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueLoc {
    pub vector: usize,
    pub lane: Lane,
}

impl ValueLoc {
    pub fn at(vector: usize, lane: usize) -> Self {
        ValueLoc {
            vector,
            lane: Lane::At(lane),
        }
    }

    pub fn splat(vector: usize) -> Self {
        ValueLoc {
            vector,
            lane: Lane::Splat,
        }
    }

    /// Source lane to read so the value lands in `dest`.
    fn source_lane(&self, dest: usize) -> usize {
        match self.lane {
            Lane::At(l) => l,
            Lane::Splat => dest,
        }
    }
}

/// Desired content of a vector: lane `l` must hold `request[l]`; `None`
/// lanes are free.
pub type Request = Vec<Option<ValueLoc>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveInput {
    Vector(usize),
    /// Result of an earlier move of the same plan.
    Move(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataMove {
    pub kind: VKind,
    pub inputs: Vec<MoveInput>,
}

/// Moves that assemble a request, and where the result ends up.
#[derive(Clone, Debug, PartialEq)]
pub struct GatherPlan {
    pub moves: Vec<DataMove>,
    pub result: MoveInput,
}

/// Lowers a request into the canonical move set: nothing when a single source
/// is already aligned, one permute (all lanes) or extract (some lanes) for a
/// misaligned single source, and a chain of `s - 1` two-input merges for `s`
/// sources. Returns `None` when no lane is requested.
pub fn plan_gather(request: &[Option<ValueLoc>], vec_size: usize) -> Option<GatherPlan> {
    let mut sources: Vec<usize> = Vec::new();
    for loc in request.iter().flatten() {
        if !sources.contains(&loc.vector) {
            sources.push(loc.vector);
        }
    }
    let first = *sources.first()?;
    if sources.len() == 1 {
        let aligned = request
            .iter()
            .enumerate()
            .all(|(l, r)| r.is_none_or(|loc| loc.source_lane(l) == l));
        if aligned {
            return Some(GatherPlan {
                moves: vec![],
                result: MoveInput::Vector(first),
            });
        }
        let pattern: Vec<Option<usize>> = request
            .iter()
            .enumerate()
            .map(|(l, r)| r.map(|loc| loc.source_lane(l)))
            .collect();
        let kind = if pattern.iter().all(Option::is_some) {
            VKind::Permute(pattern.into_iter().flatten().collect())
        } else {
            VKind::Extract(pattern)
        };
        return Some(GatherPlan {
            moves: vec![DataMove {
                kind,
                inputs: vec![MoveInput::Vector(first)],
            }],
            result: MoveInput::Move(0),
        });
    }
    let mut moves = Vec::new();
    let mut filled = vec![false; vec_size];
    let mut acc = MoveInput::Vector(first);
    for (k, &src) in sources.iter().enumerate().skip(1) {
        let pattern: Vec<Option<usize>> = request
            .iter()
            .enumerate()
            .map(|(l, r)| match r {
                Some(loc) if k == 1 && loc.vector == first => Some(loc.source_lane(l)),
                Some(loc) if loc.vector == src => Some(vec_size + loc.source_lane(l)),
                _ if filled[l] => Some(l),
                _ => None,
            })
            .collect();
        for (l, r) in request.iter().enumerate() {
            if r.is_some_and(|loc| loc.vector == src || (k == 1 && loc.vector == first)) {
                filled[l] = true;
            }
        }
        moves.push(DataMove {
            kind: VKind::Merge(pattern),
            inputs: vec![acc, MoveInput::Vector(src)],
        });
        acc = MoveInput::Move(moves.len() - 1);
    }
    Some(GatherPlan { moves, result: acc })
}

/// Number of moves [`plan_gather`] emits for a request.
pub fn gather_cost(request: &[Option<ValueLoc>], _vec_size: usize) -> usize {
    request_cost(request.iter().enumerate().filter_map(|(l, r)| r.map(|loc| (l, loc))))
}

fn request_cost(lanes: impl Iterator<Item = (usize, ValueLoc)>) -> usize {
    let mut sources: Vec<usize> = Vec::new();
    let mut aligned = true;
    for (l, loc) in lanes {
        if !sources.contains(&loc.vector) {
            sources.push(loc.vector);
        }
        aligned &= loc.source_lane(l) == l;
    }
    match sources.len() {
        0 => 0,
        1 => usize::from(!aligned),
        s => s - 1,
    }
}

/// What one member of a sub-group is connected to.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MemberLinks {
    /// Location of each operand; `None` for a missing operand.
    pub operands: Vec<Option<ValueLoc>>,
    /// Store slots fed by this member and the lane each one expects.
    pub stores: Vec<(usize, usize)>,
}

/// Lane-assignment problem for one sub-group.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderProblem {
    pub vec_size: usize,
    pub members: Vec<MemberLinks>,
    /// Store slots whose every lane comes from this sub-group. Only those
    /// depend on this sub-group's order.
    pub exclusive_slots: BTreeSet<usize>,
}

/// Placeholder vector id for the sub-group's own result.
const SELF: usize = usize::MAX;

impl OrderProblem {
    fn arity(&self) -> usize {
        self.members.iter().map(|m| m.operands.len()).max().unwrap_or(0)
    }

    /// Lanes each member would like to occupy, deduplicated.
    pub fn desired(&self, m: usize) -> BTreeSet<usize> {
        let links = &self.members[m];
        links
            .operands
            .iter()
            .flatten()
            .filter_map(|loc| match loc.lane {
                Lane::At(l) => Some(l),
                Lane::Splat => None,
            })
            .chain(links.stores.iter().map(|s| s.1))
            .collect()
    }

    /// Moves implied by a (possibly partial) assignment: one gather per
    /// distinct operand vector plus one per exclusive store slot.
    pub fn count_extracts(&self, lanes: &[Option<usize>]) -> usize {
        let placed = || lanes.iter().enumerate().filter_map(|(m, l)| l.map(|l| (m, l)));
        let operand = |m: usize, k: usize| self.members[m].operands.get(k).copied().flatten();
        let mut cost = 0;
        for k in 0..self.arity() {
            // Requests equal to an earlier operand's are gathered once.
            if (0..k).any(|j| placed().all(|(m, _)| operand(m, j) == operand(m, k))) {
                continue;
            }
            cost += request_cost(placed().filter_map(|(m, l)| operand(m, k).map(|loc| (l, loc))));
        }
        for &slot in &self.exclusive_slots {
            let stores = placed().flat_map(|(m, l)| {
                self.members[m]
                    .stores
                    .iter()
                    .filter(move |&&(s, _)| s == slot)
                    .map(move |&(_, dest)| (dest, ValueLoc::at(SELF, l)))
            });
            cost += request_cost(stores);
        }
        cost
    }
}

/// Places `members` one at a time on the vacant lane with the lowest
/// incremental move count.
fn place_greedy(
    problem: &OrderProblem,
    desired: &[BTreeSet<usize>],
    members: &[usize],
    lanes: &mut [Option<usize>],
    used: &mut [bool],
) {
    for &m in members {
        let mut best: Option<(usize, bool, usize)> = None;
        for l in (0..used.len()).filter(|&l| !used[l]) {
            lanes[m] = Some(l);
            let key = (problem.count_extracts(lanes), !desired[m].contains(&l), l);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        let l = best.unwrap().2;
        lanes[m] = Some(l);
        used[l] = true;
    }
}

/// Assigns one lane per member.
///
/// Members are ranked by how many others compete for one of their desired
/// lanes (descending, then index). Members with a single desired lane take
/// it if free. Everyone else goes, in rank order, to the vacant lane whose
/// choice gives the fewest moves once the remaining members are placed
/// greedily, preferring a desired lane and then the lowest.
pub fn fix_order(problem: &OrderProblem) -> Vec<usize> {
    let n = problem.members.len();
    let v = problem.vec_size;
    assert!(n <= v, "sub-group larger than a vector");
    let desired: Vec<BTreeSet<usize>> = (0..n).map(|m| problem.desired(m)).collect();
    let constraints: Vec<usize> = (0..n)
        .map(|m| {
            (0..n)
                .filter(|&o| o != m && !desired[m].is_disjoint(&desired[o]))
                .count()
        })
        .collect();
    let mut rank: Vec<usize> = (0..n).collect();
    rank.sort_by(|&a, &b| constraints[b].cmp(&constraints[a]).then(a.cmp(&b)));

    let mut lanes: Vec<Option<usize>> = vec![None; n];
    let mut used = vec![false; v];
    for &m in &rank {
        if desired[m].len() == 1 {
            let l = *desired[m].first().unwrap();
            if !used[l] {
                lanes[m] = Some(l);
                used[l] = true;
            }
        }
    }
    let pending: Vec<usize> = rank.iter().copied().filter(|&m| lanes[m].is_none()).collect();
    for (k, &m) in pending.iter().enumerate() {
        // Adding members never removes moves, so a completion that costs no
        // more than the lanes fixed so far cannot be beaten.
        let floor = problem.count_extracts(&lanes);
        let mut quick = lanes.clone();
        let mut quick_used = used.clone();
        place_greedy(problem, &desired, &pending[k..], &mut quick, &mut quick_used);
        if problem.count_extracts(&quick) == floor {
            lanes = quick;
            break;
        }
        let mut best: Option<(usize, bool, usize)> = None;
        for l in (0..v).filter(|&l| !used[l]) {
            let mut trial = lanes.clone();
            let mut trial_used = used.clone();
            trial[m] = Some(l);
            trial_used[l] = true;
            place_greedy(problem, &desired, &pending[k + 1..], &mut trial, &mut trial_used);
            let key = (problem.count_extracts(&trial), !desired[m].contains(&l), l);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        let l = best.unwrap().2;
        lanes[m] = Some(l);
        used[l] = true;
    }
    lanes.into_iter().map(Option::unwrap).collect()
}
