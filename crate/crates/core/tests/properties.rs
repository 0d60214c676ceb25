use std::collections::BTreeSet;

use graphvec::corpus::{lift_scalar, make_kernel, make_predx, KernelSpec, PredXSpec, Signature};
use graphvec::ordering::{fix_order, gather_cost, plan_gather, Lane, MemberLinks, MoveInput, OrderProblem, ValueLoc};
use graphvec::reduction::apply_all;
use graphvec::scalar::{dedup, interpret_scalar, MemoryImage, Opcode};
use graphvec::splitting::{split_by_clustering, split_by_partitioning, ScoreMatrix};
use graphvec::vector::{
    check_order, id_order, interpret_vector_with_order, parse_vector_ir, schedule, simulate_stack_accesses,
    to_vector_ir, VKind,
};
use proptest::prelude::*;

fn predx() -> impl Strategy<Value = PredXSpec> {
    (1usize..=10, 1usize..=120, any::<u64>()).prop_map(|(x, size, seed)| PredXSpec { x, size, seed })
}

fn signature() -> impl Strategy<Value = Signature> {
    prop::sample::select(Signature::ALL.to_vec())
}

fn score_matrix() -> impl Strategy<Value = ScoreMatrix> {
    (2usize..=12).prop_flat_map(|n| {
        prop::collection::vec(0u8..=4, n * n).prop_map(move |raw| {
            ScoreMatrix::from_fn(n, |i, j| {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                raw[a * n + b] as f64
            })
        })
    })
}

/// Value held in each lane after running `plan` on the source vectors, where
/// source vector `v` holds `(v, l)` in lane `l`.
fn replay(request: &[Option<ValueLoc>], vec: usize) -> Vec<Option<(usize, usize)>> {
    let plan = plan_gather(request, vec).unwrap();
    let source = |v: usize| (0..vec).map(|l| Some((v, l))).collect::<Vec<_>>();
    let mut results: Vec<Vec<Option<(usize, usize)>>> = Vec::new();
    let fetch = |input: &MoveInput, results: &Vec<Vec<Option<(usize, usize)>>>| match *input {
        MoveInput::Vector(v) => source(v),
        MoveInput::Move(k) => results[k].clone(),
    };
    for m in &plan.moves {
        let a = fetch(&m.inputs[0], &results);
        let out = match &m.kind {
            VKind::Permute(p) => p.iter().map(|&i| a[i]).collect(),
            VKind::Extract(p) => p.iter().map(|i| i.and_then(|i| a[i])).collect(),
            VKind::Merge(p) => {
                let b = fetch(&m.inputs[1], &results);
                p.iter()
                    .map(|i| i.and_then(|i| if i < vec { a[i] } else { b[i - vec] }))
                    .collect()
            }
            other => panic!("unexpected move {other:?}"),
        };
        results.push(out);
    }
    fetch(&plan.result, &results)
}

fn request(vec: usize) -> impl Strategy<Value = Vec<Option<ValueLoc>>> {
    prop::collection::vec(prop::option::of((0usize..3, 0..vec)), vec)
        .prop_filter("non-empty", |r| r.iter().any(Option::is_some))
        .prop_map(|r| r.into_iter().map(|o| o.map(|(v, l)| ValueLoc::at(v, l))).collect())
}

fn order_problem() -> impl Strategy<Value = OrderProblem> {
    (1usize..=4, prop::bool::ANY).prop_flat_map(|(n, store)| {
        let member = (
            prop::collection::vec(prop::option::of((0usize..3, 0usize..4)), 2),
            0usize..4,
        );
        (prop::collection::vec(member, n), Just(store)).prop_map(|(ms, store)| {
            let mut seen = BTreeSet::new();
            let members = ms
                .into_iter()
                .map(|(ops, dest)| MemberLinks {
                    operands: ops.into_iter().map(|o| o.map(|(v, l)| ValueLoc::at(v, l))).collect(),
                    stores: if store && seen.insert(dest) {
                        vec![(0, dest)]
                    } else {
                        vec![]
                    },
                })
                .collect();
            OrderProblem {
                vec_size: 4,
                members,
                exclusive_slots: if store { BTreeSet::from([0]) } else { BTreeSet::new() },
            }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dedup_keeps_semantics(spec in predx(), seed in any::<u64>()) {
        let g = make_predx(&spec);
        let d = dedup(&g);
        prop_assert!(d.len() <= g.len());
        let mem = MemoryImage::random(g.arrays(), seed, -4.0, 4.0);
        prop_assert!(interpret_scalar(&g, &mem).unwrap().bit_eq(&interpret_scalar(&d, &mem).unwrap()));
    }

    #[test]
    fn reduction_keeps_semantics(sig in signature(), size in 1usize..40, vec in prop::sample::select(vec![2usize, 4, 8]), seed in any::<u64>()) {
        let g = make_kernel(&KernelSpec::new(sig, size, Opcode::Add)).unwrap();
        let (r, rewrites) = apply_all(&dedup(&g), vec).unwrap();
        for rw in &rewrites {
            prop_assert!(rw.chains.len() <= vec);
        }
        let mem = MemoryImage::random(g.arrays(), seed, 1.0, 2.0);
        let want = interpret_scalar(&g, &mem).unwrap();
        let got = interpret_scalar(&r, &mem).unwrap();
        prop_assert!(want.max_rel_diff(&got) <= 1e-12);
    }

    #[test]
    fn splits_are_capacity_respecting_partitions(d in score_matrix(), vec in prop::sample::select(vec![2usize, 4])) {
        let n = d.len();
        for parts in [split_by_partitioning(&d, vec), split_by_clustering(&d, vec)] {
            prop_assert_eq!(parts.len(), n.div_ceil(vec));
            prop_assert!(parts.iter().all(|p| !p.is_empty() && p.len() <= vec));
            let mut all: Vec<usize> = parts.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn gather_plan_delivers_request(
        (vec, r) in prop::sample::select(vec![2usize, 4, 8]).prop_flat_map(|v| (Just(v), request(v)))
    ) {
        let got = replay(&r, vec);
        for (l, want) in r.iter().enumerate() {
            if let Some(loc) = want {
                let Lane::At(src) = loc.lane else { unreachable!() };
                prop_assert_eq!(got[l], Some((loc.vector, src)));
            }
        }
        prop_assert_eq!(gather_cost(&r, vec), plan_gather(&r, vec).unwrap().moves.len());
    }

    #[test]
    fn order_is_lane_injective_and_relabel_invariant(p in order_problem()) {
        let lanes = fix_order(&p);
        prop_assert_eq!(lanes.len(), p.members.len());
        prop_assert!(lanes.iter().all(|&l| l < p.vec_size));
        prop_assert_eq!(lanes.iter().collect::<BTreeSet<_>>().len(), lanes.len());

        let assignment: Vec<Option<usize>> = lanes.iter().map(|&l| Some(l)).collect();
        let mut renamed = p.clone();
        for m in &mut renamed.members {
            for loc in m.operands.iter_mut().flatten() {
                loc.vector = 10 + (2 - loc.vector);
            }
        }
        prop_assert_eq!(p.count_extracts(&assignment), renamed.count_extracts(&assignment));
    }

    #[test]
    fn schedule_is_topological_and_equivalent(spec in predx(), vec in prop::sample::select(vec![2usize, 4])) {
        let vg = lift_scalar(&make_predx(&spec), vec);
        let order = schedule(&vg);
        check_order(&vg, &order).unwrap();
        let mem = MemoryImage::random(&vg.arrays, spec.seed, -2.0, 2.0);
        let by_id = interpret_vector_with_order(&vg, &mem, &id_order(&vg)).unwrap();
        let by_schedule = interpret_vector_with_order(&vg, &mem, &order).unwrap();
        prop_assert!(by_id.bit_eq(&by_schedule));
        prop_assert_eq!(simulate_stack_accesses(&vg, &order, vg.len() + 3).unwrap(), 0);
    }

    #[test]
    fn census_covers_every_node(spec in predx()) {
        let vg = lift_scalar(&make_predx(&spec), 4);
        prop_assert_eq!(vg.census().total(), vg.len());
    }

    #[test]
    fn vector_ir_roundtrips(sig in signature(), size in 1usize..24, vec in prop::sample::select(vec![2usize, 4, 8])) {
        let g = make_kernel(&KernelSpec::new(sig, size, Opcode::Mul)).unwrap();
        let out = graphvec::search::prospect(&g, vec, &graphvec::search::SearchLimits::default()).unwrap();
        let text = to_vector_ir(&out.vector);
        let back = parse_vector_ir(&text).unwrap();
        prop_assert_eq!(&back, &out.vector);
        prop_assert_eq!(to_vector_ir(&back), text);
    }
}
