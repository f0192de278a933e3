use std::cmp::Reverse;
use std::collections::BinaryHeap;

use lbdd::generate::{random_small, shuffled};
use lbdd::multigraph::build_heaps;
use lbdd::negloop::{
    bellman_ford, build_negloop_through, extract_loop_through, EdgeKind, NegLoopEdge, NegLoopGraph,
};
use lbdd::oracle::{exhaustive_solve, mincost_flow_solve};
use lbdd::solver::solve_in_order;
use lbdd::{
    apply_loop, objective_cost, solve, verify_optimal, Allotment, Closure, ExtCost, Loop,
    PenaltySpec, ProblemInstance, ServiceCenter, SolveOptions, Transfer,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn total(instance: &ProblemInstance, a: &Allotment) -> i64 {
    objective_cost(instance, a).unwrap().finite().unwrap()
}

fn random_allotment(r: &mut ChaCha8Rng, k: usize, n: usize) -> Allotment {
    let assignment: Vec<usize> = (0..n).map(|_| r.gen_range(0..k)).collect();
    Allotment::from_assignment(k, &assignment)
}

/// A random simple loop on `a`, or `None` if the draw is not a valid loop.
fn random_loop(r: &mut ChaCha8Rng, instance: &ProblemInstance, a: &Allotment) -> Option<Loop> {
    let k = instance.center_count();
    let mut order = shuffled(r, k);
    let len = r.gen_range(1..=k);
    order.truncate(len);
    let cycle = len >= 2 && r.gen_bool(0.5);
    let mut transfers = Vec::new();
    for i in 0..len {
        let from = order[i];
        let to = if i + 1 < len {
            order[i + 1]
        } else if cycle {
            order[0]
        } else {
            // Penalty closure: end at a center that is not a source.
            let free: Vec<usize> = (0..k).filter(|c| !order.contains(c)).collect();
            if free.is_empty() {
                return None;
            }
            free[r.gen_range(0..free.len())]
        };
        let members = a.members(from);
        if members.is_empty() {
            return None;
        }
        let demand = members[r.gen_range(0..members.len())];
        transfers.push(Transfer { from, to, demand });
    }
    let closure = if cycle {
        Closure::Cycle
    } else {
        Closure::Penalty {
            from: transfers.last().unwrap().to,
            to: order[0],
        }
    };
    Some(Loop::priced(instance, a, transfers, closure).unwrap())
}

fn dijkstra(graph: &NegLoopGraph) -> Option<i64> {
    let mut dist = vec![i64::MAX; graph.node_count()];
    let mut heap = BinaryHeap::new();
    dist[graph.source()] = 0;
    heap.push(Reverse((0, graph.source())));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for e in graph.edges().iter().filter(|e| e.from == u) {
            if d + e.weight < dist[e.to] {
                dist[e.to] = d + e.weight;
                heap.push(Reverse((dist[e.to], e.to)));
            }
        }
    }
    (dist[graph.target()] != i64::MAX).then_some(dist[graph.target()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn loop_cost_is_exact_objective_change(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.gen_range(2..=5);
        let n = r.gen_range(1..=12);
        let inst = random_small(&mut r, k, n, 0..=3, 50);
        let a = random_allotment(&mut r, k, n);
        for _ in 0..100 {
            let Some(lp) = random_loop(&mut r, &inst, &a) else { continue };
            let mut b = a.clone();
            apply_loop(&mut b, &lp).unwrap();
            prop_assert_eq!(total(&inst, &b) - total(&inst, &a), lp.cost());

            let occupancy = |x: &Allotment| (0..k).map(|c| x.occupancy(c)).collect::<Vec<_>>();
            let (before, after) = (occupancy(&a), occupancy(&b));
            match lp.closure() {
                Closure::Cycle => prop_assert_eq!(before, after),
                Closure::Penalty { from, to } => {
                    for c in 0..k {
                        let expected = before[c] + usize::from(c == from) - usize::from(c == to);
                        prop_assert_eq!(after[c], expected);
                    }
                }
            }
            prop_assert_eq!(b.assigned_count(), n);
        }
    }

    #[test]
    fn total_penalty_depends_only_on_occupancy(
        capacity in 0usize..5,
        table in prop::collection::vec(1i64..10, 1..4),
        occupancy in 0usize..12,
        shift in -3i64..3,
    ) {
        let mut values = table;
        for i in 1..values.len() {
            values[i] += values[i - 1];
        }
        let mut center = ServiceCenter::new(0, capacity, lbdd::CenterPenalty::Schedule(PenaltySpec::Table(values)));
        center.shift = shift;
        let mut sum = ExtCost::ZERO;
        for level in 1..=occupancy {
            sum = sum + center.marginal_penalty(level as i64);
        }
        prop_assert_eq!(center.total_penalty(occupancy), sum);
    }

    #[test]
    fn bellman_ford_matches_dijkstra_on_nonnegative_weights(
        seed in any::<u64>(),
        k in 2usize..7,
        density in 0.1f64..1.0,
    ) {
        let mut r = rng(seed);
        let anchor = r.gen_range(0..k);
        let mut edges = Vec::new();
        for from in 0..k {
            for to in 0..=k {
                if to == anchor || to == from || !r.gen_bool(density) {
                    continue;
                }
                edges.push(NegLoopEdge { from, to, weight: r.gen_range(0..30), kind: EdgeKind::Penalty });
            }
        }
        let graph = NegLoopGraph::from_edges(k, anchor, edges);
        let result = bellman_ford(&graph).unwrap();
        match dijkstra(&graph) {
            Some(d) => {
                prop_assert!(result.feasible);
                prop_assert_eq!(result.cost, d);
                prop_assert_eq!(result.path.iter().map(|e| e.weight).sum::<i64>(), d);
                prop_assert_eq!(result.path.first().unwrap().from, graph.source());
                prop_assert_eq!(result.path.last().unwrap().to, graph.target());
            }
            None => prop_assert!(!result.feasible),
        }
    }

    #[test]
    fn certificate_agrees_with_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.gen_range(1..=3);
        let n = r.gen_range(0..=8);
        let inst = random_small(&mut r, k, n, 0..=3, 30);
        let a = random_allotment(&mut r, k, n);
        let optimum = exhaustive_solve(&inst).unwrap().objective;
        let here = total(&inst, &a);
        match verify_optimal(&inst, &a).unwrap() {
            lbdd::Certificate::Optimal => prop_assert_eq!(here, optimum),
            lbdd::Certificate::NotOptimal(lp) => {
                prop_assert!(here > optimum);
                prop_assert!(lp.cost() < 0);
                let mut b = a.clone();
                apply_loop(&mut b, &lp).unwrap();
                prop_assert_eq!(total(&inst, &b), here + lp.cost());
            }
        }
    }

    #[test]
    fn enumeration_and_flow_agree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.gen_range(1..=3);
        let n = r.gen_range(0..=7);
        let inst = random_small(&mut r, k, n, 0..=3, 60);
        prop_assert_eq!(exhaustive_solve(&inst).unwrap().objective, mincost_flow_solve(&inst).unwrap());
    }

    #[test]
    fn insertion_order_does_not_change_objective(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.gen_range(2..=5);
        let n = r.gen_range(0..=40);
        let inst = random_small(&mut r, k, n, 0..=6, 100);
        let reference = solve(&inst).unwrap().objective;
        let order = shuffled(&mut r, n);
        let options = SolveOptions { full_check: Some(false) };
        let shuffled_sol = solve_in_order(&inst, order, options).unwrap();
        prop_assert_eq!(shuffled_sol.objective, reference);
        prop_assert_eq!(shuffled_sol.allotment.assigned_count(), n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn spliced_loop_is_no_worse_than_its_path(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.gen_range(2..=4);
        let n = r.gen_range(1..=8);
        let inst = random_small(&mut r, k, n, 0..=3, 40);
        // Start from an optimal state and disturb one anchor only.
        let opt = solve(&inst).unwrap().allotment;
        let mut a = opt.clone();
        let d = r.gen_range(0..n);
        let anchor = r.gen_range(0..k);
        if a.center_of(d) != Some(anchor) {
            a.move_demand(d, anchor);
        }
        let mut heaps = build_heaps(&inst, &a);
        let graph = build_negloop_through(&inst, &a, &mut heaps, anchor);
        let Ok(result) = bellman_ford(&graph) else { return Ok(()) };
        if let Some(lp) = extract_loop_through(&inst, &a, &graph, &result) {
            prop_assert!(lp.cost() <= result.cost);
            let mut b = a.clone();
            apply_loop(&mut b, &lp).unwrap();
            prop_assert_eq!(total(&inst, &b) - total(&inst, &a), lp.cost());
        }
    }
}
