//! Cheapest transfer edge per ordered center pair, and penalty-edge weights.
//!
//! Every ordered pair `(i, j)` owns a min-heap of `(transfer cost, demand,
//! stamp)` entries for demands that were placed in `i`. A demand's stamp is
//! bumped whenever it moves or leaves, which turns all of its old entries
//! stale; stale entries are dropped when they reach the top of a heap.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::allotment::Allotment;
use crate::instance::{CenterId, DemandId, ExtCost, ProblemInstance};

/// Cheapest way to push one demand from `from` to `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MinEdge {
    pub from: CenterId,
    pub to: CenterId,
    pub demand: DemandId,
    pub weight: i64,
}

type Entry = Reverse<(i64, DemandId, u32)>;

#[derive(Clone, Debug)]
pub struct TransferHeapSet {
    centers: usize,
    heaps: Vec<BinaryHeap<Entry>>,
    stamps: Vec<u32>,
}

/// Heaps are rebuilt from live entries once they hold this many more
/// entries than twice the source center's occupancy.
const COMPACT_SLACK: usize = 64;

impl TransferHeapSet {
    pub fn new(centers: usize) -> Self {
        TransferHeapSet {
            centers,
            heaps: vec![BinaryHeap::new(); centers * centers],
            stamps: Vec::new(),
        }
    }

    #[inline]
    fn slot(&self, from: CenterId, to: CenterId) -> usize {
        from * self.centers + to
    }

    fn stamp(&mut self, demand: DemandId) -> u32 {
        if demand >= self.stamps.len() {
            self.stamps.resize(demand + 1, 0);
        }
        self.stamps[demand]
    }

    /// Total entries held, live or stale.
    pub fn entry_count(&self) -> usize {
        self.heaps.iter().map(BinaryHeap::len).sum()
    }

    /// Records that `demand` now sits in `center`: pushes its transfer cost
    /// to every other center.
    pub fn on_assign(&mut self, instance: &ProblemInstance, demand: DemandId, center: CenterId) {
        let stamp = self.stamp(demand);
        let row = instance.cost.row(demand);
        let here = row[center];
        for to in (0..self.centers).filter(|&l| l != center) {
            let slot = self.slot(center, to);
            self.heaps[slot].push(Reverse((row[to] - here, demand, stamp)));
        }
    }

    /// Invalidates every entry of `demand`.
    pub fn on_remove(&mut self, demand: DemandId) {
        self.stamp(demand);
        self.stamps[demand] = self.stamps[demand].wrapping_add(1);
    }

    /// Cheapest live transfer from `from` to `to`, or `None` if `from` holds
    /// no demand. Ties go to the smaller demand id.
    pub fn min_transfer_edge(
        &mut self,
        allotment: &Allotment,
        from: CenterId,
        to: CenterId,
    ) -> Option<MinEdge> {
        debug_assert_ne!(from, to);
        let slot = self.slot(from, to);
        let occupancy = allotment.occupancy(from);
        if self.heaps[slot].len() > 2 * occupancy + COMPACT_SLACK {
            let stamps = &self.stamps;
            let heap = std::mem::take(&mut self.heaps[slot]);
            self.heaps[slot] = heap
                .into_vec()
                .into_iter()
                .filter(|Reverse((_, d, s))| {
                    allotment.center_of(*d) == Some(from) && stamps[*d] == *s
                })
                .collect();
        }
        let heap = &mut self.heaps[slot];
        while let Some(&Reverse((weight, demand, stamp))) = heap.peek() {
            if allotment.center_of(demand) == Some(from) && self.stamps[demand] == stamp {
                return Some(MinEdge {
                    from,
                    to,
                    demand,
                    weight,
                });
            }
            heap.pop();
        }
        None
    }
}

/// Builds heaps for every assigned demand of `allotment`.
pub fn build_heaps(instance: &ProblemInstance, allotment: &Allotment) -> TransferHeapSet {
    let mut heaps = TransferHeapSet::new(instance.center_count());
    for (demand, center) in allotment.assignments() {
        heaps.on_assign(instance, demand, center);
    }
    heaps
}

/// Heap maintenance after `demand` moved from `from` to `to` in the
/// allotment.
pub fn update_after_move(
    heaps: &mut TransferHeapSet,
    instance: &ProblemInstance,
    demand: DemandId,
    from: CenterId,
    to: CenterId,
) {
    debug_assert_ne!(from, to);
    heaps.on_remove(demand);
    heaps.on_assign(instance, demand, to);
}

/// Weight of the penalty edge `from -> to`: the marginal penalty of one more
/// unit at `from` minus the marginal penalty released by one fewer unit at
/// `to`. Infinite when `from` cannot accept another unit.
pub fn penalty_edge_weight(
    instance: &ProblemInstance,
    allotment: &Allotment,
    from: CenterId,
    to: CenterId,
) -> ExtCost {
    debug_assert_ne!(from, to);
    let gain = instance.marginal_penalty(from, allotment.penalty_occupancy(from) + 1);
    let release = instance.marginal_penalty(to, allotment.penalty_occupancy(to));
    match (gain, release) {
        (ExtCost::Finite(g), ExtCost::Finite(r)) => ExtCost::Finite(g - r),
        // An over-capacity hard center is never a valid state; such edges are
        // treated as unusable rather than as unbounded gains.
        _ => ExtCost::Infinite,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::i1;
    use crate::instance::{CenterPenalty, ServiceCenter};

    /// Linear-scan reference for the cheapest transfer.
    fn scan(
        inst: &ProblemInstance,
        a: &Allotment,
        from: CenterId,
        to: CenterId,
    ) -> Option<MinEdge> {
        a.members(from)
            .iter()
            .map(|&d| (inst.cost.get(d, to) - inst.cost.get(d, from), d))
            .min()
            .map(|(weight, demand)| MinEdge {
                from,
                to,
                demand,
                weight,
            })
    }

    #[test]
    fn empty_allotment_has_no_edges() {
        let inst = i1();
        let a = Allotment::new(2, 3);
        let mut h = build_heaps(&inst, &a);
        assert_eq!(h.min_transfer_edge(&a, 0, 1), None);
        assert_eq!(h.min_transfer_edge(&a, 1, 0), None);
    }

    #[test]
    fn i1_minimum_edges_and_moves() {
        let inst = i1();
        let mut a = Allotment::from_assignment(2, &[0, 0, 1]);
        let mut h = build_heaps(&inst, &a);
        assert_eq!(
            h.min_transfer_edge(&a, 0, 1),
            Some(MinEdge {
                from: 0,
                to: 1,
                demand: 1,
                weight: 2
            })
        );
        assert_eq!(
            h.min_transfer_edge(&a, 1, 0),
            Some(MinEdge {
                from: 1,
                to: 0,
                demand: 2,
                weight: 3
            })
        );

        a.move_demand(1, 1);
        update_after_move(&mut h, &inst, 1, 0, 1);
        assert_eq!(
            h.min_transfer_edge(&a, 0, 1),
            Some(MinEdge {
                from: 0,
                to: 1,
                demand: 0,
                weight: 4
            })
        );
        assert_eq!(
            h.min_transfer_edge(&a, 1, 0),
            Some(MinEdge {
                from: 1,
                to: 0,
                demand: 1,
                weight: -2
            })
        );

        a.move_demand(0, 1);
        update_after_move(&mut h, &inst, 0, 0, 1);
        assert_eq!(h.min_transfer_edge(&a, 0, 1), None);
    }

    #[test]
    fn ties_prefer_smaller_demand() {
        let inst = ProblemInstance::with_schedules(
            &[
                (1, crate::PenaltySpec::Constant(1)),
                (1, crate::PenaltySpec::Constant(1)),
            ],
            &[vec![2, 3], vec![2, 3], vec![2, 3]],
        )
        .unwrap();
        let a = Allotment::from_assignment(2, &[0, 0, 0]);
        let mut h = build_heaps(&inst, &a);
        assert_eq!(h.min_transfer_edge(&a, 0, 1).unwrap().demand, 0);
    }

    #[test]
    fn penalty_weights() {
        let inst = i1();
        let under = Allotment::from_assignment(2, &[0]);
        assert_eq!(penalty_edge_weight(&inst, &under, 1, 0), ExtCost::ZERO);
        assert_eq!(
            penalty_edge_weight(&inst, &under, 0, 1),
            ExtCost::Finite(10)
        );
        let a = Allotment::from_assignment(2, &[0, 0, 1]);
        assert_eq!(penalty_edge_weight(&inst, &a, 1, 0), ExtCost::Finite(0));
        assert_eq!(penalty_edge_weight(&inst, &a, 0, 1), ExtCost::Finite(10));

        let mut hard = inst.clone();
        hard.centers[1] = ServiceCenter::new(1, 1, CenterPenalty::Infinite);
        assert_eq!(penalty_edge_weight(&hard, &a, 1, 0), ExtCost::Infinite);
    }

    #[test]
    fn deferred_occupancy_lowers_penalty_view() {
        let inst = i1();
        let mut a = Allotment::from_assignment(2, &[0, 0, 1]);
        a.set_deferred(Some(0));
        // Center 0 is priced as if holding one unit.
        assert_eq!(penalty_edge_weight(&inst, &a, 1, 0), ExtCost::Finite(10));
        assert_eq!(penalty_edge_weight(&inst, &a, 0, 1), ExtCost::Finite(10));
    }

    #[test]
    fn random_moves_match_linear_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let k = rng.gen_range(2..=5);
            let n = rng.gen_range(1..=30);
            let rows: Vec<Vec<i64>> = (0..n)
                .map(|_| (0..k).map(|_| rng.gen_range(1..=20)).collect())
                .collect();
            let inst = ProblemInstance::with_schedules(
                &vec![(1, crate::PenaltySpec::Constant(3)); k],
                &rows,
            )
            .unwrap();
            let assignment: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            let mut a = Allotment::from_assignment(k, &assignment);
            let mut h = build_heaps(&inst, &a);
            for _ in 0..1000 {
                let d = rng.gen_range(0..n);
                let from = a.center_of(d).unwrap();
                let to = (from + rng.gen_range(1..k)) % k;
                a.move_demand(d, to);
                update_after_move(&mut h, &inst, d, from, to);
                let i = rng.gen_range(0..k);
                let j = (i + rng.gen_range(1..k)) % k;
                assert_eq!(h.min_transfer_edge(&a, i, j), scan(&inst, &a, i, j));
            }
            for i in 0..k {
                for j in (0..k).filter(|&j| j != i) {
                    assert_eq!(h.min_transfer_edge(&a, i, j), scan(&inst, &a, i, j));
                }
            }
        }
    }
}
