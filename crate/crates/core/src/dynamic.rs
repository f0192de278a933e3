//! Keeping an allotment optimal while the instance changes.
//!
//! Every public operation changes one center's view of the world and then
//! removes at most one negative loop anchored at that center (two for an
//! insertion, which is split into a transfer half and an occupancy half).
//! The state is loop-free, hence optimal, between operations.

use thiserror::Error;

use crate::allotment::{apply_loop, Allotment, Loop};
use crate::instance::{
    assigned_cost, CenterId, CenterPenalty, CostMatrix, DemandId, ExtCost, InstanceError,
    ProblemInstance,
};
use crate::multigraph::{update_after_move, TransferHeapSet};
use crate::negloop::{any_negative_loop_through, most_negative_loop, NegLoopError, Variant};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("bad cost row: {0}")]
    BadCostRow(InstanceError),
    #[error("demand {demand} is not currently assigned")]
    UnknownDemand { demand: DemandId },
    #[error("center {center} does not exist")]
    UnknownCenter { center: CenterId },
    #[error("capacity of center {center} cannot go below zero")]
    NegativeCapacity { center: CenterId },
    #[error("center {center} forbids overloads and holds more than the new capacity")]
    CapacityBelowOccupancy { center: CenterId },
    #[error("center {center} has an infinite penalty, which cannot be shifted")]
    InfinitePenaltyImmutable { center: CenterId },
    #[error("center {center} is the overflow center, whose penalty cannot be shifted")]
    VirtualCenterImmutable { center: CenterId },
    #[error("no center can take another demand unit without an infinite penalty")]
    NoAdmissibleCenter,
    #[error(transparent)]
    Search(#[from] NegLoopError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CapacityDelta {
    Increase,
    Decrease,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShiftDirection {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperationKind {
    Insert,
    Remove,
    Capacity,
    Shift,
}

impl OperationKind {
    /// Number of loop removals the operation is entitled to.
    pub fn removal_budget(self) -> usize {
        match self {
            OperationKind::Insert => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub operations: u64,
    pub loops_removed: u64,
    pub searches: u64,
    /// Most loops removed by a single insertion.
    pub max_insert_removals: usize,
    /// Most loops removed by a single removal, capacity or shift update.
    pub max_update_removals: usize,
    /// Operations that removed more loops than allowed, or after which the
    /// full check still found a negative loop. Zero unless something is
    /// wrong.
    pub budget_violations: u64,
    /// Loops removed by the full check on top of the prescribed ones.
    pub extra_removals: u64,
}

/// Mutable optimal-allotment state.
#[derive(Clone, Debug)]
pub struct Engine {
    instance: ProblemInstance,
    allotment: Allotment,
    heaps: TransferHeapSet,
    stats: EngineStats,
    full_check: bool,
}

impl Engine {
    /// Empty engine over the centers of `instance`. Its cost rows are
    /// ignored; demands enter through [`Engine::insert_demand`].
    pub fn new(instance: &ProblemInstance) -> Self {
        let k = instance.center_count();
        let blank = ProblemInstance {
            centers: instance.centers.clone(),
            cost: CostMatrix::new(k),
            mode: instance.mode,
        };
        Engine {
            instance: blank,
            allotment: Allotment::new(k, 0),
            heaps: TransferHeapSet::new(k),
            stats: EngineStats::default(),
            full_check: cfg!(debug_assertions),
        }
    }

    /// Enables or disables the full loop scan after each operation. On by
    /// default in debug builds.
    pub fn set_full_check(&mut self, enabled: bool) {
        self.full_check = enabled;
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn allotment(&self) -> &Allotment {
        &self.allotment
    }

    pub fn stats(&self) -> &EngineStats {
        &self.stats
    }

    /// Demand ids currently assigned, ascending.
    pub fn active_demands(&self) -> Vec<DemandId> {
        self.allotment.assignments().map(|(d, _)| d).collect()
    }

    pub fn objective(&self) -> ExtCost {
        assigned_cost(&self.instance, &self.allotment)
    }

    /// Standalone instance holding only the active demands (in ascending id
    /// order) and the current capacities and penalty shifts.
    pub fn current_instance(&self) -> ProblemInstance {
        let k = self.instance.center_count();
        let mut cost = CostMatrix::new(k);
        for d in self.active_demands() {
            cost.push_row(self.instance.cost.row(d))
                .expect("stored rows are valid");
        }
        ProblemInstance {
            centers: self.instance.centers.clone(),
            cost,
            mode: self.instance.mode,
        }
    }

    pub fn insert_demand(&mut self, cost_row: &[i64]) -> Result<DemandId, EngineError> {
        let k = self.instance.center_count();
        let mut probe = CostMatrix::new(k);
        probe.push_row(cost_row).map_err(EngineError::BadCostRow)?;

        // Cheapest center that can still take a unit.
        let entry = (0..k)
            .filter(|&c| {
                let level = self.allotment.occupancy(c) as i64 + 1;
                !self.instance.marginal_penalty(c, level).is_infinite()
            })
            .min_by_key(|&c| (cost_row[c], c))
            .ok_or(EngineError::NoAdmissibleCenter)?;

        let demand = self
            .instance
            .cost
            .push_row(cost_row)
            .map_err(EngineError::BadCostRow)?;
        self.allotment.assign(demand, entry);
        self.heaps.on_assign(&self.instance, demand, entry);

        // The new unit's transfers exist, but its arrival is not yet counted
        // against the entry center's penalty.
        self.allotment.set_deferred(Some(entry));
        let transfer_half = self.remove_one(entry, Variant::Through);
        self.allotment.set_deferred(None);
        let removed = transfer_half? + self.remove_one(entry, Variant::Start)?;
        self.finish(OperationKind::Insert, removed)?;
        Ok(demand)
    }

    pub fn remove_demand(&mut self, demand: DemandId) -> Result<(), EngineError> {
        let center = self
            .allotment
            .unassign(demand)
            .ok_or(EngineError::UnknownDemand { demand })?;
        self.heaps.on_remove(demand);
        let removed = self.remove_one(center, Variant::Through)?;
        self.finish(OperationKind::Remove, removed)
    }

    pub fn change_capacity(
        &mut self,
        center: CenterId,
        delta: CapacityDelta,
    ) -> Result<(), EngineError> {
        self.check_center(center)?;
        let variant = match delta {
            CapacityDelta::Increase => {
                self.instance.centers[center].capacity += 1;
                Variant::Through
            }
            CapacityDelta::Decrease => {
                let c = &self.instance.centers[center];
                if c.capacity == 0 {
                    return Err(EngineError::NegativeCapacity { center });
                }
                let hard = c.penalty == CenterPenalty::Infinite;
                if hard && self.allotment.occupancy(center) > c.capacity - 1 {
                    return Err(EngineError::CapacityBelowOccupancy { center });
                }
                self.instance.centers[center].capacity -= 1;
                Variant::Start
            }
        };
        let removed = self.remove_one(center, variant)?;
        self.finish(OperationKind::Capacity, removed)
    }

    pub fn shift_penalty(
        &mut self,
        center: CenterId,
        direction: ShiftDirection,
    ) -> Result<(), EngineError> {
        self.check_center(center)?;
        match self.instance.centers[center].penalty {
            CenterPenalty::Infinite => {
                return Err(EngineError::InfinitePenaltyImmutable { center })
            }
            CenterPenalty::Zero => return Err(EngineError::VirtualCenterImmutable { center }),
            CenterPenalty::Schedule(_) => {}
        }
        let variant = match direction {
            ShiftDirection::Right => {
                self.instance.centers[center].shift += 1;
                Variant::Through
            }
            ShiftDirection::Left => {
                self.instance.centers[center].shift -= 1;
                Variant::Start
            }
        };
        let removed = self.remove_one(center, variant)?;
        self.finish(OperationKind::Shift, removed)
    }

    /// Any negative loop left in the current state, found by a through
    /// search at every center.
    pub fn find_negative_loop(&mut self) -> Option<Loop> {
        (0..self.instance.center_count()).find_map(|j| {
            any_negative_loop_through(&self.instance, &self.allotment, &mut self.heaps, j)
        })
    }

    fn check_center(&self, center: CenterId) -> Result<(), EngineError> {
        if center < self.instance.center_count() {
            Ok(())
        } else {
            Err(EngineError::UnknownCenter { center })
        }
    }

    fn remove_one(&mut self, anchor: CenterId, variant: Variant) -> Result<usize, EngineError> {
        self.stats.searches += 1;
        let found = most_negative_loop(
            &self.instance,
            &self.allotment,
            &mut self.heaps,
            anchor,
            variant,
        )?;
        match found {
            Some(lp) => {
                self.apply(&lp);
                Ok(1)
            }
            None => Ok(0),
        }
    }

    fn apply(&mut self, lp: &Loop) {
        debug_assert!(lp.cost() < 0);
        apply_loop(&mut self.allotment, lp).expect("loop was built from the current state");
        for t in lp.transfers() {
            update_after_move(&mut self.heaps, &self.instance, t.demand, t.from, t.to);
        }
        self.stats.loops_removed += 1;
    }

    fn finish(&mut self, kind: OperationKind, removed: usize) -> Result<(), EngineError> {
        self.stats.operations += 1;
        let max = match kind {
            OperationKind::Insert => &mut self.stats.max_insert_removals,
            _ => &mut self.stats.max_update_removals,
        };
        *max = (*max).max(removed);
        let mut violated = removed > kind.removal_budget();
        if self.full_check {
            while let Some(lp) = self.find_negative_loop() {
                violated = true;
                self.apply(&lp);
                self.stats.extra_removals += 1;
            }
        }
        if violated {
            self.stats.budget_violations += 1;
        }
        Ok(())
    }
}
