//! Allotment state and the loop re-adjustment primitive.

use std::fmt;

use thiserror::Error;

use crate::instance::{CenterId, DemandId, ExtCost, ProblemInstance};
use crate::multigraph::penalty_edge_weight;

/// Assignment of demand units to centers.
///
/// Demand ids are slots `0..demand_slots()`; a slot may be unassigned (not
/// yet inserted, or removed). Members of each center are kept in an
/// unordered vector with a position index for O(1) removal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allotment {
    assign: Vec<Option<CenterId>>,
    position: Vec<usize>,
    members: Vec<Vec<DemandId>>,
    deferred: Option<CenterId>,
}

impl Allotment {
    pub fn new(centers: usize, demands: usize) -> Self {
        Allotment {
            assign: vec![None; demands],
            position: vec![usize::MAX; demands],
            members: vec![Vec::new(); centers],
            deferred: None,
        }
    }

    pub fn from_assignment(centers: usize, assignment: &[CenterId]) -> Self {
        let mut allotment = Allotment::new(centers, assignment.len());
        for (demand, &center) in assignment.iter().enumerate() {
            allotment.assign(demand, center);
        }
        allotment
    }

    pub fn center_count(&self) -> usize {
        self.members.len()
    }

    pub fn demand_slots(&self) -> usize {
        self.assign.len()
    }

    /// Grows the slot table so that `demand` is a valid (unassigned) slot.
    pub fn ensure_slot(&mut self, demand: DemandId) {
        if demand >= self.assign.len() {
            self.assign.resize(demand + 1, None);
            self.position.resize(demand + 1, usize::MAX);
        }
    }

    pub fn center_of(&self, demand: DemandId) -> Option<CenterId> {
        self.assign.get(demand).copied().flatten()
    }

    pub fn members(&self, center: CenterId) -> &[DemandId] {
        &self.members[center]
    }

    pub fn occupancy(&self, center: CenterId) -> usize {
        self.members[center].len()
    }

    pub fn assigned_count(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }

    /// Occupancy used when pricing penalty edges. Equal to [`occupancy`]
    /// except for a center whose latest arrival has not been counted yet
    /// (first half of an insertion), which reads one lower and may be -1.
    ///
    /// [`occupancy`]: Allotment::occupancy
    pub fn penalty_occupancy(&self, center: CenterId) -> i64 {
        let held = self.members[center].len() as i64;
        if self.deferred == Some(center) {
            held - 1
        } else {
            held
        }
    }

    pub fn deferred(&self) -> Option<CenterId> {
        self.deferred
    }

    pub fn set_deferred(&mut self, center: Option<CenterId>) {
        self.deferred = center;
    }

    /// Assigns an unassigned demand slot.
    pub fn assign(&mut self, demand: DemandId, center: CenterId) {
        self.ensure_slot(demand);
        assert!(
            self.assign[demand].is_none(),
            "demand {demand} is already assigned"
        );
        self.assign[demand] = Some(center);
        self.position[demand] = self.members[center].len();
        self.members[center].push(demand);
    }

    /// Unassigns a demand, returning the center it left.
    pub fn unassign(&mut self, demand: DemandId) -> Option<CenterId> {
        let center = self.center_of(demand)?;
        let pos = self.position[demand];
        let list = &mut self.members[center];
        list.swap_remove(pos);
        if let Some(&moved) = list.get(pos) {
            self.position[moved] = pos;
        }
        self.assign[demand] = None;
        self.position[demand] = usize::MAX;
        Some(center)
    }

    pub fn move_demand(&mut self, demand: DemandId, to: CenterId) {
        self.unassign(demand);
        self.assign(demand, to);
    }

    /// `(demand, center)` pairs for assigned demands, in demand order.
    pub fn assignments(&self) -> impl Iterator<Item = (DemandId, CenterId)> + '_ {
        self.assign
            .iter()
            .enumerate()
            .filter_map(|(d, c)| c.map(|c| (d, c)))
    }
}

/// Move of one demand unit between two centers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Transfer {
    pub from: CenterId,
    pub to: CenterId,
    pub demand: DemandId,
}

/// How a chain of transfers is closed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Closure {
    /// The chain ends where it started; occupancies are unchanged.
    Cycle,
    /// Penalty edge from the chain's last center back to its first: the
    /// first center loses one unit and the last gains one.
    Penalty { from: CenterId, to: CenterId },
}

/// A re-adjustment of the allotment: a simple chain of transfers plus its
/// closure, with the exact objective change it causes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Loop {
    transfers: Vec<Transfer>,
    closure: Closure,
    cost: i64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LoopError {
    #[error("a loop needs at least one transfer")]
    Empty,
    #[error("transfer {index} does not start where the previous one ended")]
    Broken { index: usize },
    #[error("closure does not connect the chain's endpoints")]
    BadClosure,
    #[error("center {center} is left more than once")]
    NotSimple { center: CenterId },
    #[error("penalty closure from center {from} to center {to} is infinite")]
    InfiniteClosure { from: CenterId, to: CenterId },
}

impl Loop {
    pub fn new(transfers: Vec<Transfer>, closure: Closure, cost: i64) -> Result<Self, LoopError> {
        let first = transfers.first().ok_or(LoopError::Empty)?;
        let last = transfers.last().unwrap();
        for (index, pair) in transfers.windows(2).enumerate() {
            if pair[0].to != pair[1].from {
                return Err(LoopError::Broken { index: index + 1 });
            }
        }
        let mut sources: Vec<CenterId> = transfers.iter().map(|t| t.from).collect();
        sources.sort_unstable();
        if let Some(w) = sources.windows(2).find(|w| w[0] == w[1]) {
            return Err(LoopError::NotSimple { center: w[0] });
        }
        match closure {
            Closure::Cycle => {
                if last.to != first.from {
                    return Err(LoopError::BadClosure);
                }
            }
            Closure::Penalty { from, to } => {
                if from != last.to || to != first.from || from == to {
                    return Err(LoopError::BadClosure);
                }
                if sources.binary_search(&from).is_ok() {
                    return Err(LoopError::NotSimple { center: from });
                }
            }
        }
        Ok(Loop {
            transfers,
            closure,
            cost,
        })
    }

    /// Builds a loop and prices it against the current state: the sum of
    /// transfer costs plus the penalty-edge weight of the closure.
    pub fn priced(
        instance: &ProblemInstance,
        allotment: &Allotment,
        transfers: Vec<Transfer>,
        closure: Closure,
    ) -> Result<Self, LoopError> {
        let mut cost: i64 = transfers
            .iter()
            .map(|t| instance.cost.get(t.demand, t.to) - instance.cost.get(t.demand, t.from))
            .sum();
        if let Closure::Penalty { from, to } = closure {
            match penalty_edge_weight(instance, allotment, from, to) {
                ExtCost::Finite(w) => cost += w,
                ExtCost::Infinite => return Err(LoopError::InfiniteClosure { from, to }),
            }
        }
        Loop::new(transfers, closure, cost)
    }

    pub fn transfers(&self) -> &[Transfer] {
        &self.transfers
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    pub fn cost(&self) -> i64 {
        self.cost
    }
}

impl fmt::Display for Loop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "loop cost {}:", self.cost)?;
        for t in &self.transfers {
            write!(f, " d{}:{}->{}", t.demand, t.from, t.to)?;
        }
        match self.closure {
            Closure::Cycle => write!(f, " (cycle)"),
            Closure::Penalty { from, to } => write!(f, " (penalty {from}->{to})"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AllotmentError {
    #[error("demand {demand} is no longer at center {expected}")]
    StaleLoop {
        demand: DemandId,
        expected: CenterId,
    },
}

/// Applies every transfer of `lp`. Nothing is moved unless all demands are
/// still where the loop expects them.
pub fn apply_loop(allotment: &mut Allotment, lp: &Loop) -> Result<(), AllotmentError> {
    for t in lp.transfers() {
        if allotment.center_of(t.demand) != Some(t.from) {
            return Err(AllotmentError::StaleLoop {
                demand: t.demand,
                expected: t.from,
            });
        }
    }
    for t in lp.transfers() {
        allotment.move_demand(t.demand, t.to);
    }
    Ok(())
}
