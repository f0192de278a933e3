//! Problem instances: service centers, penalty schedules, the demand/center
//! cost matrix, and evaluation of the objective.

use std::fmt;
use std::ops::Add;

use thiserror::Error;

use crate::allotment::Allotment;

pub type CenterId = usize;
pub type DemandId = usize;

/// An integer cost that may be infinite.
///
/// `Infinite` absorbs every finite value under addition and compares greater
/// than all of them, so hard capacity limits never wrap around in arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtCost {
    Finite(i64),
    Infinite,
}

impl ExtCost {
    pub const ZERO: ExtCost = ExtCost::Finite(0);

    pub fn finite(self) -> Option<i64> {
        match self {
            ExtCost::Finite(v) => Some(v),
            ExtCost::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtCost::Infinite)
    }
}

impl Add for ExtCost {
    type Output = ExtCost;

    fn add(self, rhs: ExtCost) -> ExtCost {
        match (self, rhs) {
            (ExtCost::Finite(a), ExtCost::Finite(b)) => ExtCost::Finite(a.saturating_add(b)),
            _ => ExtCost::Infinite,
        }
    }
}

impl From<i64> for ExtCost {
    fn from(v: i64) -> Self {
        ExtCost::Finite(v)
    }
}

impl fmt::Display for ExtCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtCost::Finite(v) => write!(f, "{v}"),
            ExtCost::Infinite => f.write_str("inf"),
        }
    }
}

/// Shape of an overload penalty schedule. `value(u)` is the extra cost of
/// the `u`-th allotment beyond capacity (`u >= 1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PenaltySpec {
    Constant(i64),
    Linear {
        base: i64,
        step: i64,
    },
    /// Explicit values; evaluation past the end repeats the last entry.
    Table(Vec<i64>),
}

impl PenaltySpec {
    pub fn value(&self, overload: usize) -> i64 {
        debug_assert!(overload >= 1);
        match self {
            PenaltySpec::Constant(v) => *v,
            PenaltySpec::Linear { base, step } => {
                let extra = step.saturating_mul(overload.saturating_sub(1) as i64);
                base.saturating_add(extra)
            }
            PenaltySpec::Table(values) => {
                let idx = (overload - 1).min(values.len() - 1);
                values[idx]
            }
        }
    }

    fn check(&self, center: CenterId) -> Result<(), InstanceError> {
        let positive = |v: i64| {
            if v >= 1 {
                Ok(())
            } else {
                Err(InstanceError::NonPositivePenalty { center })
            }
        };
        match self {
            PenaltySpec::Constant(v) => positive(*v),
            PenaltySpec::Linear { base, step } => {
                positive(*base)?;
                if *step < 0 {
                    return Err(InstanceError::NonMonotonePenalty { center });
                }
                Ok(())
            }
            PenaltySpec::Table(values) => {
                if values.is_empty() {
                    return Err(InstanceError::EmptyPenaltyTable { center });
                }
                for v in values {
                    positive(*v)?;
                }
                if values.windows(2).any(|w| w[1] < w[0]) {
                    return Err(InstanceError::NonMonotonePenalty { center });
                }
                Ok(())
            }
        }
    }
}

/// Penalty behavior of a center once it is past capacity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CenterPenalty {
    Schedule(PenaltySpec),
    /// Overloading is forbidden.
    Infinite,
    /// Overloading is free. Only produced by [`reduce_no_overload`] for the
    /// virtual overflow center.
    Zero,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServiceCenter {
    pub id: CenterId,
    pub capacity: usize,
    pub penalty: CenterPenalty,
    /// Horizontal offset of the penalty schedule. Positive values push the
    /// schedule to the right (the first `shift` overloads are free), negative
    /// values pull it to the left.
    pub shift: i64,
}

impl ServiceCenter {
    pub fn new(id: CenterId, capacity: usize, penalty: CenterPenalty) -> Self {
        ServiceCenter {
            id,
            capacity,
            penalty,
            shift: 0,
        }
    }

    /// Extra cost charged for the `level`-th demand unit held by this
    /// center. Zero at or below capacity; `level` may be zero or negative.
    pub fn marginal_penalty(&self, level: i64) -> ExtCost {
        let capacity = self.capacity as i64;
        if level <= capacity {
            return ExtCost::ZERO;
        }
        match &self.penalty {
            CenterPenalty::Zero => ExtCost::ZERO,
            CenterPenalty::Infinite => ExtCost::Infinite,
            CenterPenalty::Schedule(spec) => {
                let overload = level - capacity - self.shift;
                if overload <= 0 {
                    ExtCost::ZERO
                } else {
                    ExtCost::Finite(spec.value(overload as usize))
                }
            }
        }
    }

    /// Total penalty paid when the center holds `occupancy` units.
    pub fn total_penalty(&self, occupancy: usize) -> ExtCost {
        let capacity = self.capacity;
        if occupancy <= capacity {
            return ExtCost::ZERO;
        }
        match &self.penalty {
            CenterPenalty::Zero => ExtCost::ZERO,
            CenterPenalty::Infinite => ExtCost::Infinite,
            CenterPenalty::Schedule(_) => ((capacity + 1)..=occupancy)
                .map(|t| self.marginal_penalty(t as i64))
                .fold(ExtCost::ZERO, |acc, p| acc + p),
        }
    }
}

/// Dense `n x k` matrix of positive assignment costs, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostMatrix {
    centers: usize,
    entries: Vec<i64>,
}

impl CostMatrix {
    pub fn new(centers: usize) -> Self {
        CostMatrix {
            centers,
            entries: Vec::new(),
        }
    }

    pub fn from_rows(centers: usize, rows: &[Vec<i64>]) -> Result<Self, InstanceError> {
        let mut matrix = CostMatrix::new(centers);
        for (demand, row) in rows.iter().enumerate() {
            check_row(centers, demand, row)?;
            matrix.entries.extend_from_slice(row);
        }
        Ok(matrix)
    }

    pub fn centers(&self) -> usize {
        self.centers
    }

    pub fn rows(&self) -> usize {
        self.entries.len().checked_div(self.centers).unwrap_or(0)
    }

    #[inline]
    pub fn get(&self, demand: DemandId, center: CenterId) -> i64 {
        self.entries[demand * self.centers + center]
    }

    pub fn row(&self, demand: DemandId) -> &[i64] {
        &self.entries[demand * self.centers..(demand + 1) * self.centers]
    }

    pub fn push_row(&mut self, row: &[i64]) -> Result<DemandId, InstanceError> {
        let demand = self.rows();
        check_row(self.centers, demand, row)?;
        self.entries.extend_from_slice(row);
        Ok(demand)
    }

    pub fn max_entry(&self) -> i64 {
        self.entries.iter().copied().max().unwrap_or(0)
    }
}

fn check_row(centers: usize, demand: DemandId, row: &[i64]) -> Result<(), InstanceError> {
    if row.len() != centers {
        return Err(InstanceError::DimensionMismatch {
            demand,
            expected: centers,
            found: row.len(),
        });
    }
    if let Some(center) = row.iter().position(|&c| c < 1) {
        return Err(InstanceError::NonPositiveCost { demand, center });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    OverloadAllowed,
    HardCapacity,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::OverloadAllowed => "overload_allowed",
            Mode::HardCapacity => "hard_capacity",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemInstance {
    pub centers: Vec<ServiceCenter>,
    pub cost: CostMatrix,
    pub mode: Mode,
}

impl ProblemInstance {
    pub fn center_count(&self) -> usize {
        self.centers.len()
    }

    pub fn demand_count(&self) -> usize {
        self.cost.rows()
    }

    pub fn marginal_penalty(&self, center: CenterId, level: i64) -> ExtCost {
        self.centers[center].marginal_penalty(level)
    }

    pub fn total_capacity(&self) -> usize {
        self.centers.iter().map(|c| c.capacity).sum()
    }
}

/// Penalty as written in an instance description, before validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawPenalty {
    Spec(PenaltySpec),
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawCenter {
    pub id: i64,
    pub capacity: i64,
    pub penalty: RawPenalty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawInstance {
    pub centers: Vec<RawCenter>,
    pub costs: Vec<Vec<i64>>,
    pub mode: Mode,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("cost of demand {demand} at center {center} must be a positive integer")]
    NonPositiveCost { demand: DemandId, center: CenterId },
    #[error("penalty schedule of center {center} is not nondecreasing")]
    NonMonotonePenalty { center: CenterId },
    #[error("penalty schedule of center {center} has a non-positive value")]
    NonPositivePenalty { center: CenterId },
    #[error("penalty table of center {center} is empty")]
    EmptyPenaltyTable { center: CenterId },
    #[error("cost row of demand {demand} has {found} entries, expected {expected}")]
    DimensionMismatch {
        demand: DemandId,
        expected: usize,
        found: usize,
    },
    #[error("center id {id} appears more than once")]
    DuplicateId { id: i64 },
    #[error("center id {id} is out of range for {count} centers")]
    IdOutOfRange { id: i64, count: usize },
    #[error("capacity of center {center} is negative")]
    NegativeCapacity { center: CenterId },
    #[error("center {center} has an infinite penalty but the instance allows overloads")]
    InfiniteWithoutHardCapacity { center: CenterId },
    #[error("demand {demand} is not assigned to any center")]
    UnassignedDemand { demand: DemandId },
    #[error("an instance needs at least one service center")]
    NoCenters,
    #[error("operation requires mode {expected}")]
    WrongMode { expected: &'static str },
}

pub fn validate_instance(raw: RawInstance) -> Result<ProblemInstance, InstanceError> {
    let count = raw.centers.len();
    if count == 0 {
        return Err(InstanceError::NoCenters);
    }
    let mut slots: Vec<Option<ServiceCenter>> = vec![None; count];
    for c in raw.centers {
        if c.id < 0 || c.id as usize >= count {
            return Err(InstanceError::IdOutOfRange { id: c.id, count });
        }
        let id = c.id as usize;
        if slots[id].is_some() {
            return Err(InstanceError::DuplicateId { id: c.id });
        }
        if c.capacity < 0 {
            return Err(InstanceError::NegativeCapacity { center: id });
        }
        let penalty = match (raw.mode, c.penalty) {
            (Mode::HardCapacity, _) => CenterPenalty::Infinite,
            (Mode::OverloadAllowed, RawPenalty::Infinite) => {
                return Err(InstanceError::InfiniteWithoutHardCapacity { center: id })
            }
            (Mode::OverloadAllowed, RawPenalty::Spec(spec)) => {
                spec.check(id)?;
                CenterPenalty::Schedule(spec)
            }
        };
        slots[id] = Some(ServiceCenter::new(id, c.capacity as usize, penalty));
    }
    // Every slot is filled: `count` distinct in-range ids were seen.
    let centers: Vec<ServiceCenter> = slots.into_iter().map(Option::unwrap).collect();
    let cost = CostMatrix::from_rows(count, &raw.costs)?;
    Ok(ProblemInstance {
        centers,
        cost,
        mode: raw.mode,
    })
}

impl ProblemInstance {
    /// Builds and validates an instance from schedules and cost rows.
    pub fn with_schedules(
        centers: &[(usize, PenaltySpec)],
        costs: &[Vec<i64>],
    ) -> Result<Self, InstanceError> {
        validate_instance(RawInstance {
            centers: centers
                .iter()
                .enumerate()
                .map(|(id, (capacity, spec))| RawCenter {
                    id: id as i64,
                    capacity: *capacity as i64,
                    penalty: RawPenalty::Spec(spec.clone()),
                })
                .collect(),
            costs: costs.to_vec(),
            mode: Mode::OverloadAllowed,
        })
    }

    /// Builds and validates a hard-capacity instance.
    pub fn with_hard_capacities(
        capacities: &[usize],
        costs: &[Vec<i64>],
    ) -> Result<Self, InstanceError> {
        validate_instance(RawInstance {
            centers: capacities
                .iter()
                .enumerate()
                .map(|(id, capacity)| RawCenter {
                    id: id as i64,
                    capacity: *capacity as i64,
                    penalty: RawPenalty::Infinite,
                })
                .collect(),
            costs: costs.to_vec(),
            mode: Mode::HardCapacity,
        })
    }
}

/// Cost of assigning demands to centers plus every center's overload
/// penalty. Fails if any demand slot is unassigned.
pub fn objective_cost(
    instance: &ProblemInstance,
    allotment: &Allotment,
) -> Result<ExtCost, InstanceError> {
    for demand in 0..instance.demand_count() {
        if allotment.center_of(demand).is_none() {
            return Err(InstanceError::UnassignedDemand { demand });
        }
    }
    Ok(assigned_cost(instance, allotment))
}

/// Objective restricted to the demands currently assigned; unassigned slots
/// contribute nothing.
pub fn assigned_cost(instance: &ProblemInstance, allotment: &Allotment) -> ExtCost {
    let mut total = ExtCost::ZERO;
    for (center, spec) in instance.centers.iter().enumerate() {
        let transfer: i64 = allotment
            .members(center)
            .iter()
            .map(|&d| instance.cost.get(d, center))
            .sum();
        total = total + ExtCost::Finite(transfer) + spec.total_penalty(allotment.occupancy(center));
    }
    total
}

/// Turns a hard-capacity instance into an overload-allowed one with an
/// extra overflow center: real centers get infinite penalties, the overflow
/// center costs one more than the largest matrix entry for every demand and
/// never charges a penalty.
pub fn reduce_no_overload(instance: &ProblemInstance) -> Result<ProblemInstance, InstanceError> {
    if instance.mode != Mode::HardCapacity {
        return Err(InstanceError::WrongMode {
            expected: Mode::HardCapacity.as_str(),
        });
    }
    let k = instance.center_count();
    let n = instance.demand_count();
    let overflow_cost = instance.cost.max_entry() + 1;
    let mut centers: Vec<ServiceCenter> = instance
        .centers
        .iter()
        .map(|c| ServiceCenter::new(c.id, c.capacity, CenterPenalty::Infinite))
        .collect();
    centers.push(ServiceCenter::new(k, n, CenterPenalty::Zero));
    let mut cost = CostMatrix::new(k + 1);
    for d in 0..n {
        let mut row = instance.cost.row(d).to_vec();
        row.push(overflow_cost);
        cost.push_row(&row)?;
    }
    Ok(ProblemInstance {
        centers,
        cost,
        mode: Mode::OverloadAllowed,
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Two centers of capacity one, constant penalty 10, three demands.
    pub fn i1() -> ProblemInstance {
        ProblemInstance::with_schedules(
            &[
                (1, PenaltySpec::Constant(10)),
                (1, PenaltySpec::Constant(10)),
            ],
            &[vec![1, 5], vec![2, 4], vec![6, 3]],
        )
        .unwrap()
    }
}
