//! Whole-instance solving by repeated insertion, the optimality
//! certificate, and the hard-capacity variant.

use thiserror::Error;

use crate::allotment::{Allotment, Loop};
use crate::dynamic::{Engine, EngineError, EngineStats};
use crate::instance::{
    objective_cost, reduce_no_overload, CenterId, DemandId, ExtCost, InstanceError, Mode,
    ProblemInstance,
};
use crate::multigraph::build_heaps;
use crate::negloop::any_negative_loop_through;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub allotment: Allotment,
    pub objective: ExtCost,
    pub stats: EngineStats,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOptions {
    /// Run the full loop scan after every insertion. `None` keeps the
    /// engine default (on in debug builds).
    pub full_check: Option<bool>,
}

/// Inserts demands `0..n` in order into an empty engine.
pub fn solve(instance: &ProblemInstance) -> Result<Solution, SolveError> {
    solve_with(instance, SolveOptions::default())
}

pub fn solve_with(
    instance: &ProblemInstance,
    options: SolveOptions,
) -> Result<Solution, SolveError> {
    if instance.mode != Mode::OverloadAllowed {
        return Err(InstanceError::WrongMode {
            expected: Mode::OverloadAllowed.as_str(),
        }
        .into());
    }
    solve_in_order(instance, 0..instance.demand_count(), options)
}

/// Inserts the demands in the given order. Demand ids in the returned
/// allotment are the instance's row indices regardless of order.
pub fn solve_in_order(
    instance: &ProblemInstance,
    order: impl IntoIterator<Item = DemandId>,
    options: SolveOptions,
) -> Result<Solution, SolveError> {
    let mut engine = Engine::new(instance);
    if let Some(check) = options.full_check {
        engine.set_full_check(check);
    }
    let mut slot_of = vec![usize::MAX; instance.demand_count()];
    for d in order {
        slot_of[d] = engine.insert_demand(instance.cost.row(d))?;
    }
    let mut allotment = Allotment::new(instance.center_count(), instance.demand_count());
    for (d, &slot) in slot_of.iter().enumerate() {
        if let Some(c) = engine.allotment().center_of(slot) {
            allotment.assign(d, c);
        }
    }
    let objective = objective_cost(instance, &allotment)?;
    Ok(Solution {
        allotment,
        objective,
        stats: engine.stats().clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    Optimal,
    /// A negative loop; applying it strictly lowers the objective.
    NotOptimal(Loop),
}

impl Certificate {
    pub fn is_optimal(&self) -> bool {
        matches!(self, Certificate::Optimal)
    }
}

/// Checks for a negative loop through every center. None found means the
/// allotment is optimal.
pub fn verify_optimal(
    instance: &ProblemInstance,
    allotment: &Allotment,
) -> Result<Certificate, InstanceError> {
    objective_cost(instance, allotment)?;
    let mut heaps = build_heaps(instance, allotment);
    for anchor in 0..instance.center_count() {
        if let Some(lp) = any_negative_loop_through(instance, allotment, &mut heaps, anchor) {
            return Ok(Certificate::NotOptimal(lp));
        }
    }
    Ok(Certificate::Optimal)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HardSolution {
    pub assignment: Vec<Option<CenterId>>,
    /// Assignment cost over real centers only.
    pub objective: i64,
    pub unassigned: Vec<DemandId>,
}

/// Solves a hard-capacity instance through the overflow-center reduction.
/// Demands that end on the overflow center are reported unassigned.
pub fn solve_hard_capacity(instance: &ProblemInstance) -> Result<HardSolution, SolveError> {
    let reduced = reduce_no_overload(instance)?;
    let overflow = instance.center_count();
    let solution = solve(&reduced)?;
    let mut assignment = Vec::with_capacity(instance.demand_count());
    let mut unassigned = Vec::new();
    let mut objective = 0;
    for d in 0..instance.demand_count() {
        match solution.allotment.center_of(d) {
            Some(c) if c != overflow => {
                objective += instance.cost.get(d, c);
                assignment.push(Some(c));
            }
            _ => {
                unassigned.push(d);
                assignment.push(None);
            }
        }
    }
    Ok(HardSolution {
        assignment,
        objective,
        unassigned,
    })
}
